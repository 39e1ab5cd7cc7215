#pragma once

// CSV emission and atomic artifact writes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "spdc/compensation.hpp"
#include "spdc/error.hpp"
#include "spdc/expsim.hpp"
#include "spdc/phasematch.hpp"

namespace spdc::io {

/// Shortest round-trip-safe text for a double; identical across runs.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes to `<path>.tmp` and renames over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw Error(ErrorKind::Config, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot rename onto '" + path.string() + "': " + ec.message());
}

inline std::string spectrum_csv(const phasematch::Spectrum& s) {
  std::ostringstream os;
  os << "lambda_nm,density\n";
  for (std::size_t i = 0; i < s.lambda_nm.size(); ++i) {
    os << fmt(s.lambda_nm[i]) << ',' << fmt(s.density[i]) << '\n';
  }
  return os.str();
}

inline std::string scan_csv(const phasematch::BandwidthScan& scan) {
  std::ostringstream os;
  os << "L_mm,fwhm_nm\n";
  for (std::size_t i = 0; i < scan.length_mm.size(); ++i) {
    os << fmt(scan.length_mm[i]) << ',' << fmt(scan.fwhm_nm[i]) << '\n';
  }
  return os.str();
}

inline std::string phase_map_csv(const compensation::PhaseMap& m) {
  std::ostringstream os;
  os << "lambda_p_nm,lambda_nm,phi_rad\n";
  for (std::size_t i = 0; i < m.pump_nm.size(); ++i) {
    for (std::size_t j = 0; j < m.signal_nm.size(); ++j) {
      os << fmt(m.pump_nm[i]) << ',' << fmt(m.signal_nm[j]) << ',' << fmt(m.at(i, j)) << '\n';
    }
  }
  return os.str();
}

inline std::string power_table_csv(const std::vector<expsim::PowerRow>& rows) {
  std::ostringstream os;
  os << "power_mw,s1,s2,c_raw,c_corrected\n";
  for (const auto& r : rows) {
    os << fmt(r.power_mw) << ',' << fmt(r.singles_1) << ',' << fmt(r.singles_2) << ','
       << fmt(r.coincidences_raw) << ',' << fmt(r.coincidences_corrected) << '\n';
  }
  return os.str();
}

}  // namespace spdc::io
