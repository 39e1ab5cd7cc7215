#pragma once

// Scenario configuration (JSON, units in field names, unknown fields
// rejected) and the JSON form of count records.
//
// Top-level fields:
//   schema_version  1
//   materials_file  path, relative to the config file
//   seed            optional u64 (the --seed flag overrides it)
//   phasematch      { material, theta_p_deg, length_mm, pump_center_nm, pump_fwhm_nm }
//   stack           { compensator_material, pump_compensator_mm, pair_compensator_mm,
//                     pump_sign, pair_sign }   thicknesses null/absent = to be optimized
//   source          SourceParams fields (see parse_source)
//   index           { material, wavelength_nm, polarization: "ordinary"|"extraordinary",
//                     theta_deg, length_mm }
//   spectrum        { step_nm }
//   scan            { lengths_mm: [...] }
//   phasemap        { grid_points }
//   visibility      { grid_points }
//   simulate        { powers_mw, duration_s, alpha_deg, beta_deg,
//                     correlation_power_mw, correlation_duration_s }
//   analyze         { records_file }
//   metadata        free-form object, copied to reports

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spdc/compensation.hpp"
#include "spdc/error.hpp"
#include "spdc/expsim.hpp"
#include "spdc/materials.hpp"
#include "spdc/phasematch.hpp"

namespace spdc::scenario {

inline constexpr int kSchemaVersion = 1;

using nlohmann::json;

// Reads fields of one JSON object and rejects any it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw Error(ErrorKind::Config, where_ + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  template <class T>
  T get(const std::string& key) {
    if (!has(key)) throw Error(ErrorKind::Config, where_ + ": missing field '" + key + "'");
    return convert<T>(key);
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    return has(key) ? convert<T>(key) : fallback;
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return convert<T>(key);
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw Error(ErrorKind::Config, where_ + ": unknown field '" + it.key() + "'");
      }
    }
  }

 private:
  template <class T>
  T convert(const std::string& key) {
    try {
      return obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw Error(ErrorKind::Config, where_ + ": field '" + key + "' has the wrong type");
    }
  }

  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

struct StackSpec {
  std::string compensator_material = "YVO4";
  std::optional<double> pump_compensator_mm;
  std::optional<double> pair_compensator_mm;
  int pump_sign = +1;
  int pair_sign = +1;
};

struct IndexQuery {
  std::string material = "BBO";
  double wavelength_nm = 800.0;
  bool extraordinary = false;
  double theta_deg = 0.0;
  double length_mm = 0.0;
};

struct SimulateSpec {
  std::vector<double> powers_mw{1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
  double duration_s = 1.0;
  std::optional<double> alpha_deg;
  std::optional<double> beta_deg;
  double correlation_power_mw = 1.0;
  double correlation_duration_s = 10.0;
};

struct Scenario {
  std::filesystem::path config_path;
  std::filesystem::path materials_path;
  MaterialLibrary materials;
  std::optional<std::uint64_t> seed;
  phasematch::PhaseMatchConfig phasematch;
  StackSpec stack;
  expsim::SourceParams source;
  IndexQuery index;
  double spectrum_step_nm = phasematch::kDefaultSpectralStepNm;
  std::vector<double> scan_lengths_mm{3.94, 7.88, 15.76};
  std::size_t phasemap_points = compensation::kDefaultGridPoints;
  std::size_t visibility_points = compensation::kDefaultGridPoints;
  SimulateSpec simulate;
  std::optional<std::string> records_file;
  json metadata = json::object();

  /// Stack with the configured thicknesses (0 where left to the optimizer).
  compensation::OpticalStack optical_stack() const {
    return compensation::OpticalStack::two_crystal(
        phasematch, materials.get(stack.compensator_material), stack.pump_compensator_mm.value_or(0.0),
        stack.pair_compensator_mm.value_or(0.0), stack.pump_sign, stack.pair_sign);
  }

  bool compensators_given() const {
    return stack.pump_compensator_mm.has_value() && stack.pair_compensator_mm.has_value();
  }
};

inline expsim::SourceParams parse_source(const json& j) {
  ObjectReader r(j, "source");
  expsim::SourceParams p;
  p.pair_rate_per_mw = r.get_or("pair_rate_per_mw", p.pair_rate_per_mw);
  p.pump_power_mw = r.get_or("pump_power_mw", p.pump_power_mw);
  p.state_phase_rad = r.get_or("state_phase_rad", p.state_phase_rad);
  p.state_visibility = r.get_or("state_visibility", p.state_visibility);
  const std::string model = r.get_or<std::string>("state_model", "dephasing");
  if (model == "dephasing") {
    p.state_model = expsim::StateModel::Dephasing;
  } else if (model == "werner") {
    p.state_model = expsim::StateModel::Werner;
  } else {
    throw Error(ErrorKind::Config, "source: state_model must be 'dephasing' or 'werner'");
  }
  p.wdm_routing = r.get_or("wdm_routing", p.wdm_routing);
  p.coupling_efficiency = r.get_or("coupling_efficiency", p.coupling_efficiency);
  p.losses = r.get_or("losses", p.losses);
  if (r.has("detector_efficiency")) {
    const auto d = r.get<std::vector<double>>("detector_efficiency");
    if (d.size() != 2) throw Error(ErrorKind::Config, "source: detector_efficiency needs 2 entries");
    p.detector_efficiency_1 = d[0];
    p.detector_efficiency_2 = d[1];
  }
  p.coincidence_window_ns = r.get_or("coincidence_window_ns", p.coincidence_window_ns);
  p.background_fraction = r.get_or("background_fraction", p.background_fraction);
  r.finish();
  try {
    p.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return p;
}

inline Scenario parse(const json& doc, const std::filesystem::path& config_path) {
  Scenario s;
  s.config_path = config_path;
  ObjectReader top(doc, "config");
  if (top.get<int>("schema_version") != kSchemaVersion) {
    throw Error(ErrorKind::Config, "config: unsupported schema_version");
  }
  const std::filesystem::path base =
      config_path.has_parent_path() ? config_path.parent_path() : std::filesystem::path(".");
  s.materials_path = base / top.get<std::string>("materials_file");
  s.materials = MaterialLibrary::load(s.materials_path.string());
  s.seed = top.optional<std::uint64_t>("seed");

  {
    ObjectReader r(top.raw("phasematch"), "phasematch");
    s.phasematch.material = s.materials.get(r.get<std::string>("material"));
    s.phasematch.theta_p_deg = r.get<double>("theta_p_deg");
    s.phasematch.length_mm = r.get<double>("length_mm");
    s.phasematch.pump_center_nm = r.get<double>("pump_center_nm");
    s.phasematch.pump_fwhm_nm = r.get_or("pump_fwhm_nm", 0.0);
    r.finish();
    try {
      s.phasematch.validate();
    } catch (const Error& e) {
      // a pump outside the data range is a domain error; bad numbers are config errors
      if (e.kind() != ErrorKind::Range) throw Error(ErrorKind::Config, e.what());
    }
  }
  if (top.has("stack")) {
    ObjectReader r(top.raw("stack"), "stack");
    s.stack.compensator_material = r.get_or<std::string>("compensator_material", "YVO4");
    s.materials.get(s.stack.compensator_material);
    s.stack.pump_compensator_mm = r.optional<double>("pump_compensator_mm");
    s.stack.pair_compensator_mm = r.optional<double>("pair_compensator_mm");
    s.stack.pump_sign = r.get_or("pump_sign", 1);
    s.stack.pair_sign = r.get_or("pair_sign", 1);
    r.finish();
    if (std::abs(s.stack.pump_sign) != 1 || std::abs(s.stack.pair_sign) != 1) {
      throw Error(ErrorKind::Config, "stack: signs must be +1 or -1");
    }
  }
  if (top.has("source")) s.source = parse_source(top.raw("source"));
  if (top.has("index")) {
    ObjectReader r(top.raw("index"), "index");
    s.index.material = r.get_or<std::string>("material", s.phasematch.material.name);
    s.materials.get(s.index.material);
    s.index.wavelength_nm = r.get<double>("wavelength_nm");
    const std::string pol = r.get_or<std::string>("polarization", "ordinary");
    if (pol != "ordinary" && pol != "extraordinary") {
      throw Error(ErrorKind::Config, "index: polarization must be 'ordinary' or 'extraordinary'");
    }
    s.index.extraordinary = pol == "extraordinary";
    s.index.theta_deg = r.get_or("theta_deg", s.phasematch.theta_p_deg);
    s.index.length_mm = r.get_or("length_mm", s.phasematch.length_mm);
    r.finish();
  }
  if (top.has("spectrum")) {
    ObjectReader r(top.raw("spectrum"), "spectrum");
    s.spectrum_step_nm = r.get_or("step_nm", s.spectrum_step_nm);
    r.finish();
  }
  if (top.has("scan")) {
    ObjectReader r(top.raw("scan"), "scan");
    s.scan_lengths_mm = r.get<std::vector<double>>("lengths_mm");
    r.finish();
  }
  if (top.has("phasemap")) {
    ObjectReader r(top.raw("phasemap"), "phasemap");
    s.phasemap_points = r.get_or<std::size_t>("grid_points", s.phasemap_points);
    r.finish();
  }
  if (top.has("visibility")) {
    ObjectReader r(top.raw("visibility"), "visibility");
    s.visibility_points = r.get_or<std::size_t>("grid_points", s.visibility_points);
    r.finish();
  }
  if (top.has("simulate")) {
    ObjectReader r(top.raw("simulate"), "simulate");
    s.simulate.powers_mw = r.get_or("powers_mw", s.simulate.powers_mw);
    s.simulate.duration_s = r.get_or("duration_s", s.simulate.duration_s);
    s.simulate.alpha_deg = r.optional<double>("alpha_deg");
    s.simulate.beta_deg = r.optional<double>("beta_deg");
    s.simulate.correlation_power_mw = r.get_or("correlation_power_mw", s.simulate.correlation_power_mw);
    s.simulate.correlation_duration_s =
        r.get_or("correlation_duration_s", s.simulate.correlation_duration_s);
    r.finish();
  }
  if (top.has("analyze")) {
    ObjectReader r(top.raw("analyze"), "analyze");
    s.records_file = r.optional<std::string>("records_file");
    r.finish();
  }
  if (top.has("metadata")) s.metadata = top.raw("metadata");
  top.finish();
  return s;
}

inline Scenario load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, "config '" + path.string() + "': " + e.what());
  }
  return parse(doc, path);
}

inline json to_json(const expsim::CountRecord& r, const std::string& label) {
  json j;
  j["label"] = label;
  j["singles_1"] = r.singles_1;
  j["singles_2"] = r.singles_2;
  j["coincidences"] = r.coincidences;
  j["duration_s"] = r.duration_s;
  j["alpha_deg"] = r.setting.alpha_deg ? json(*r.setting.alpha_deg) : json(nullptr);
  j["beta_deg"] = r.setting.beta_deg ? json(*r.setting.beta_deg) : json(nullptr);
  j["seed"] = r.seed;
  return j;
}

inline expsim::CountRecord record_from_json(const json& j) {
  ObjectReader r(j, "record");
  r.get<std::string>("label");
  expsim::CountRecord rec;
  rec.singles_1 = r.get<std::uint64_t>("singles_1");
  rec.singles_2 = r.get<std::uint64_t>("singles_2");
  rec.coincidences = r.get<std::uint64_t>("coincidences");
  rec.duration_s = r.get<double>("duration_s");
  rec.setting.alpha_deg = r.optional<double>("alpha_deg");
  rec.setting.beta_deg = r.optional<double>("beta_deg");
  rec.setting.duration_s = rec.duration_s;
  rec.seed = r.get<std::uint64_t>("seed");
  r.finish();
  if (rec.coincidences > std::min(rec.singles_1, rec.singles_2) || !(rec.duration_s > 0.0)) {
    throw Error(ErrorKind::Config, "record violates C <= min(S1, S2) or duration > 0");
  }
  return rec;
}

}  // namespace spdc::scenario
