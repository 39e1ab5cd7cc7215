#pragma once

// Collinear type-I phase matching (pump extraordinary, pair ordinary in a
// negative uniaxial crystal) and the plane-wave SPDC spectral simulator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "spdc/error.hpp"
#include "spdc/numerics.hpp"
#include "spdc/optics.hpp"

namespace spdc::phasematch {

using optics::Material;
using optics::Polarization;

inline constexpr double kBracketScanStepNm = 0.5;
inline constexpr double kSignalToleranceNm = 1e-6;
inline constexpr double kDegenerateResidualPerMm = 1e-9;
inline constexpr std::size_t kPumpQuadratureIntervals = 64;
inline constexpr double kPumpQuadratureHalfWidthFwhm = 2.5;
inline constexpr double kDefaultSpectralStepNm = 0.05;
inline constexpr std::size_t kMinPointsAboveHalfMax = 10;

struct PhaseMatchConfig {
  Material material;
  double theta_p_deg = 0.0;
  double length_mm = 0.0;
  double pump_center_nm = 0.0;
  double pump_fwhm_nm = 0.0;  // 0 means monochromatic

  void validate() const {
    if (!(length_mm > 0.0)) throw Error(ErrorKind::InvalidArgument, "crystal length must be > 0");
    if (!(pump_fwhm_nm >= 0.0)) {
      throw Error(ErrorKind::InvalidArgument, "pump bandwidth must be >= 0");
    }
    if (!(theta_p_deg > 0.0 && theta_p_deg < 90.0)) {
      throw Error(ErrorKind::InvalidArgument, "cut angle must lie in (0, 90) degrees");
    }
    if (!material.in_range(pump_center_nm)) {
      throw Error(ErrorKind::Range, material.name + ": pump wavelength outside validity range");
    }
  }
};

struct PairSolution {
  double signal_nm = 0.0;  // shorter wavelength
  double idler_nm = 0.0;
  double residual_per_mm = 0.0;
  bool degenerate = false;
};

/// Energy-conserving partner of lambda for a pump at pump_nm.
inline double conjugate_wavelength(double pump_nm, double lambda_nm) {
  if (!(lambda_nm > pump_nm)) {
    throw Error(ErrorKind::InvalidArgument,
                "down-converted wavelength must exceed the pump wavelength");
  }
  return 1.0 / (1.0 / pump_nm - 1.0 / lambda_nm);
}

/// Wave-vector mismatch per mm for a given crystal angle.
inline double delta_k_at(const Material& m, double theta_deg, double pump_nm, double signal_nm) {
  const double idler_nm = conjugate_wavelength(pump_nm, signal_nm);
  const double np = optics::refractive_index(m, Polarization::extraordinary(theta_deg), pump_nm);
  const double n1 = optics::refractive_index(m, Polarization::ordinary(), signal_nm);
  const double n2 = optics::refractive_index(m, Polarization::ordinary(), idler_nm);
  return 2.0 * numerics::kPi * 1e6 * (np / pump_nm - n1 / signal_nm - n2 / idler_nm);
}

/// Delta k = 2 pi [n(theta_p, lp)/lp - n_o(l1)/l1 - n_o(l2)/l2], per mm.
inline double delta_k(const PhaseMatchConfig& c, double pump_nm, double signal_nm) {
  return delta_k_at(c.material, c.theta_p_deg, pump_nm, signal_nm);
}

/// Lowest signal wavelength whose idler partner is still inside the data range.
inline double min_signal_nm(const Material& m, double pump_nm) {
  const double from_idler = 1.0 / (1.0 / pump_nm - 1.0 / m.max_nm());
  return std::max(from_idler, m.min_nm());
}

/// Collinear signal/idler pair at the configured angle. The bracket is found
/// by scanning down from degeneracy in 0.5 nm steps, then refined.
inline PairSolution solve_signal_idler(const PhaseMatchConfig& c) {
  c.validate();
  const double lp = c.pump_center_nm;
  const double hi = 2.0 * lp;
  optics::detail::require_range(c.material, hi);
  auto f = [&](double l1) { return delta_k(c, lp, l1); };

  const double at_degeneracy = f(hi);
  if (std::abs(at_degeneracy) < kDegenerateResidualPerMm) {
    return PairSolution{hi, hi, at_degeneracy, true};
  }
  const double lo = min_signal_nm(c.material, lp);
  const auto bracket = numerics::scan_bracket_downward(f, lo, hi, kBracketScanStepNm);
  if (!bracket) {
    throw Error(ErrorKind::NoPhaseMatch,
                "no collinear phase matching for " + c.material.name + " at theta_p = " +
                    std::to_string(c.theta_p_deg) + " deg, pump " + std::to_string(lp) + " nm");
  }
  numerics::RootOptions opt;
  opt.x_tol = 1e-9 * kSignalToleranceNm;
  const double l1 = numerics::find_root(f, bracket->first, bracket->second, opt);
  PairSolution s;
  s.signal_nm = l1;
  s.idler_nm = conjugate_wavelength(lp, l1);
  s.residual_per_mm = f(l1);
  s.degenerate = false;
  return s;
}

/// Internal angle (degrees) that phase-matches signal_target_nm.
inline double solve_angle(const Material& m, double pump_nm, double signal_target_nm) {
  if (!(signal_target_nm > pump_nm && signal_target_nm <= 2.0 * pump_nm)) {
    throw Error(ErrorKind::InvalidArgument,
                "target signal wavelength must lie in (pump, 2 * pump]");
  }
  auto f = [&](double theta) { return delta_k_at(m, theta, pump_nm, signal_target_nm); };
  const double lo = 1e-6, hi = 90.0;
  const double flo = f(lo), fhi = f(hi);
  if ((flo > 0.0) == (fhi > 0.0)) {
    throw Error(ErrorKind::NoPhaseMatch, "no angle in (0, 90) deg phase-matches the target");
  }
  numerics::RootOptions opt;
  opt.bisect_width = 1e-2;
  opt.x_tol = 1e-11;
  return numerics::find_root(f, lo, hi, opt);
}

enum class Arm { Signal, Idler };

struct SpectralGrid {
  double lo_nm = 0.0;
  double hi_nm = 0.0;
  double step_nm = kDefaultSpectralStepNm;

  std::vector<double> nodes() const {
    if (!(step_nm > 0.0) || !(hi_nm > lo_nm)) {
      throw Error(ErrorKind::InvalidArgument, "spectral grid needs lo < hi and step > 0");
    }
    const auto n = static_cast<std::size_t>(std::floor((hi_nm - lo_nm) / step_nm + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo_nm + step_nm * static_cast<double>(i);
    return out;
  }
};

struct Spectrum {
  Arm arm = Arm::Signal;
  std::vector<double> lambda_nm;
  std::vector<double> density;  // peak-normalized
  double fwhm_nm = 0.0;
  double center_nm = 0.0;  // midpoint of the half-maximum crossings
  double peak_nm = 0.0;
};

/// Pump spectral nodes with quadrature weights already multiplied by the
/// normalized Gaussian. A single unit-weight node for a monochromatic pump.
struct PumpQuadrature {
  std::vector<double> lambda_nm;
  std::vector<double> weight;
};

inline PumpQuadrature pump_quadrature(double center_nm, double fwhm_nm) {
  PumpQuadrature q;
  if (fwhm_nm == 0.0) {
    q.lambda_nm = {center_nm};
    q.weight = {1.0};
    return q;
  }
  const double half = kPumpQuadratureHalfWidthFwhm * fwhm_nm;
  const std::size_t n = kPumpQuadratureIntervals;
  q.lambda_nm = numerics::linspace(center_nm - half, center_nm + half, n + 1);
  q.weight = numerics::simpson_weights(n, 2.0 * half / static_cast<double>(n));
  const double sigma = fwhm_nm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * numerics::kPi));
  for (std::size_t i = 0; i <= n; ++i) {
    const double u = (q.lambda_nm[i] - center_nm) / sigma;
    q.weight[i] *= norm * std::exp(-0.5 * u * u);
  }
  return q;
}

inline double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

/// sinc^2(Delta k L / 2) for one pump wavelength and the observed wavelength
/// of the given arm (the partner follows from energy conservation).
inline double phase_matching_kernel(const PhaseMatchConfig& c, double pump_nm,
                                    double observed_nm, Arm arm) {
  const double signal = arm == Arm::Signal ? observed_nm : conjugate_wavelength(pump_nm, observed_nm);
  const double s = sinc(0.5 * delta_k(c, pump_nm, signal) * c.length_mm);
  return s * s;
}

/// Linear interpolation of the half-maximum crossings around the peak.
inline void measure_width(Spectrum& s) {
  const auto& y = s.density;
  const auto& x = s.lambda_nm;
  const std::size_t peak = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  s.peak_nm = x[peak];
  std::size_t left = peak;
  while (left > 0 && y[left - 1] >= 0.5) --left;
  std::size_t right = peak;
  while (right + 1 < y.size() && y[right + 1] >= 0.5) ++right;
  if (left == 0 || right + 1 == y.size()) {
    throw Error(ErrorKind::Resolution, "spectrum does not fall below half maximum inside the grid");
  }
  if (right - left + 1 < kMinPointsAboveHalfMax) {
    throw Error(ErrorKind::Resolution, "grid too coarse: fewer than 10 points above half maximum");
  }
  auto cross = [&](std::size_t below, std::size_t above) {
    return x[below] + (0.5 - y[below]) * (x[above] - x[below]) / (y[above] - y[below]);
  };
  const double xl = cross(left - 1, left);
  const double xr = cross(right + 1, right);
  s.fwhm_nm = xr - xl;
  s.center_nm = 0.5 * (xl + xr);
}

/// Relative spectral density of one arm,
/// S(l) ~ integral sinc^2(Delta k(lp', l) L / 2) g(lp') dlp', with g the
/// Gaussian pump spectrum (a delta function when the bandwidth is 0).
/// Each grid point is an independent fixed-order sum, so the output does not
/// depend on `workers`.
inline Spectrum spectral_density(const PhaseMatchConfig& c, const SpectralGrid& grid, Arm arm,
                                 unsigned workers = 1) {
  c.validate();
  Spectrum s;
  s.arm = arm;
  s.lambda_nm = grid.nodes();
  s.density.assign(s.lambda_nm.size(), 0.0);
  const PumpQuadrature pump = pump_quadrature(c.pump_center_nm, c.pump_fwhm_nm);
  numerics::parallel_for(s.lambda_nm.size(), workers, [&](std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < pump.lambda_nm.size(); ++j) {
      acc += pump.weight[j] * phase_matching_kernel(c, pump.lambda_nm[j], s.lambda_nm[i], arm);
    }
    s.density[i] = acc;
  });
  const double peak = *std::max_element(s.density.begin(), s.density.end());
  if (!(peak > 0.0)) throw Error(ErrorKind::ZeroWeight, "spectral density vanishes on the grid");
  for (double& v : s.density) v /= peak;
  measure_width(s);
  return s;
}

/// Spectrum of one arm on a grid centred on the phase-matched wavelength,
/// widened until both half-maximum crossings fall inside it.
inline Spectrum spectrum_auto(const PhaseMatchConfig& c, Arm arm,
                              double step_nm = kDefaultSpectralStepNm, unsigned workers = 1) {
  const PairSolution sol = solve_signal_idler(c);
  const double center = arm == Arm::Signal ? sol.signal_nm : sol.idler_nm;
  const double lp_hi = c.pump_center_nm + kPumpQuadratureHalfWidthFwhm * c.pump_fwhm_nm;
  // the observed wavelength and its partner must stay inside the data for
  // every pump node
  const double floor_nm = min_signal_nm(c.material, lp_hi);
  const double ceil_nm = c.material.max_nm();
  for (double half = 10.0;; half *= 2.0) {
    SpectralGrid g{std::max(floor_nm, center - half), std::min(ceil_nm, center + half), step_nm};
    try {
      return spectral_density(c, g, arm, workers);
    } catch (const Error& e) {
      const bool clipped = center - half <= floor_nm && center + half >= ceil_nm;
      if (e.kind() != ErrorKind::Resolution || clipped) throw;
    }
  }
}

struct BandwidthScan {
  std::vector<double> length_mm;
  std::vector<double> fwhm_nm;
  double exponent = 0.0;
  double rms_residual = 0.0;  // of log(FWHM)
};

/// Power-law fit FWHM ~ L^exponent over the given crystal lengths.
inline BandwidthScan bandwidth_scan(const PhaseMatchConfig& c, const std::vector<double>& lengths,
                                    Arm arm = Arm::Signal, unsigned workers = 1) {
  if (lengths.size() < 3) {
    throw Error(ErrorKind::InvalidArgument, "bandwidth scan needs at least 3 lengths");
  }
  if (std::all_of(lengths.begin(), lengths.end(), [&](double l) { return l == lengths.front(); })) {
    throw Error(ErrorKind::DegenerateFit, "all crystal lengths are identical");
  }
  BandwidthScan out;
  std::vector<double> lx, ly;
  for (double length : lengths) {
    PhaseMatchConfig ci = c;
    ci.length_mm = length;
    const Spectrum s = spectrum_auto(ci, arm, kDefaultSpectralStepNm, workers);
    out.length_mm.push_back(length);
    out.fwhm_nm.push_back(s.fwhm_nm);
    lx.push_back(std::log(length));
    ly.push_back(std::log(s.fwhm_nm));
  }
  const auto fit = numerics::fit_line(lx, ly);
  out.exponent = fit.slope;
  out.rms_residual = fit.rms_residual;
  return out;
}

}  // namespace spdc::phasematch
