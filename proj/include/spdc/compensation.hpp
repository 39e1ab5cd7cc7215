#pragma once

// Relative phase between the two emission processes of the two-crystal
// source, birefringent compensator design and the visibility it implies.
//
// Process A: pair born in crystal 1 (optic axis vertical), the pair then
// crosses crystal 2 as extraordinary waves at theta_p. Process B: pair born in
// crystal 2, its pump having crossed crystal 1 as an ordinary wave. With the
// creation-position phase cancelled at the phase-matched point,
//
//   phi = 2 pi { sum_pump s d dn(lp)/lp
//              + L [n_o(lp)/lp - n(theta_p, l1)/l1 - n(theta_p, l2)/l2]
//              + sum_pair s d [dn(l1)/l1 + dn(l2)/l2] },   dn = n_e - n_o,
//
// up to a constant. Compensators are cut at 90 deg, so only the principal
// indices enter and there is no walk-off.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "spdc/error.hpp"
#include "spdc/numerics.hpp"
#include "spdc/optics.hpp"
#include "spdc/phasematch.hpp"

namespace spdc::compensation {

using optics::Material;
using optics::Polarization;
using phasematch::PhaseMatchConfig;

inline constexpr double kGradientStepNm = 0.05;
inline constexpr double kRecheckStepNm = 0.025;
inline constexpr double kPumpWindowFwhm = 1.0;
inline constexpr double kSignalWindowFwhm = 0.52;
inline constexpr std::size_t kDefaultGridPoints = 101;

enum class Segment { PumpPath, PairPath, DownconversionCrystal1, DownconversionCrystal2 };
enum class AxisPlane { Horizontal, Vertical };

struct StackElement {
  Material material;
  double thickness_mm = 0.0;
  Segment segment = Segment::PumpPath;
  AxisPlane axis = AxisPlane::Horizontal;
  int sign = +1;  // +1: process A's light sees the slow axis
};

struct OpticalStack {
  PhaseMatchConfig crystal;
  std::vector<StackElement> elements;
  std::optional<std::size_t> pump_compensator;  // index into elements
  std::optional<std::size_t> pair_compensator;

  /// Pump compensator, crystals 1 and 2, pair compensator (in beam order).
  static OpticalStack two_crystal(const PhaseMatchConfig& crystal, const Material& compensator,
                                  double pump_mm = 0.0, double pair_mm = 0.0, int pump_sign = +1,
                                  int pair_sign = +1) {
    OpticalStack s;
    s.crystal = crystal;
    s.elements.push_back({compensator, pump_mm, Segment::PumpPath, AxisPlane::Horizontal, pump_sign});
    s.elements.push_back({crystal.material, crystal.length_mm, Segment::DownconversionCrystal1,
                          AxisPlane::Vertical, +1});
    s.elements.push_back({crystal.material, crystal.length_mm, Segment::DownconversionCrystal2,
                          AxisPlane::Horizontal, +1});
    s.elements.push_back({compensator, pair_mm, Segment::PairPath, AxisPlane::Horizontal, pair_sign});
    s.pump_compensator = 0;
    s.pair_compensator = 3;
    return s;
  }

  const StackElement& crystal_element() const {
    for (const auto& e : elements) {
      if (e.segment == Segment::DownconversionCrystal1) return e;
    }
    throw Error(ErrorKind::InvalidStack, "stack has no down-conversion crystal");
  }

  void validate() const {
    int n1 = 0, n2 = 0;
    const StackElement* c1 = nullptr;
    const StackElement* c2 = nullptr;
    for (const auto& e : elements) {
      if (!(e.thickness_mm >= 0.0)) {
        throw Error(ErrorKind::InvalidStack, "element thickness must be >= 0");
      }
      if (e.sign != 1 && e.sign != -1) {
        throw Error(ErrorKind::InvalidStack, "orientation sign must be +1 or -1");
      }
      if (e.segment == Segment::DownconversionCrystal1) {
        ++n1;
        c1 = &e;
      }
      if (e.segment == Segment::DownconversionCrystal2) {
        ++n2;
        c2 = &e;
      }
    }
    if (n1 != 1 || n2 != 1) {
      throw Error(ErrorKind::InvalidStack, "need exactly one element per down-conversion crystal");
    }
    if (c1->thickness_mm != c2->thickness_mm || c1->material.name != c2->material.name) {
      throw Error(ErrorKind::InvalidStack, "down-conversion crystals must be identical");
    }
    auto check_unknown = [&](const std::optional<std::size_t>& idx, Segment seg) {
      if (!idx) return;
      if (*idx >= elements.size() || elements[*idx].segment != seg) {
        throw Error(ErrorKind::InvalidStack, "designated compensator has the wrong segment");
      }
    };
    check_unknown(pump_compensator, Segment::PumpPath);
    check_unknown(pair_compensator, Segment::PairPath);
  }

  double pump_thickness() const { return pump_compensator ? elements[*pump_compensator].thickness_mm : 0.0; }
  double pair_thickness() const { return pair_compensator ? elements[*pair_compensator].thickness_mm : 0.0; }
};

namespace detail {

inline double birefringence(const Material& m, double lambda_nm) {
  return optics::refractive_index(m, Polarization::extraordinary(90.0), lambda_nm) -
         optics::refractive_index(m, Polarization::ordinary(), lambda_nm);
}

// Phase (rad) of one element per unit sign; crystals contribute once via
// crystal 1 (the pair of them forms a single term).
inline double element_phase(const StackElement& e, const PhaseMatchConfig& c, double pump_nm,
                            double signal_nm, double idler_nm) {
  constexpr double k = 2.0 * numerics::kPi * 1e6;  // nm^-1 -> rad per mm
  switch (e.segment) {
    case Segment::PumpPath:
      return k * e.thickness_mm * birefringence(e.material, pump_nm) / pump_nm;
    case Segment::PairPath:
      return k * e.thickness_mm *
             (birefringence(e.material, signal_nm) / signal_nm +
              birefringence(e.material, idler_nm) / idler_nm);
    case Segment::DownconversionCrystal1: {
      const auto e_pol = Polarization::extraordinary(c.theta_p_deg);
      const double np = optics::refractive_index(e.material, Polarization::ordinary(), pump_nm);
      const double n1 = optics::refractive_index(e.material, e_pol, signal_nm);
      const double n2 = optics::refractive_index(e.material, e_pol, idler_nm);
      return k * e.thickness_mm * (np / pump_nm - n1 / signal_nm - n2 / idler_nm);
    }
    case Segment::DownconversionCrystal2:
      return 0.0;
  }
  return 0.0;
}

}  // namespace detail

/// phi(lp, l1) in radians (no offset removed).
inline double relative_phase(const OpticalStack& stack, double pump_nm, double signal_nm) {
  const double idler_nm = phasematch::conjugate_wavelength(pump_nm, signal_nm);
  double phi = 0.0;
  for (const auto& e : stack.elements) {
    phi += e.sign * detail::element_phase(e, stack.crystal, pump_nm, signal_nm, idler_nm);
  }
  return phi;
}

struct Gradient {
  double d_pump = 0.0;    // dphi/dlp, rad/nm
  double d_signal = 0.0;  // dphi/dl1, rad/nm
};

template <class Phase>
Gradient central_gradient(Phase&& phi, double pump_nm, double signal_nm, double step_nm) {
  Gradient g;
  g.d_pump = (phi(pump_nm + step_nm, signal_nm) - phi(pump_nm - step_nm, signal_nm)) / (2.0 * step_nm);
  g.d_signal =
      (phi(pump_nm, signal_nm + step_nm) - phi(pump_nm, signal_nm - step_nm)) / (2.0 * step_nm);
  return g;
}

/// Central difference with one Richardson step, (4 D(h/2) - D(h)) / 3. The
/// plain O(h^2) difference at h = 0.05 nm is dominated by the third
/// derivative of the pump-compensator phase near the YVO4 absorption edge
/// (~2e-6 rad/nm), which would mask the residual slope.
template <class Phase>
Gradient richardson_gradient(Phase&& phi, double pump_nm, double signal_nm, double step_nm) {
  const Gradient coarse = central_gradient(phi, pump_nm, signal_nm, step_nm);
  const Gradient fine = central_gradient(phi, pump_nm, signal_nm, 0.5 * step_nm);
  return {(4.0 * fine.d_pump - coarse.d_pump) / 3.0, (4.0 * fine.d_signal - coarse.d_signal) / 3.0};
}

inline Gradient phase_gradient(const OpticalStack& stack, double pump_nm, double signal_nm,
                               double step_nm = kGradientStepNm) {
  return richardson_gradient(
      [&](double lp, double l1) { return relative_phase(stack, lp, l1); }, pump_nm, signal_nm,
      step_nm);
}

struct CompensatorSolution {
  double pump_mm = 0.0;
  double pair_mm = 0.0;
  int pump_sign = +1;
  int pair_sign = +1;
  double center_pump_nm = 0.0;
  double center_signal_nm = 0.0;
  Gradient residual;  // re-checked with kRecheckStepNm
  OpticalStack compensated;

  double residual_max() const { return std::max(std::abs(residual.d_pump), std::abs(residual.d_signal)); }
};

struct OptimizeOptions {
  bool allow_sign_flip = true;  // otherwise the stack's signs are kept
};

/// Zeroes both phase gradients at the spectral center. phi is affine in the
/// two compensator thicknesses, so the condition is a 2x2 linear system in
/// s_p d_p and s_c d_c; the signs are then chosen to make both thicknesses
/// nonnegative.
inline CompensatorSolution optimize_compensators(const OpticalStack& stack,
                                                 OptimizeOptions opt = {}) {
  stack.validate();
  if (!stack.pump_compensator || !stack.pair_compensator) {
    throw Error(ErrorKind::InvalidStack, "stack has no designated compensators");
  }
  const auto sol = phasematch::solve_signal_idler(stack.crystal);
  const double lp = stack.crystal.pump_center_nm;
  const double l1 = sol.signal_nm;

  OpticalStack base = stack;
  base.elements[*base.pump_compensator].thickness_mm = 0.0;
  base.elements[*base.pair_compensator].thickness_mm = 0.0;
  auto unit = [&](std::size_t idx) {
    OpticalStack s = base;
    s.elements[idx].thickness_mm = 1.0;
    s.elements[idx].sign = +1;
    const Gradient g = phase_gradient(s, lp, l1);
    const Gradient g0 = phase_gradient(base, lp, l1);
    return Gradient{g.d_pump - g0.d_pump, g.d_signal - g0.d_signal};
  };
  const Gradient g0 = phase_gradient(base, lp, l1);
  const Gradient gp = unit(*base.pump_compensator);
  const Gradient gc = unit(*base.pair_compensator);
  const auto x = numerics::solve_2x2(gp.d_pump, gc.d_pump, gp.d_signal, gc.d_signal, -g0.d_pump,
                                     -g0.d_signal);
  if (!x) throw Error(ErrorKind::SingularSystem, "compensator thickness directions are dependent");

  CompensatorSolution out;
  out.center_pump_nm = lp;
  out.center_signal_nm = l1;
  auto assign = [&](double signed_mm, int current_sign, double& mm, int& sign) {
    if (opt.allow_sign_flip) {
      sign = signed_mm < 0.0 ? -1 : +1;
      mm = std::abs(signed_mm);
    } else {
      if (signed_mm * current_sign < 0.0) {
        throw Error(ErrorKind::NegativeThickness,
                    "fixed orientation requires a negative compensator thickness");
      }
      sign = current_sign;
      mm = std::abs(signed_mm);
    }
  };
  assign(x->first, stack.elements[*stack.pump_compensator].sign, out.pump_mm, out.pump_sign);
  assign(x->second, stack.elements[*stack.pair_compensator].sign, out.pair_mm, out.pair_sign);

  out.compensated = stack;
  auto& pump = out.compensated.elements[*stack.pump_compensator];
  auto& pair = out.compensated.elements[*stack.pair_compensator];
  pump.thickness_mm = out.pump_mm;
  pump.sign = out.pump_sign;
  pump.axis = out.pump_sign > 0 ? AxisPlane::Horizontal : AxisPlane::Vertical;
  pair.thickness_mm = out.pair_mm;
  pair.sign = out.pair_sign;
  pair.axis = out.pair_sign > 0 ? AxisPlane::Horizontal : AxisPlane::Vertical;
  out.residual = phase_gradient(out.compensated, lp, l1, kRecheckStepNm);
  return out;
}

/// Rectangle in (lp, l1) over which flatness and visibility are evaluated.
struct SpectralWindow {
  double pump_center_nm = 0.0;
  double pump_half_nm = 0.0;
  double signal_center_nm = 0.0;
  double signal_half_nm = 0.0;

  double pump_lo() const { return pump_center_nm - pump_half_nm; }
  double pump_hi() const { return pump_center_nm + pump_half_nm; }
  double signal_lo() const { return signal_center_nm - signal_half_nm; }
  double signal_hi() const { return signal_center_nm + signal_half_nm; }

  SpectralWindow scaled(double factor) const {
    return {pump_center_nm, pump_half_nm * factor, signal_center_nm, signal_half_nm * factor};
  }
};

/// Pump center +- 1 x pump FWHM, signal center +- 0.52 x FWHM of the
/// simulated signal spectrum.
inline SpectralWindow default_window(const PhaseMatchConfig& c) {
  const auto sol = phasematch::solve_signal_idler(c);
  const auto spec = phasematch::spectrum_auto(c, phasematch::Arm::Signal);
  return {c.pump_center_nm, kPumpWindowFwhm * c.pump_fwhm_nm, sol.signal_nm,
          kSignalWindowFwhm * spec.fwhm_nm};
}

struct PhaseMap {
  std::vector<double> pump_nm;
  std::vector<double> signal_nm;
  std::vector<double> phi;  // row-major [pump][signal], center value removed
  double center_pump_nm = 0.0;
  double center_signal_nm = 0.0;
  SpectralWindow window;
  double peak_to_peak = 0.0;  // over the window
  Gradient center_gradient;

  double at(std::size_t ip, std::size_t il) const { return phi[ip * signal_nm.size() + il]; }
};

/// Evaluates phi on the grid, subtracts its value at (center_pump,
/// center_signal), and summarizes flatness over `window`.
inline PhaseMap phase_map(const OpticalStack& stack, const std::vector<double>& pump_grid,
                          const std::vector<double>& signal_grid, const SpectralWindow& window,
                          unsigned workers = 1) {
  stack.validate();
  if (pump_grid.empty() || signal_grid.empty()) {
    throw Error(ErrorKind::InvalidArgument, "phase map grids must be non-empty");
  }
  auto contains = [](const std::vector<double>& g, double lo, double hi) {
    const auto [mn, mx] = std::minmax_element(g.begin(), g.end());
    return *mn <= lo + 1e-9 && *mx >= hi - 1e-9;
  };
  if (!contains(pump_grid, window.pump_lo(), window.pump_hi()) ||
      !contains(signal_grid, window.signal_lo(), window.signal_hi())) {
    throw Error(ErrorKind::InvalidArgument, "flatness window must lie within the grids");
  }
  PhaseMap map;
  map.pump_nm = pump_grid;
  map.signal_nm = signal_grid;
  map.window = window;
  map.center_pump_nm = window.pump_center_nm;
  map.center_signal_nm = window.signal_center_nm;
  const double offset = relative_phase(stack, map.center_pump_nm, map.center_signal_nm);
  const std::size_t nl = signal_grid.size();
  map.phi.assign(pump_grid.size() * nl, 0.0);
  numerics::parallel_for(map.phi.size(), workers, [&](std::size_t k) {
    map.phi[k] = relative_phase(stack, pump_grid[k / nl], signal_grid[k % nl]) - offset;
  });
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < pump_grid.size(); ++i) {
    if (pump_grid[i] < window.pump_lo() - 1e-9 || pump_grid[i] > window.pump_hi() + 1e-9) continue;
    for (std::size_t j = 0; j < nl; ++j) {
      if (signal_grid[j] < window.signal_lo() - 1e-9 || signal_grid[j] > window.signal_hi() + 1e-9) {
        continue;
      }
      const double v = map.at(i, j);
      lo = any ? std::min(lo, v) : v;
      hi = any ? std::max(hi, v) : v;
      any = true;
    }
  }
  map.peak_to_peak = hi - lo;
  map.center_gradient = phase_gradient(stack, map.center_pump_nm, map.center_signal_nm);
  return map;
}

/// Phase map on an n x n grid spanning exactly the window (n odd keeps the
/// center on the grid).
inline PhaseMap phase_map(const OpticalStack& stack, const SpectralWindow& window,
                          std::size_t points = kDefaultGridPoints, unsigned workers = 1) {
  const std::size_t np = window.pump_half_nm > 0.0 ? points : 1;
  return phase_map(stack, numerics::linspace(window.pump_lo(), window.pump_hi(), np),
                   numerics::linspace(window.signal_lo(), window.signal_hi(), points), window,
                   workers);
}

/// g(lp) sinc^2(Delta k L / 2) with g the Gaussian pump spectrum.
inline double joint_spectral_weight(const PhaseMatchConfig& c, double pump_nm, double signal_nm) {
  double g = 1.0;
  if (c.pump_fwhm_nm > 0.0) {
    const double sigma = c.pump_fwhm_nm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    const double u = (pump_nm - c.pump_center_nm) / sigma;
    g = std::exp(-0.5 * u * u);
  }
  return g * phasematch::phase_matching_kernel(c, pump_nm, signal_nm, phasematch::Arm::Signal);
}

/// |integral S e^{i phi}| / integral S by composite Simpson over the window
/// (one-dimensional in the signal when the pump half-width is 0).
template <class Weight, class Phase>
double visibility(const SpectralWindow& w, Weight&& weight, Phase&& phase,
                  std::size_t points = kDefaultGridPoints) {
  if (points % 2 == 0) ++points;
  const bool pump_axis = w.pump_half_nm > 0.0;
  const std::size_t np = pump_axis ? points : 1;
  const auto lp = numerics::linspace(w.pump_lo(), w.pump_hi(), np);
  const auto l1 = numerics::linspace(w.signal_lo(), w.signal_hi(), points);
  const auto wl = numerics::simpson_weights(points - 1, (w.signal_hi() - w.signal_lo()) / (points - 1));
  const auto wp = pump_axis ? numerics::simpson_weights(points - 1, (w.pump_hi() - w.pump_lo()) / (points - 1))
                            : std::vector<double>{1.0};
  std::complex<double> num{0.0, 0.0};
  double den = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < points; ++j) {
      const double s = wp[i] * wl[j] * weight(lp[i], l1[j]);
      num += s * std::polar(1.0, phase(lp[i], l1[j]));
      den += s;
    }
  }
  if (!(den > 0.0)) throw Error(ErrorKind::ZeroWeight, "joint spectral weight vanishes on window");
  return std::min(1.0, std::abs(num) / den);
}

inline double predict_visibility(const OpticalStack& stack, const SpectralWindow& window,
                                 std::size_t points = kDefaultGridPoints) {
  stack.validate();
  return visibility(
      window,
      [&](double lp, double l1) { return joint_spectral_weight(stack.crystal, lp, l1); },
      [&](double lp, double l1) { return relative_phase(stack, lp, l1); }, points);
}

}  // namespace spdc::compensation
