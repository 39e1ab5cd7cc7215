#pragma once

// Monte Carlo model and analysis of the polarization-correlation experiment:
// Poisson singles and coincidences, accidental coincidences, visibilities,
// fidelity and coupling-efficiency estimates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spdc/error.hpp"
#include "spdc/optics.hpp"

namespace spdc::expsim {

enum class StateModel {
  Dephasing,  // V_state scales the |HH><VV| coherence only
  Werner,     // V_state |phi><phi| + (1 - V_state) I/4
};

struct SourceParams {
  double pair_rate_per_mw = 27000.0;  // 1/s/mW
  double pump_power_mw = 1.0;
  double state_phase_rad = 0.0;
  double state_visibility = 1.0;
  StateModel state_model = StateModel::Dephasing;
  double wdm_routing = 0.99;
  double coupling_efficiency = 1.0;  // fiber coupling, same for both arms
  std::vector<double> losses;        // fractional transmission losses per arm
  double detector_efficiency_1 = 1.0;
  double detector_efficiency_2 = 1.0;
  double coincidence_window_ns = 5.8;
  double background_fraction = 0.0;  // extra singles relative to signal singles

  static bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

  void validate() const {
    bool ok = pair_rate_per_mw >= 0.0 && pump_power_mw >= 0.0 && is_probability(state_visibility) &&
              is_probability(wdm_routing) && is_probability(coupling_efficiency) &&
              is_probability(detector_efficiency_1) && is_probability(detector_efficiency_2) &&
              coincidence_window_ns >= 0.0 && background_fraction >= 0.0;
    for (double l : losses) ok = ok && is_probability(l);
    if (!ok) throw Error(ErrorKind::InvalidArgument, "source parameters out of range");
  }

  /// Fraction of generated photons of one arm that are detected (without
  /// analyzer).
  double arm_efficiency(int arm) const {
    double eta = wdm_routing * coupling_efficiency * (arm == 1 ? detector_efficiency_1 : detector_efficiency_2);
    for (double l : losses) eta *= 1.0 - l;
    return eta;
  }

  double pair_rate() const { return pair_rate_per_mw * pump_power_mw; }
  double window_s() const { return coincidence_window_ns * 1e-9; }
};

/// Polarizer angles in degrees; an absent angle means no analyzer in that arm.
struct MeasurementSetting {
  std::optional<double> alpha_deg;
  std::optional<double> beta_deg;
  double duration_s = 1.0;
};

struct CountRecord {
  std::uint64_t singles_1 = 0;
  std::uint64_t singles_2 = 0;
  std::uint64_t coincidences = 0;
  double duration_s = 0.0;
  MeasurementSetting setting;
  std::uint64_t seed = 0;
};

/// P(both pass) for linear polarizers at alpha, beta:
/// 1/2 [cos^2 a cos^2 b + sin^2 a sin^2 b + 2 V cos(phi) cos a sin a cos b sin b].
inline double coincidence_probability(double alpha_deg, double beta_deg, double phase_rad,
                                      double state_visibility,
                                      StateModel model = StateModel::Dephasing) {
  const double a = optics::deg_to_rad(alpha_deg), b = optics::deg_to_rad(beta_deg);
  const double ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b);
  if (model == StateModel::Werner) {
    const double pure = 0.5 * (ca * ca * cb * cb + sa * sa * sb * sb +
                               2.0 * std::cos(phase_rad) * ca * sa * cb * sb);
    return state_visibility * pure + (1.0 - state_visibility) * 0.25;
  }
  return 0.5 * (ca * ca * cb * cb + sa * sa * sb * sb +
                2.0 * state_visibility * std::cos(phase_rad) * ca * sa * cb * sb);
}

/// Joint pass probability of both analyzers (1 without analyzers, 1/2 with
/// a single one since each photon is unpolarized on its own).
inline double analyzer_joint(const SourceParams& p, const MeasurementSetting& s) {
  if (s.alpha_deg && s.beta_deg) {
    return coincidence_probability(*s.alpha_deg, *s.beta_deg, p.state_phase_rad,
                                   p.state_visibility, p.state_model);
  }
  if (s.alpha_deg || s.beta_deg) return 0.5;
  return 1.0;
}

struct ExpectedRates {
  double singles_1 = 0.0;
  double singles_2 = 0.0;
  double true_coincidences = 0.0;
  double accidentals = 0.0;
};

inline ExpectedRates expected_rates(const SourceParams& p, const MeasurementSetting& s) {
  const double r = p.pair_rate();
  const double t1 = s.alpha_deg ? 0.5 : 1.0;
  const double t2 = s.beta_deg ? 0.5 : 1.0;
  ExpectedRates e;
  e.singles_1 = r * p.arm_efficiency(1) * t1 * (1.0 + p.background_fraction);
  e.singles_2 = r * p.arm_efficiency(2) * t2 * (1.0 + p.background_fraction);
  e.true_coincidences = r * p.arm_efficiency(1) * p.arm_efficiency(2) * analyzer_joint(p, s);
  e.accidentals = e.singles_1 * e.singles_2 * p.window_s();
  return e;
}

/// One measurement. Pairs are Poisson, split into detected-in-both /
/// arm-1-only / arm-2-only by binomial thinning; background singles and
/// accidental coincidences (rate S1 S2 tau) are independent Poisson streams.
/// Accidentals are capped so that C <= min(S1, S2).
inline CountRecord simulate_run(const SourceParams& p, const MeasurementSetting& s,
                                std::uint64_t seed) {
  p.validate();
  if (!(s.duration_s > 0.0)) throw Error(ErrorKind::InvalidArgument, "duration must be > 0");
  std::mt19937_64 rng(seed);
  auto poisson = [&](double mean) -> std::uint64_t {
    if (!(mean > 0.0)) return 0;
    return std::poisson_distribution<std::uint64_t>(mean)(rng);
  };
  auto binomial = [&](std::uint64_t n, double prob) -> std::uint64_t {
    if (n == 0 || !(prob > 0.0)) return 0;
    if (prob >= 1.0) return n;
    return std::binomial_distribution<std::uint64_t>(n, prob)(rng);
  };

  const double t1 = s.alpha_deg ? 0.5 : 1.0;
  const double t2 = s.beta_deg ? 0.5 : 1.0;
  const double p1 = p.arm_efficiency(1) * t1;
  const double p2 = p.arm_efficiency(2) * t2;
  const double both = p.arm_efficiency(1) * p.arm_efficiency(2) * analyzer_joint(p, s);
  const double only1 = std::max(0.0, p1 - both);
  const double only2 = std::max(0.0, p2 - both);

  const std::uint64_t pairs = poisson(p.pair_rate() * s.duration_s);
  const std::uint64_t n_both = binomial(pairs, both);
  const std::uint64_t rest = pairs - n_both;
  const double rest_prob = 1.0 - both;
  const std::uint64_t n_only1 = rest_prob > 0.0 ? binomial(rest, only1 / rest_prob) : 0;
  const double rest2_prob = 1.0 - both - only1;
  const std::uint64_t n_only2 =
      rest2_prob > 0.0 ? binomial(rest - n_only1, std::min(1.0, only2 / rest2_prob)) : 0;

  const ExpectedRates e = expected_rates(p, s);
  const std::uint64_t bg1 = poisson(p.pair_rate() * p1 * p.background_fraction * s.duration_s);
  const std::uint64_t bg2 = poisson(p.pair_rate() * p2 * p.background_fraction * s.duration_s);

  CountRecord rec;
  rec.singles_1 = n_both + n_only1 + bg1;
  rec.singles_2 = n_both + n_only2 + bg2;
  const std::uint64_t acc_cap = std::min(rec.singles_1, rec.singles_2) - n_both;
  rec.coincidences = n_both + std::min(acc_cap, poisson(e.accidentals * s.duration_s));
  rec.duration_s = s.duration_s;
  rec.setting = s;
  rec.seed = seed;
  return rec;
}

struct CorrectedRate {
  double rate = 0.0;        // 1/s, clamped at 0
  double unclamped = 0.0;   // raw difference, may be negative
  double accidentals = 0.0; // subtracted, 1/s
  bool clamped = false;
};

/// C/T - (S1/T)(S2/T) tau.
inline CorrectedRate accidental_correction(const CountRecord& r, double window_ns) {
  if (!(r.duration_s > 0.0)) throw Error(ErrorKind::InvalidArgument, "duration must be > 0");
  const double t = r.duration_s;
  CorrectedRate out;
  out.accidentals = (static_cast<double>(r.singles_1) / t) * (static_cast<double>(r.singles_2) / t) *
                    window_ns * 1e-9;
  out.unclamped = static_cast<double>(r.coincidences) / t - out.accidentals;
  out.clamped = out.unclamped < 0.0;
  out.rate = std::max(0.0, out.unclamped);
  return out;
}

struct VisibilityEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// (C_max - C_min) / (C_max + C_min) on rates (accidental-corrected unless
/// window_ns is 0); the error propagates the Poisson variance of the raw counts.
inline VisibilityEstimate visibility_from_scan(const CountRecord& at_max, const CountRecord& at_min,
                                               double window_ns) {
  const double cmax = accidental_correction(at_max, window_ns).unclamped;
  const double cmin = accidental_correction(at_min, window_ns).unclamped;
  const double sum = cmax + cmin;
  if (sum == 0.0) throw Error(ErrorKind::ZeroWeight, "no coincidences in either setting");
  const double var_max = static_cast<double>(at_max.coincidences) / (at_max.duration_s * at_max.duration_s);
  const double var_min = static_cast<double>(at_min.coincidences) / (at_min.duration_s * at_min.duration_s);
  VisibilityEstimate v;
  v.value = (cmax - cmin) / sum;
  v.std_error = 2.0 / (sum * sum) * std::sqrt(cmin * cmin * var_max + cmax * cmax * var_min);
  return v;
}

/// F = (1 + V_HV + 2 V_45) / 4, taking the circular-basis visibility equal to
/// V_45.
inline double fidelity_estimate(double v_hv, double v_45) {
  if (!SourceParams::is_probability(v_hv) || !SourceParams::is_probability(v_45)) {
    throw Error(ErrorKind::InvalidArgument, "visibilities must lie in [0, 1]");
  }
  return (1.0 + v_hv + 2.0 * v_45) / 4.0;
}

/// eta = (C/S) / (detector efficiency * prod(1 - loss_i)).
inline double coupling_efficiency_estimate(double c_over_s, double detector_eff,
                                           const std::vector<double>& losses) {
  double denom = detector_eff;
  for (double l : losses) denom *= 1.0 - l;
  if (denom == 0.0) throw Error(ErrorKind::InvalidArgument, "zero detection/transmission product");
  return c_over_s / denom;
}

/// Derives well-separated per-run seeds from one base seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct PowerRow {
  double power_mw = 0.0;
  double singles_1 = 0.0;  // 1/s
  double singles_2 = 0.0;
  double coincidences_raw = 0.0;
  double coincidences_corrected = 0.0;
  std::uint64_t seed = 0;
};

inline std::vector<PowerRow> rates_vs_power(const SourceParams& params,
                                            const std::vector<double>& powers_mw,
                                            const MeasurementSetting& setting, std::uint64_t seed) {
  std::vector<PowerRow> rows;
  for (std::size_t i = 0; i < powers_mw.size(); ++i) {
    if (!(powers_mw[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "pump powers must be > 0");
    SourceParams p = params;
    p.pump_power_mw = powers_mw[i];
    const std::uint64_t run_seed = derive_seed(seed, i);
    const CountRecord r = simulate_run(p, setting, run_seed);
    PowerRow row;
    row.power_mw = powers_mw[i];
    row.singles_1 = static_cast<double>(r.singles_1) / r.duration_s;
    row.singles_2 = static_cast<double>(r.singles_2) / r.duration_s;
    row.coincidences_raw = static_cast<double>(r.coincidences) / r.duration_s;
    row.coincidences_corrected = accidental_correction(r, p.coincidence_window_ns).rate;
    row.seed = run_seed;
    rows.push_back(row);
  }
  return rows;
}


/// Records of the two-basis polarization-correlation protocol plus one run
/// without analyzers (for the coincidence-to-single ratio).
struct CorrelationRecords {
  CountRecord hv_max, hv_min;    // alpha = 0: beta = 0 / 90
  CountRecord d45_max, d45_min;  // alpha = 45: beta = 45 / -45
  CountRecord open;
};

inline CorrelationRecords measure_correlations(const SourceParams& p, double duration_s,
                                               std::uint64_t seed) {
  auto run = [&](std::optional<double> a, std::optional<double> b, std::uint64_t k) {
    return simulate_run(p, MeasurementSetting{a, b, duration_s}, derive_seed(seed, k));
  };
  return {run(0.0, 0.0, 0), run(0.0, 90.0, 1), run(45.0, 45.0, 2), run(45.0, -45.0, 3),
          run(std::nullopt, std::nullopt, 4)};
}

struct CorrelationAnalysis {
  VisibilityEstimate hv;
  VisibilityEstimate d45;
  double fidelity = 0.0;
  double c_over_s = 0.0;  // accidental-corrected C over geometric-mean singles
  double coupling_efficiency = 0.0;
};

inline CorrelationAnalysis analyze_correlations(const CorrelationRecords& r, double window_ns,
                                                double detector_eff,
                                                const std::vector<double>& losses) {
  CorrelationAnalysis a;
  a.hv = visibility_from_scan(r.hv_max, r.hv_min, window_ns);
  a.d45 = visibility_from_scan(r.d45_max, r.d45_min, window_ns);
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  a.fidelity = fidelity_estimate(clamp01(a.hv.value), clamp01(a.d45.value));
  const double t = r.open.duration_s;
  const double singles = std::sqrt(static_cast<double>(r.open.singles_1) * static_cast<double>(r.open.singles_2)) / t;
  a.c_over_s = singles > 0.0 ? accidental_correction(r.open, window_ns).rate / singles : 0.0;
  a.coupling_efficiency = coupling_efficiency_estimate(a.c_over_s, detector_eff, losses);
  return a;
}

}  // namespace spdc::expsim
