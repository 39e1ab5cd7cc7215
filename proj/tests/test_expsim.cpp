#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "spdc/expsim.hpp"
#include "spdc/io.hpp"

using namespace spdc;
using namespace spdc::expsim;

namespace {

SourceParams source() {
  SourceParams p;
  p.pump_power_mw = 10.0;
  p.state_visibility = 0.95;
  p.coupling_efficiency = 0.9;
  p.losses = {0.12, 0.03, 0.04};
  p.detector_efficiency_1 = p.detector_efficiency_2 = 0.51;
  return p;
}

CountRecord record(std::uint64_t s1, std::uint64_t s2, std::uint64_t c, double t = 1.0) {
  CountRecord r;
  r.singles_1 = s1;
  r.singles_2 = s2;
  r.coincidences = c;
  r.duration_s = t;
  return r;
}

}  // namespace

TEST(Probability, Examples) {
  EXPECT_NEAR(coincidence_probability(0, 0, 0, 1), 0.5, 1e-15);
  EXPECT_NEAR(coincidence_probability(0, 90, 0, 1), 0.0, 1e-15);
  EXPECT_NEAR(coincidence_probability(45, 45, 0, 1), 0.5, 1e-15);
  EXPECT_NEAR(coincidence_probability(45, -45, 0, 1), 0.0, 1e-15);
  EXPECT_NEAR(coincidence_probability(45, 45, numerics::kPi, 1), 0.0, 1e-15);
  EXPECT_NEAR(coincidence_probability(45, 45, 0, 0), 0.25, 1e-15);
}

TEST(Probability, OutcomesSumToOne) {
  for (auto model : {StateModel::Dephasing, StateModel::Werner}) {
    for (double a : {0.0, 22.5, 45.0, 71.0}) {
      for (double b : {-30.0, 10.0, 45.0}) {
        const double sum = coincidence_probability(a, b, 0.3, 0.8, model) +
                           coincidence_probability(a + 90, b, 0.3, 0.8, model) +
                           coincidence_probability(a, b + 90, 0.3, 0.8, model) +
                           coincidence_probability(a + 90, b + 90, 0.3, 0.8, model);
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
    }
  }
}

TEST(Probability, ZeroVisibilityIgnoresPhase) {
  EXPECT_DOUBLE_EQ(coincidence_probability(30, 60, 0.0, 0.0), coincidence_probability(30, 60, 2.0, 0.0));
}

TEST(Simulation, Deterministic) {
  const MeasurementSetting s{45.0, 45.0, 1.0};
  const auto a = simulate_run(source(), s, 42);
  const auto b = simulate_run(source(), s, 42);
  EXPECT_EQ(a.singles_1, b.singles_1);
  EXPECT_EQ(a.singles_2, b.singles_2);
  EXPECT_EQ(a.coincidences, b.coincidences);
  const auto c = simulate_run(source(), s, 43);
  EXPECT_NE(a.singles_1, c.singles_1);
}

TEST(Simulation, CoincidencesBoundedBySingles) {
  auto p = source();
  p.coincidence_window_ns = 5000.0;  // absurd window, heavy accidentals
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = simulate_run(p, MeasurementSetting{0.0, 0.0, 0.1}, seed);
    EXPECT_LE(r.coincidences, std::min(r.singles_1, r.singles_2));
  }
}

TEST(Simulation, ZeroRate) {
  auto p = source();
  p.pair_rate_per_mw = 0.0;
  const auto r = simulate_run(p, MeasurementSetting{}, 1);
  EXPECT_EQ(r.singles_1 + r.singles_2 + r.coincidences, 0u);
}

TEST(Simulation, EnsembleMatchesExpectation) {
  const auto p = source();
  const MeasurementSetting s{22.5, 0.0, 0.5};
  const auto e = expected_rates(p, s);
  const int n = 100;
  double sum1 = 0, sumc = 0;
  for (int i = 0; i < n; ++i) {
    const auto r = simulate_run(p, s, derive_seed(99, i));
    sum1 += static_cast<double>(r.singles_1);
    sumc += static_cast<double>(r.coincidences);
  }
  const double mean1 = sum1 / n, meanc = sumc / n;
  const double exp1 = e.singles_1 * s.duration_s;
  const double expc = (e.true_coincidences + e.accidentals) * s.duration_s;
  EXPECT_LT(std::abs(mean1 - exp1), 3.0 * std::sqrt(exp1 / n));
  EXPECT_LT(std::abs(meanc - expc), 3.0 * std::sqrt(expc / n));
}

TEST(Accidentals, Arithmetic) {
  const auto c = accidental_correction(record(1000000, 1000000, 100000), 5.8);
  EXPECT_NEAR(c.accidentals, 5800.0, 1e-9);
  EXPECT_NEAR(c.rate, 94200.0, 1e-9);
  EXPECT_FALSE(c.clamped);
  const auto neg = accidental_correction(record(1000000, 1000000, 1000), 5.8);
  EXPECT_TRUE(neg.clamped);
  EXPECT_EQ(neg.rate, 0.0);
  EXPECT_LT(neg.unclamped, 0.0);
}

TEST(VisibilityEstimate, Examples) {
  const auto v = visibility_from_scan(record(0, 0, 900), record(0, 0, 100), 0.0);
  EXPECT_NEAR(v.value, 0.8, 1e-15);
  EXPECT_GT(v.std_error, 0.0);
  // A phase of pi swaps the roles of the two settings.
  const auto sw = visibility_from_scan(record(0, 0, 100), record(0, 0, 900), 0.0);
  EXPECT_NEAR(sw.value, -0.8, 1e-15);
  EXPECT_THROW(visibility_from_scan(record(0, 0, 0), record(0, 0, 0), 0.0), Error);
}

TEST(VisibilityEstimate, CorrectionRaisesVisibility) {
  const auto hi = record(200000, 200000, 10000), lo = record(200000, 200000, 400);
  EXPECT_GT(visibility_from_scan(hi, lo, 5.8).value, visibility_from_scan(hi, lo, 0.0).value);
}

TEST(Estimators, FidelityAndCoupling) {
  EXPECT_DOUBLE_EQ(fidelity_estimate(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(fidelity_estimate(0.98, 0.94), (1.0 + 0.98 + 1.88) / 4.0);
  EXPECT_THROW(fidelity_estimate(1.2, 0.5), Error);
  EXPECT_NEAR(coupling_efficiency_estimate(0.38, 0.51, {0.12, 0.03, 0.04}),
              0.38 / (0.51 * 0.88 * 0.97 * 0.96), 1e-15);
  EXPECT_THROW(coupling_efficiency_estimate(0.3, 0.0, {}), Error);
}

TEST(Rates, LinearInPower) {
  auto p = source();
  p.coincidence_window_ns = 0.0;
  const std::vector<double> powers{5.0, 10.0, 20.0};
  const auto rows = rates_vs_power(p, powers, MeasurementSetting{std::nullopt, std::nullopt, 5.0}, 3);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    const double expect = p.pair_rate_per_mw * r.power_mw * p.arm_efficiency(1);
    EXPECT_NEAR(r.singles_1 / expect, 1.0, 0.01);
  }
}

TEST(Rates, HalvedEfficiencyHalvesSingles) {
  auto p = source();
  auto q = p;
  q.detector_efficiency_1 *= 0.5;
  const MeasurementSetting s{std::nullopt, std::nullopt, 5.0};
  const auto a = expected_rates(p, s), b = expected_rates(q, s);
  EXPECT_NEAR(b.singles_1, 0.5 * a.singles_1, 1e-9);
  EXPECT_NEAR(b.true_coincidences, 0.5 * a.true_coincidences, 1e-9);
  const auto rows = rates_vs_power(q, {10.0}, s, 5);
  EXPECT_NEAR(rows[0].singles_1 / b.singles_1, 1.0, 0.01);
}

TEST(Rates, CsvHeaderAndSeeds) {
  const auto rows = rates_vs_power(source(), {1.0, 2.0}, MeasurementSetting{}, 11);
  const auto csv = io::power_table_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "power_mw,s1,s2,c_raw,c_corrected");
  EXPECT_NE(rows[0].seed, rows[1].seed);
}
