#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "common.hpp"
#include "spdc/compensation.hpp"
#include "spdc/io.hpp"

using namespace spdc;
using namespace spdc::compensation;

namespace {

OpticalStack stack(double dp = 0.0, double dc = 0.0, int sp = 1, int sc = 1) {
  return OpticalStack::two_crystal(test::reference_crystal(), test::yvo4(), dp, dc, sp, sc);
}

optics::Material scaled_material(optics::Material m, double factor) {
  for (auto* f : {&m.ordinary, &m.extraordinary}) {
    for (auto& p : f->poles) p.b *= factor;
  }
  return m;
}

}  // namespace

TEST(Phase, AffineInCompensatorThickness) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dp(402.5, 403.5), dl(775.0, 790.0), d(0.0, 12.0);
  for (int i = 0; i < 100; ++i) {
    const double lp = dp(rng), l1 = dl(rng), a = d(rng), b = d(rng);
    const double p00 = relative_phase(stack(0, 0), lp, l1);
    const double pa0 = relative_phase(stack(a, 0), lp, l1);
    const double p0b = relative_phase(stack(0, b), lp, l1);
    const double pab = relative_phase(stack(a, b), lp, l1);
    EXPECT_NEAR(pab, pa0 + p0b - p00, 1e-9 * (1.0 + std::abs(pab)));
    const double p2a = relative_phase(stack(2 * a, 0), lp, l1);
    EXPECT_NEAR(p2a - p00, 2.0 * (pa0 - p00), 1e-9 * (1.0 + std::abs(p2a)));
  }
}

TEST(Phase, ZeroLengthIsZero) {
  auto c = test::reference_crystal();
  OpticalStack s = OpticalStack::two_crystal(c, test::yvo4());
  s.elements[1].thickness_mm = s.elements[2].thickness_mm = 0.0;
  EXPECT_EQ(relative_phase(s, 403.0, 780.0), 0.0);
}

TEST(Phase, SignFlipNegatesCompensatorTerm) {
  const double base = relative_phase(stack(), 403.2, 781.0);
  const double plus = relative_phase(stack(4.0, 0, +1), 403.2, 781.0) - base;
  const double minus = relative_phase(stack(4.0, 0, -1), 403.2, 781.0) - base;
  EXPECT_NEAR(plus, -minus, 1e-9 * std::abs(plus));
}

TEST(PhaseMap, UncompensatedVariesStrongly) {
  const auto s = solve_signal_idler(test::reference_crystal());
  const SpectralWindow w{403.0, 0.5, s.signal_nm, 7.5};
  EXPECT_GT(phase_map(stack(), w, 41).peak_to_peak, 20.0);
}

TEST(Optimizer, ZeroesGradient) {
  const auto sol = optimize_compensators(stack());
  EXPECT_LE(sol.residual_max(), 1e-6);
  EXPECT_GE(sol.pump_mm, 0.0);
  EXPECT_GE(sol.pair_mm, 0.0);
  const auto map = phase_map(sol.compensated, default_window(test::reference_crystal()), 41);
  EXPECT_LE(std::abs(map.center_gradient.d_pump), 1e-6);
  EXPECT_LE(std::abs(map.center_gradient.d_signal), 1e-6);
}

TEST(Optimizer, MapCenterIsZero) {
  const auto sol = optimize_compensators(stack());
  const SpectralWindow w{sol.center_pump_nm, 0.5, sol.center_signal_nm, 5.0};
  const auto map = phase_map(sol.compensated, w, 41);
  EXPECT_EQ(map.at(20, 20), 0.0);
}

TEST(Optimizer, SingularWithoutBirefringentCompensator) {
  auto iso = test::yvo4();
  iso.extraordinary = iso.ordinary;
  iso.sign = optics::UniaxialSign::Positive;
  const auto s = OpticalStack::two_crystal(test::reference_crystal(), iso);
  try {
    optimize_compensators(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularSystem);
  }
}

TEST(Optimizer, NegativeThicknessWithoutSignFlip) {
  // The reference solution needs s_p = -1, so fixing s_p = +1 is infeasible.
  try {
    optimize_compensators(stack(0, 0, +1, +1), OptimizeOptions{false});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NegativeThickness);
  }
}

TEST(Optimizer, SensitiveToDispersionData) {
  const auto ref = optimize_compensators(stack());
  const auto shifted = optimize_compensators(
      OpticalStack::two_crystal(test::reference_crystal(), scaled_material(test::yvo4(), 1.05)));
  EXPECT_GT(std::abs(shifted.pump_mm - ref.pump_mm) + std::abs(shifted.pair_mm - ref.pair_mm), 0.3);
}

TEST(PhaseMap, WorkerPartitionDeterministic) {
  const auto w = default_window(test::reference_crystal());
  const auto a = phase_map(stack(3.0, 2.0), w, 31, 1);
  const auto b = phase_map(stack(3.0, 2.0), w, 31, 4);
  EXPECT_EQ(a.phi, b.phi);
  EXPECT_EQ(io::phase_map_csv(a), io::phase_map_csv(b));
}

TEST(PhaseMap, CsvHeader) {
  const auto map = phase_map(stack(), default_window(test::reference_crystal()), 5);
  const auto csv = io::phase_map_csv(map);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda_p_nm,lambda_nm,phi_rad");
}

TEST(Visibility, GlobalPhaseInvariant) {
  const auto c = test::reference_crystal();
  const auto w = default_window(c);
  auto weight = [&](double lp, double l1) { return joint_spectral_weight(c, lp, l1); };
  const auto s = stack(1.0, 1.0);
  const double v0 = visibility(w, weight, [&](double lp, double l1) { return relative_phase(s, lp, l1); });
  const double v1 =
      visibility(w, weight, [&](double lp, double l1) { return relative_phase(s, lp, l1) + 1.234; });
  EXPECT_NEAR(v0, v1, 1e-12);
}

TEST(Visibility, ConstantPhaseIsOne) {
  const auto c = test::reference_crystal();
  const auto w = default_window(c);
  const double v = visibility(w, [&](double lp, double l1) { return joint_spectral_weight(c, lp, l1); },
                              [](double, double) { return 0.7; });
  EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Visibility, BoundedAndOrdered) {
  const auto c = test::reference_crystal();
  const auto w = default_window(c);
  const auto sol = optimize_compensators(stack());
  for (double dp : {0.0, 2.0, 5.0}) {
    const double v = predict_visibility(stack(dp, 1.0), w, 41);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GT(predict_visibility(sol.compensated, w, 41), predict_visibility(stack(), w, 41));
}

TEST(Visibility, NestedWindowsWithFlatPhase) {
  const auto c = test::reference_crystal();
  const auto sol = optimize_compensators(stack());
  const auto w = default_window(c);
  EXPECT_GE(predict_visibility(sol.compensated, w.scaled(0.5), 41) + 1e-12,
            predict_visibility(sol.compensated, w, 41));
}

TEST(Visibility, HomogeneousWeight) {
  const auto c = test::reference_crystal();
  const auto w = default_window(c);
  const auto s = stack(2.0, 3.0);
  auto phase = [&](double lp, double l1) { return relative_phase(s, lp, l1); };
  const double v1 = visibility(w, [&](double lp, double l1) { return joint_spectral_weight(c, lp, l1); }, phase, 41);
  const double v2 =
      visibility(w, [&](double lp, double l1) { return 37.0 * joint_spectral_weight(c, lp, l1); }, phase, 41);
  EXPECT_NEAR(v1, v2, 1e-12);
}

TEST(Visibility, ZeroWeightThrows) {
  const SpectralWindow w{403.0, 0.5, 780.0, 5.0};
  try {
    visibility(w, [](double, double) { return 0.0; }, [](double, double) { return 0.0; }, 11);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroWeight);
  }
}
