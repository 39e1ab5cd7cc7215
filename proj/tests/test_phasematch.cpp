#include <gtest/gtest.h>

#include <cmath>

#include "common.hpp"
#include "spdc/io.hpp"
#include "spdc/phasematch.hpp"

using namespace spdc;
using namespace spdc::phasematch;

namespace {

double degeneracy_angle() { return solve_angle(test::bbo(), 403.0, 806.0); }

// dDelta k / d lambda1 at fixed pump, by central difference.
double dk_slope(const PhaseMatchConfig& c, double l1) {
  const double h = 1e-3;
  return (delta_k(c, c.pump_center_nm, l1 + h) - delta_k(c, c.pump_center_nm, l1 - h)) / (2.0 * h);
}

}  // namespace

TEST(Solve, ResidualAndEnergy) {
  const auto c = test::reference_crystal();
  const auto s = solve_signal_idler(c);
  EXPECT_LT(std::abs(delta_k(c, 403.0, s.signal_nm)), 1e-6);
  EXPECT_LT(std::abs(1.0 / s.signal_nm + 1.0 / s.idler_nm - 1.0 / 403.0), 1e-12);
  EXPECT_LT(s.signal_nm, s.idler_nm);
  EXPECT_FALSE(s.degenerate);
}

TEST(Solve, BracketHasSignChange) {
  const auto c = test::reference_crystal();
  const auto s = solve_signal_idler(c);
  EXPECT_LT(delta_k(c, 403.0, s.signal_nm - 1.0) * delta_k(c, 403.0, s.signal_nm + 1.0), 0.0);
}

TEST(Solve, SignalIdlerSymmetry) {
  const auto c = test::reference_crystal();
  const auto s = solve_signal_idler(c);
  EXPECT_NEAR(delta_k(c, 403.0, s.idler_nm), delta_k(c, 403.0, s.signal_nm), 1e-9);
  EXPECT_NEAR(conjugate_wavelength(403.0, s.idler_nm), s.signal_nm, 1e-9);
}

TEST(Solve, NoPhaseMatchBeyondDegeneracy) {
  auto c = test::reference_crystal();
  c.theta_p_deg = degeneracy_angle() + 2.0;
  try {
    solve_signal_idler(c);
    FAIL() << "expected NoPhaseMatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoPhaseMatch);
  }
}

TEST(Solve, AngleRoundTrip) {
  for (double target : {700.0, 765.0, 790.0}) {
    auto c = test::reference_crystal();
    c.theta_p_deg = solve_angle(test::bbo(), 403.0, target);
    EXPECT_NEAR(solve_signal_idler(c).signal_nm, target, 1e-4);
  }
}

TEST(Solve, DegeneracyAngleAboveCut) {
  EXPECT_GT(degeneracy_angle(), 29.0);
  auto c = test::reference_crystal();
  c.theta_p_deg = degeneracy_angle();
  const auto s = solve_signal_idler(c);
  EXPECT_TRUE(s.degenerate);
  EXPECT_NEAR(s.signal_nm, 806.0, 1e-6);
}

TEST(Solve, InvalidTargets) {
  EXPECT_THROW(solve_angle(test::bbo(), 403.0, 403.0), Error);
  EXPECT_THROW(solve_angle(test::bbo(), 403.0, 900.0), Error);
  auto c = test::reference_crystal();
  c.length_mm = 0.0;
  EXPECT_THROW(solve_signal_idler(c), Error);
}

TEST(Spectrum, NarrowsWithLength) {
  auto c = test::reference_crystal(0.0);
  const double w1 = spectrum_auto(c, Arm::Signal).fwhm_nm;
  c.length_mm *= 2.0;
  const double w2 = spectrum_auto(c, Arm::Signal).fwhm_nm;
  EXPECT_LT(w2, w1);
}

TEST(Spectrum, PumpBandwidthBroadens) {
  const double mono = spectrum_auto(test::reference_crystal(0.0), Arm::Signal).fwhm_nm;
  const double broad = spectrum_auto(test::reference_crystal(0.5), Arm::Signal).fwhm_nm;
  EXPECT_GE(broad, mono);
}

TEST(Spectrum, MonochromaticMatchesSincOracle) {
  // Far from degeneracy Delta k is close to linear in lambda1 across the peak.
  auto c = test::reference_crystal(0.0);
  c.theta_p_deg = solve_angle(test::bbo(), 403.0, 700.0);
  const std::vector<double> lengths{4.0, 8.0, 16.0};
  for (double L : lengths) {
    c.length_mm = L;
    const auto s = spectrum_auto(c, Arm::Signal, 0.005);
    const double oracle = 5.566 / (L * std::abs(dk_slope(c, solve_signal_idler(c).signal_nm)));
    EXPECT_NEAR(s.fwhm_nm / oracle, 1.0, 0.02) << L;
  }
  const auto scan = bandwidth_scan(c, lengths, Arm::Signal);
  EXPECT_NEAR(scan.exponent, -1.0, 0.02);
}

TEST(Spectrum, SignalAndIdlerCentered) {
  const auto c = test::reference_crystal(0.0);
  const auto sol = solve_signal_idler(c);
  EXPECT_NEAR(spectrum_auto(c, Arm::Signal).peak_nm, sol.signal_nm, 0.1);
  EXPECT_NEAR(spectrum_auto(c, Arm::Idler).peak_nm, sol.idler_nm, 0.1);
}

TEST(Spectrum, WorkerCountDoesNotChangeResult) {
  const auto c = test::reference_crystal(0.5);
  const auto a = spectrum_auto(c, Arm::Idler, kDefaultSpectralStepNm, 1);
  const auto b = spectrum_auto(c, Arm::Idler, kDefaultSpectralStepNm, 4);
  ASSERT_EQ(a.density.size(), b.density.size());
  for (std::size_t i = 0; i < a.density.size(); ++i) EXPECT_EQ(a.density[i], b.density[i]);
  EXPECT_EQ(a.fwhm_nm, b.fwhm_nm);
}

TEST(Spectrum, CoarseGridIsResolutionError) {
  const auto c = test::reference_crystal(0.0);
  const auto sol = solve_signal_idler(c);
  SpectralGrid g{sol.signal_nm - 30.0, sol.signal_nm + 30.0, 2.0};
  try {
    spectral_density(c, g, Arm::Signal);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Resolution);
  }
}

TEST(Spectrum, PumpQuadratureNormalized) {
  const auto q = pump_quadrature(403.0, 0.5);
  EXPECT_EQ(q.lambda_nm.size(), kPumpQuadratureIntervals + 1);
  double sum = 0.0;
  for (double w : q.weight) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-3);
  EXPECT_EQ(pump_quadrature(403.0, 0.0).lambda_nm.size(), 1u);
}

TEST(Scan, Errors) {
  const auto c = test::reference_crystal(0.0);
  try {
    bandwidth_scan(c, {5.0, 5.0, 5.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateFit);
  }
  EXPECT_THROW(bandwidth_scan(c, {5.0, 10.0}), Error);
}

TEST(Output, CsvHeaders) {
  const auto c = test::reference_crystal(0.0);
  const auto s = spectrum_auto(c, Arm::Signal);
  const std::string csv = io::spectrum_csv(s);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda_nm,density");
  const auto scan = bandwidth_scan(c, {3.94, 7.88, 15.76});
  const std::string sc = io::scan_csv(scan);
  EXPECT_EQ(sc.substr(0, sc.find('\n')), "L_mm,fwhm_nm");
}
