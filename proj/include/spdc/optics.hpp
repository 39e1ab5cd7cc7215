#pragma once

// Dispersion of uniaxial crystals: principal and angle-dependent refractive
// indices, their wavelength derivatives, group index and walk-off.
//
// Wavelengths are in nm and lengths in mm at this interface; the Sellmeier
// forms themselves are written in micrometers.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "spdc/error.hpp"
#include "spdc/numerics.hpp"

namespace spdc::optics {

inline constexpr double kDefaultDerivativeStepNm = 0.1;

inline double deg_to_rad(double deg) { return deg * numerics::kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / numerics::kPi; }

struct SellmeierPole {
  double b = 0.0;
  double c = 0.0;  // um^2
};

struct PolynomialTerm {
  double coefficient = 0.0;
  int power = 0;  // even power of lambda in um
};

/// n^2(l) = A + sum_i B_i / (l^2 - C_i) - D l^2 + sum_j E_j l^p_j, l in um.
struct SellmeierForm {
  double a = 1.0;
  std::vector<SellmeierPole> poles;
  double d = 0.0;
  std::vector<PolynomialTerm> poly;
  double min_nm = 0.0;
  double max_nm = 0.0;

  bool in_range(double lambda_nm) const { return lambda_nm >= min_nm && lambda_nm <= max_nm; }

  double n_squared(double lambda_nm) const {
    const double l = lambda_nm * 1e-3;
    const double l2 = l * l;
    double v = a - d * l2;
    for (const auto& p : poles) v += p.b / (l2 - p.c);
    for (const auto& t : poly) v += t.coefficient * std::pow(l, t.power);
    return v;
  }

  /// d(n^2)/d(lambda) per nm.
  double n_squared_derivative(double lambda_nm) const {
    const double l = lambda_nm * 1e-3;
    const double l2 = l * l;
    double v = -2.0 * d * l;
    for (const auto& p : poles) {
      const double q = l2 - p.c;
      v += -2.0 * p.b * l / (q * q);
    }
    for (const auto& t : poly) {
      if (t.power != 0) v += t.coefficient * t.power * std::pow(l, t.power - 1);
    }
    return v * 1e-3;
  }

  double index(double lambda_nm) const { return std::sqrt(n_squared(lambda_nm)); }

  double index_derivative(double lambda_nm) const {
    return n_squared_derivative(lambda_nm) / (2.0 * index(lambda_nm));
  }
};

enum class UniaxialSign { Negative, Positive };

struct Material {
  std::string name;
  UniaxialSign sign = UniaxialSign::Negative;
  SellmeierForm ordinary;
  SellmeierForm extraordinary;  // principal extraordinary index n_e
  std::string source;

  double min_nm() const { return std::max(ordinary.min_nm, extraordinary.min_nm); }
  double max_nm() const { return std::min(ordinary.max_nm, extraordinary.max_nm); }
  bool in_range(double lambda_nm) const {
    return lambda_nm >= min_nm() && lambda_nm <= max_nm();
  }
};

/// Checks the Material invariants: n^2 > 1 and the uniaxial sign at 21
/// wavelengths across the validity range.
inline void validate(const Material& m) {
  if (!(m.min_nm() < m.max_nm())) {
    throw Error(ErrorKind::InvalidArgument, m.name + ": empty validity range");
  }
  for (int i = 0; i <= 20; ++i) {
    const double l = m.min_nm() + (m.max_nm() - m.min_nm()) * i / 20.0;
    const double no2 = m.ordinary.n_squared(l);
    const double ne2 = m.extraordinary.n_squared(l);
    if (!(no2 > 1.0) || !(ne2 > 1.0)) {
      throw Error(ErrorKind::InvalidArgument, m.name + ": n^2 <= 1 inside validity range");
    }
    const bool negative = ne2 < no2;
    if (negative != (m.sign == UniaxialSign::Negative)) {
      throw Error(ErrorKind::InvalidArgument,
                  m.name + ": principal indices contradict the declared uniaxial sign");
    }
  }
}

class Polarization {
 public:
  enum class Kind { Ordinary, Extraordinary };

  static Polarization ordinary() { return Polarization(Kind::Ordinary, 0.0); }

  /// Extraordinary wave whose wave vector makes theta_deg with the optic axis.
  static Polarization extraordinary(double theta_deg) {
    if (!(theta_deg >= 0.0 && theta_deg <= 90.0)) {
      throw Error(ErrorKind::InvalidArgument, "polarization angle must lie in [0, 90] degrees");
    }
    return Polarization(Kind::Extraordinary, theta_deg);
  }

  Kind kind() const { return kind_; }
  double theta_deg() const { return theta_deg_; }

 private:
  Polarization(Kind k, double t) : kind_(k), theta_deg_(t) {}
  Kind kind_;
  double theta_deg_;
};

namespace detail {

inline void require_range(const Material& m, double lambda_nm) {
  if (!m.in_range(lambda_nm) || !std::isfinite(lambda_nm)) {
    throw Error(ErrorKind::Range, m.name + ": wavelength " + std::to_string(lambda_nm) +
                                      " nm outside validity range [" + std::to_string(m.min_nm()) +
                                      ", " + std::to_string(m.max_nm()) + "] nm");
  }
}

// Unchecked evaluation shared by the value and derivative routes.
inline double index_unchecked(const Material& m, const Polarization& pol, double lambda_nm) {
  if (pol.kind() == Polarization::Kind::Ordinary || pol.theta_deg() == 0.0) {
    return m.ordinary.index(lambda_nm);
  }
  if (pol.theta_deg() == 90.0) return m.extraordinary.index(lambda_nm);
  const double t = deg_to_rad(pol.theta_deg());
  const double c = std::cos(t), s = std::sin(t);
  const double inv = c * c / m.ordinary.n_squared(lambda_nm) +
                     s * s / m.extraordinary.n_squared(lambda_nm);
  return 1.0 / std::sqrt(inv);
}

}  // namespace detail

/// Phase index: n_o for ordinary waves, otherwise
/// 1/n(theta)^2 = cos^2(theta)/n_o^2 + sin^2(theta)/n_e^2.
inline double refractive_index(const Material& m, const Polarization& pol, double lambda_nm) {
  detail::require_range(m, lambda_nm);
  return detail::index_unchecked(m, pol, lambda_nm);
}

/// dn/dlambda per nm by central difference.
inline double index_derivative(const Material& m, const Polarization& pol, double lambda_nm,
                               double step_nm = kDefaultDerivativeStepNm) {
  detail::require_range(m, lambda_nm - step_nm);
  detail::require_range(m, lambda_nm + step_nm);
  return (detail::index_unchecked(m, pol, lambda_nm + step_nm) -
          detail::index_unchecked(m, pol, lambda_nm - step_nm)) /
         (2.0 * step_nm);
}

/// dn/dlambda per nm from the differentiated Sellmeier form.
inline double index_derivative_analytic(const Material& m, const Polarization& pol,
                                        double lambda_nm) {
  detail::require_range(m, lambda_nm);
  if (pol.kind() == Polarization::Kind::Ordinary || pol.theta_deg() == 0.0) {
    return m.ordinary.index_derivative(lambda_nm);
  }
  if (pol.theta_deg() == 90.0) return m.extraordinary.index_derivative(lambda_nm);
  const double t = deg_to_rad(pol.theta_deg());
  const double c2 = std::cos(t) * std::cos(t), s2 = std::sin(t) * std::sin(t);
  const double no = m.ordinary.index(lambda_nm), ne = m.extraordinary.index(lambda_nm);
  const double dno = m.ordinary.index_derivative(lambda_nm);
  const double dne = m.extraordinary.index_derivative(lambda_nm);
  const double n = detail::index_unchecked(m, pol, lambda_nm);
  return n * n * n * (c2 * dno / (no * no * no) + s2 * dne / (ne * ne * ne));
}

/// n_g = n - lambda dn/dlambda.
inline double group_index(const Material& m, const Polarization& pol, double lambda_nm,
                          double step_nm = kDefaultDerivativeStepNm) {
  return refractive_index(m, pol, lambda_nm) -
         lambda_nm * index_derivative(m, pol, lambda_nm, step_nm);
}

/// Walk-off angle (radians) of an extraordinary wave at theta_deg:
/// rho = atan((n_o/n_e)^2 tan(theta)) - theta. Positive for negative uniaxial
/// crystals (Poynting vector tilted away from the optic axis), negative for
/// positive uniaxial ones.
inline double walkoff_angle(const Material& m, double theta_deg, double lambda_nm) {
  if (!(theta_deg >= 0.0 && theta_deg <= 90.0)) {
    throw Error(ErrorKind::InvalidArgument, "walk-off angle needs theta in [0, 90] degrees");
  }
  detail::require_range(m, lambda_nm);
  if (theta_deg == 0.0 || theta_deg == 90.0) return 0.0;
  const double t = deg_to_rad(theta_deg);
  const double ratio = m.ordinary.n_squared(lambda_nm) / m.extraordinary.n_squared(lambda_nm);
  return std::atan(ratio * std::tan(t)) - t;
}

/// Lateral beam displacement (mm) after length_mm of crystal.
inline double lateral_displacement(double walkoff_rad, double length_mm) {
  return length_mm * std::tan(walkoff_rad);
}

}  // namespace spdc::optics
