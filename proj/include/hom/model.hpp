#pragma once

#include <array>
#include <cmath>

#include "hom/math.hpp"
#include "hom/params.hpp"

namespace hom::model {

/// Standard deviation of each Gaussian arrival-time component: 1/(2 sigma).
inline double component_sd(const PhysicalParams& p) { return 1.0 / (2.0 * p.sigma); }

/// HOM dip factor e^{-2 sigma^2 delta^2}.
inline double dip_suppression(const PhysicalParams& p) {
  return std::exp(-2.0 * p.sigma * p.sigma * p.delta * p.delta);
}

struct GaussianComponent {
  double center = 0.0;  // arrival-time difference at which the component peaks
  double weight = 0.0;  // signed mass of the unit-normalised component
};

using Components = std::array<GaussianComponent, 3>;

/// Decomposition of the coincidence density into weighted unit-mass normals
/// of sd 1/(2 sigma):
///   P_c(tau) = 1/4 N(tau; -delta) + 1/4 N(tau; +delta)
///            - (alpha/2) e^{-2 sigma^2 delta^2} N(tau; 0).
/// The cross term written this way never overflows, unlike the raw
/// e^{8 delta sigma^2 tau} bracket.
inline Components coincidence_components(const PhysicalParams& p) {
  return {{{-p.delta, 0.25},
           {p.delta, 0.25},
           {0.0, -0.5 * p.alpha * dip_suppression(p)}}};
}

/// Bunching mirror image: the cross term enters with a plus sign.
inline Components bunching_components(const PhysicalParams& p) {
  return {{{-p.delta, 0.25},
           {p.delta, 0.25},
           {0.0, 0.5 * p.alpha * dip_suppression(p)}}};
}

namespace detail {
inline double three_gaussian_density(const PhysicalParams& p, double tau, double cross_sign) {
  const double s2 = p.sigma * p.sigma;
  const double dp = p.delta + tau;
  const double dm = p.delta - tau;
  const double g1 = std::exp(-2.0 * s2 * dp * dp);
  const double g2 = std::exp(-2.0 * s2 * dm * dm);
  const double g3 = dip_suppression(p) * std::exp(-2.0 * s2 * tau * tau);
  return p.sigma / (2.0 * std::sqrt(2.0 * math::pi)) *
         (g1 + g2 + cross_sign * 2.0 * p.alpha * g3);
}
}  // namespace detail

/// Probability density (1/time) for the photons to exit different ports
/// with arrival-time difference tau.
inline double coincidence_density(const PhysicalParams& p, double tau) {
  require_valid(p);
  return detail::three_gaussian_density(p, tau, -1.0);
}

/// Density for both photons in the same output port, separated by tau.
inline double bunching_density(const PhysicalParams& p, double tau) {
  require_valid(p);
  return detail::three_gaussian_density(p, tau, +1.0);
}

struct TotalRates {
  double coincidence = 0.0;
  double bunching = 0.0;
};

/// Integrated coincidence/bunching rates:
///   P_c,tot = (1 - alpha e^{-2 sigma^2 delta^2}) / 2,  P_b,tot = 1 - P_c,tot.
inline TotalRates total_rates(const PhysicalParams& p) {
  require_valid(p);
  const double e = p.alpha * dip_suppression(p);
  return {0.5 * (1.0 - e), 0.5 * (1.0 + e)};
}

/// Arrival-time-difference density for the beamsplitter-free protocol:
/// N(tau; delta, 1/(2 sigma)) over signed tau. The photons never interfere,
/// so alpha plays no role and the sign of delta stays observable.
inline double nohom_density(const PhysicalParams& p, double tau) {
  require_valid(p);
  return math::norm_pdf(tau, p.delta, component_sd(p));
}

}  // namespace hom::model
