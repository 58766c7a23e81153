#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hom/errors.hpp"
#include "hom/math.hpp"
#include "hom/model.hpp"
#include "hom/params.hpp"

// Independent numerical oracles for tests, acceptance checks and `selftest`.
// Everything here integrates densities pointwise; none of it touches the
// erf-based bin kernel it is used to cross-check.

namespace hom::verify {

struct QuadratureSpec {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;
  int max_subdivisions = 2000;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

namespace detail {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1]: {node, Gauss weight, Kronrod weight}.
inline constexpr double gk15[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
};

template <class F>
double gk15_panel(F&& f, double a, double b, double& err) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double f0 = f(mid);
  double g7 = gk15[0][1] * f0;
  double k15 = gk15[0][2] * f0;
  for (int i = 1; i < 8; ++i) {
    const double dx = half * gk15[i][0];
    const double fi = f(mid + dx) + f(mid - dx);
    g7 += gk15[i][1] * fi;
    k15 += gk15[i][2] * fi;
  }
  g7 *= half;
  k15 *= half;
  err = std::pow(200.0 * std::abs(g7 - k15), 1.5);
  return k15;
}

template <class F>
QuadratureResult quad_finite(F&& f, double a, double b, const QuadratureSpec& spec) {
  struct Panel {
    double a, b, value, err;
  };
  std::vector<Panel> panels;
  double err0;
  double v0 = detail::gk15_panel(f, a, b, err0);
  panels.push_back({a, b, v0, err0});

  int splits = 0;
  while (splits < spec.max_subdivisions) {
    math::KahanSum total, toterr;
    std::size_t worst = 0;
    double worst_err = -1.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total += panels[i].value;
      toterr += panels[i].err;
      if (panels[i].err > worst_err) {
        worst_err = panels[i].err;
        worst = i;
      }
    }
    if (toterr.value() <= spec.abs_tol ||
        toterr.value() <= spec.rel_tol * std::abs(total.value())) {
      return {total.value(), toterr.value()};
    }

    const Panel p = panels[worst];
    const double mid = 0.5 * (p.a + p.b);
    double e1, e2;
    const double v1 = detail::gk15_panel(f, p.a, mid, e1);
    const double v2 = detail::gk15_panel(f, mid, p.b, e2);
    panels[worst] = {p.a, mid, v1, e1};
    panels.push_back({mid, p.b, v2, e2});
    ++splits;
  }
  throw ConvergenceError("quad_integrate: tolerance not reached after " +
                         std::to_string(spec.max_subdivisions) + " subdivisions");
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b]. Infinite endpoints
/// are folded onto a finite interval with the rational compactification
/// x = t/(1-|t|); the Kronrod nodes are interior, so endpoints are never
/// evaluated and the Gaussian decay kills the jacobian blow-up.
template <class F>
QuadratureResult quad_integrate(F&& f, double a, double b, QuadratureSpec spec = {}) {
  const bool inf_a = std::isinf(a);
  const bool inf_b = std::isinf(b);
  if (!inf_a && !inf_b) return detail::quad_finite(f, a, b, spec);

  auto wrap = [&f, a, b, inf_a, inf_b](double t) {
    double x;
    const double u = 1.0 - std::abs(t);
    if (inf_a && inf_b) {
      x = t / u;
    } else if (inf_b) {
      x = a + t / u;
    } else {
      x = b - t / u;  // positive jacobian either way
    }
    const double y = f(x) / (u * u);
    return std::isfinite(y) ? y : 0.0;
  };
  const double lo = (inf_a && inf_b) ? -1.0 : 0.0;
  return detail::quad_finite(wrap, lo, 1.0, spec);
}

/// Classical Fisher information of exact (un-binned) sampling from `density`
/// with respect to delta: integral of (d/d delta ln f)^2 f d tau, with the
/// delta-derivative taken by central differences.
template <class Density>
double score_integral_cfi(Density&& density, const PhysicalParams& p,
                          QuadratureSpec spec = {}) {
  require_valid(p);
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) *
                   std::max(std::abs(p.delta), 1.0 / p.sigma);
  PhysicalParams pp = p, pm = p;
  pp.delta += h;
  pm.delta -= h;
  auto integrand = [&](double tau) {
    const double f0 = density(p, tau);
    if (f0 <= 1e-300) return 0.0;
    const double d = (density(pp, tau) - density(pm, tau)) / (2.0 * h);
    return d * d / f0;
  };
  spec.rel_tol = std::max(spec.rel_tol, 1e-9);
  return quad_integrate(integrand, -std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::infinity(), spec)
      .value;
}

/// Coincidence density in the paper's raw bracket form. Overflows once
/// 8 delta sigma^2 tau is large; kept as an independent evaluation route for
/// equivalence checks only.
inline double literal_coincidence_density(const PhysicalParams& p, double tau) {
  require_valid(p);
  const double s2 = p.sigma * p.sigma;
  const double dp = p.delta + tau;
  return p.sigma / (2.0 * std::sqrt(2.0 * math::pi)) * std::exp(-2.0 * s2 * dp * dp) *
         (1.0 + std::exp(8.0 * p.delta * s2 * tau) -
          2.0 * p.alpha * std::exp(4.0 * p.delta * s2 * tau));
}

inline double literal_bunching_density(const PhysicalParams& p, double tau) {
  require_valid(p);
  const double s2 = p.sigma * p.sigma;
  const double dp = p.delta + tau;
  return p.sigma / (2.0 * std::sqrt(2.0 * math::pi)) * std::exp(-2.0 * s2 * dp * dp) *
         (1.0 + std::exp(8.0 * p.delta * s2 * tau) +
          2.0 * p.alpha * std::exp(4.0 * p.delta * s2 * tau));
}

/// Upper regularised incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a),
/// via the power series for x < a + 1 and Lentz's continued fraction above.
inline double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw DomainError("gamma_q: need a > 0, x >= 0");
  if (x == 0.0) return 1.0;

  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 10000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    return 1.0 - p;
  }

  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

/// p-value of a chi-square statistic with `dof` degrees of freedom.
inline double chi_square_pvalue(double stat, int dof) {
  if (dof <= 0) throw DomainError("chi_square_pvalue: dof must be positive");
  if (stat <= 0.0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * stat);
}

}  // namespace hom::verify
