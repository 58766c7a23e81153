#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hom/binned.hpp"
#include "hom/errors.hpp"
#include "hom/math.hpp"
#include "hom/params.hpp"

namespace hom::information {

enum class Param { delta, alpha, sigma, gamma };

inline std::string param_name(Param p) {
  switch (p) {
    case Param::delta: return "delta";
    case Param::alpha: return "alpha";
    case Param::sigma: return "sigma";
    case Param::gamma: return "gamma";
  }
  return "?";
}

/// Ordered subset of {delta, alpha, sigma, gamma}; the order fixes the
/// Fisher matrix row/column order.
using ParameterSet = std::vector<Param>;

inline void require_valid(const ParameterSet& ps) {
  if (ps.empty()) throw ConfigError("parameter set must be nonempty");
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = i + 1; j < ps.size(); ++j)
      if (ps[i] == ps[j]) throw ConfigError("parameter set has duplicates");
}

inline double get_param(const PhysicalParams& p, Param which) {
  switch (which) {
    case Param::delta: return p.delta;
    case Param::alpha: return p.alpha;
    case Param::sigma: return p.sigma;
    case Param::gamma: return p.gamma;
  }
  return 0.0;
}

inline void set_param(PhysicalParams& p, Param which, double value) {
  switch (which) {
    case Param::delta: p.delta = value; break;
    case Param::alpha: p.alpha = value; break;
    case Param::sigma: p.sigma = value; break;
    case Param::gamma: p.gamma = value; break;
  }
}

struct FisherMatrix {
  ParameterSet params;
  math::Matrix entries;
  long n_repetitions = 1;
};

using DistBuilder = std::function<binned::OutcomeDistribution(const PhysicalParams&)>;

/// Builder that freezes the bin range at the given base parameters, so that
/// perturbed evaluations share one outcome set and tail jitter cannot leak
/// into derivatives.
inline DistBuilder frozen_dist_builder(const PhysicalParams& p,
                                       const binned::BinningConfig& bc,
                                       const binned::DetectorConfig& dc,
                                       binned::Protocol protocol) {
  const binned::BinRange range =
      dc.time_resolving ? binned::choose_bin_range(p, bc, protocol) : binned::BinRange{};
  return [bc, dc, protocol, range](const PhysicalParams& q) {
    return binned::outcome_distribution_fixed(q, bc, dc, protocol, range);
  };
}

inline constexpr double p_floor = 1e-300;

struct FimDiagnostics {
  bool degenerate_warning = false;  // > 10% of mass sits below p_floor
  double mass_below_floor = 0.0;
};

namespace detail {

inline double diff_scale(Param which, const PhysicalParams& p) {
  switch (which) {
    case Param::delta: return 1.0 / p.sigma;
    case Param::alpha: return 0.05;
    case Param::sigma: return p.sigma / 20.0;
    case Param::gamma: return 0.05;
  }
  return 1.0;
}

inline double diff_step(Param which, const PhysicalParams& p) {
  const double eps3 = std::cbrt(std::numeric_limits<double>::epsilon());
  return eps3 * std::max(std::abs(get_param(p, which)), diff_scale(which, p));
}

inline void check_interior(Param which, const PhysicalParams& p, double h) {
  const double v = get_param(p, which);
  const bool unit_box = which == Param::alpha || which == Param::gamma;
  if (unit_box && (v - h < 0.0 || v + h > 1.0))
    throw BoundaryError(param_name(which) +
                        " sits at its domain edge; central differences need an "
                        "interior point");
  if (which == Param::sigma && v - h <= 0.0)
    throw BoundaryError("sigma too close to zero for central differences");
}

}  // namespace detail

/// Numeric Fisher information matrix sum_m (d_i P_m)(d_j P_m)/P_m, evaluated
/// as a Gram matrix of central-difference amplitude derivatives:
/// F_ij = 4 sum_m (d_i sqrt P_m)(d_j sqrt P_m). The two forms agree for
/// P_m > 0, but the amplitude form needs no 1/P guard and keeps the matrix
/// positive semidefinite by construction. When delta = 0 and the outcome law
/// is even in delta (every HOM configuration), the delta-derivative switches
/// to a one-sided amplitude difference, which evaluates the delta -> 0 limit
/// of the information instead of the degenerate stationary value.
inline FisherMatrix fim_numeric(const DistBuilder& builder, const PhysicalParams& p,
                                const ParameterSet& ps,
                                FimDiagnostics* diag = nullptr) {
  hom::require_valid(p);
  require_valid(ps);

  const binned::OutcomeDistribution base = builder(p);
  const std::size_t m = base.entries.size();

  std::map<binned::Outcome, std::size_t> index;
  for (std::size_t i = 0; i < m; ++i) index[base.entries[i].first] = i;

  auto aligned = [&](const PhysicalParams& q) {
    std::vector<double> v(m, 0.0);
    const auto dist = builder(q);
    for (const auto& [outcome, prob] : dist.entries) {
      auto it = index.find(outcome);
      if (it != index.end()) v[it->second] = prob;
    }
    return v;
  };

  std::vector<double> base_prob(m);
  double max_prob = 0.0;
  math::KahanSum floor_mass;
  for (std::size_t i = 0; i < m; ++i) {
    base_prob[i] = base.entries[i].second;
    max_prob = std::max(max_prob, base_prob[i]);
    if (base_prob[i] <= p_floor) floor_mass += base_prob[i];
  }
  if (diag) {
    diag->mass_below_floor = floor_mass.value();
    diag->degenerate_warning = floor_mass.value() > 0.1;
  }
  // Probabilities at the rounding level of the distribution assembly are
  // indistinguishable from zero; their true information content is below
  // 1e-10 while the amplitude differences would amplify the noise.
  const double noise_floor = 1e-13 * max_prob;

  const std::size_t k = ps.size();
  std::vector<std::vector<double>> amp_grad(k, std::vector<double>(m));
  for (std::size_t i = 0; i < k; ++i) {
    const double h = detail::diff_step(ps[i], p);
    detail::check_interior(ps[i], p, h);

    PhysicalParams pp = p, pm = p;
    set_param(pp, ps[i], get_param(p, ps[i]) + h);
    set_param(pm, ps[i], get_param(p, ps[i]) - h);
    const auto vp = aligned(pp);
    const auto vm = aligned(pm);

    bool even_at_zero = false;
    if (ps[i] == Param::delta && p.delta == 0.0) {
      even_at_zero = true;
      double scale = 0.0;
      for (std::size_t j = 0; j < m; ++j) scale = std::max(scale, vp[j]);
      for (std::size_t j = 0; j < m; ++j) {
        if (std::abs(vp[j] - vm[j]) > 1e-13 * scale) {
          even_at_zero = false;
          break;
        }
      }
    }

    for (std::size_t j = 0; j < m; ++j) {
      if (std::max({base_prob[j], vp[j], vm[j]}) <= std::max(p_floor, noise_floor)) {
        amp_grad[i][j] = 0.0;
        continue;
      }
      const double sp = std::sqrt(std::max(vp[j], 0.0));
      if (even_at_zero) {
        // |delta|-limit: one-sided slope of the amplitude.
        const double s0 = std::sqrt(std::max(base_prob[j], 0.0));
        amp_grad[i][j] = (sp - s0) / h;
      } else {
        const double sm = std::sqrt(std::max(vm[j], 0.0));
        amp_grad[i][j] = (sp - sm) / (2.0 * h);
      }
    }
  }

  FisherMatrix out;
  out.params = ps;
  out.entries = math::Matrix(static_cast<int>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      math::KahanSum acc;
      for (std::size_t t = 0; t < m; ++t) acc += amp_grad[i][t] * amp_grad[j][t];
      const double fij = 4.0 * acc.value();
      out.entries(static_cast<int>(i), static_cast<int>(j)) = fij;
      out.entries(static_cast<int>(j), static_cast<int>(i)) = fij;
    }
  }
  return out;
}

/// Single-parameter classical Fisher information for delta.
inline double cfi_delta(const DistBuilder& builder, const PhysicalParams& p) {
  return fim_numeric(builder, p, {Param::delta}).entries(0, 0);
}

inline double cfi_delta(const PhysicalParams& p, const binned::BinningConfig& bc,
                        const binned::DetectorConfig& dc, binned::Protocol protocol) {
  return cfi_delta(frozen_dist_builder(p, bc, dc, protocol), p);
}

namespace detail {

// kappa/chi/xi denominators are differences of exponentials that vanish as
// delta -> 0 at perfect visibility; splitting off the delta-independent part
// and using expm1 keeps them fully accurate there.

inline double kappa(const PhysicalParams& p) {
  const double x = p.delta * p.delta * p.sigma * p.sigma;
  const double a = p.alpha, g = p.gamma;
  const double den = (a * a * (g - 1.0) - 4.0 * a * g + 3.0 * g + 1.0) -
                     4.0 * a * g * std::expm1(2.0 * x) +
                     (3.0 * g + 1.0) * std::expm1(4.0 * x);
  return (1.0 - g) * (1.0 - g) * (1.0 + g) / den;
}

inline double chi(const PhysicalParams& p) {
  const double x = p.delta * p.delta * p.sigma * p.sigma;
  const double a = p.alpha, g = p.gamma;
  const double den =
      (a * (g - 1.0) - 3.0 * g - 1.0) - (3.0 * g + 1.0) * std::expm1(2.0 * x);
  return (1.0 - g) / den;
}

inline double xi(const PhysicalParams& p) {
  const double x = p.delta * p.delta * p.sigma * p.sigma;
  const double den = (1.0 - p.alpha) * (1.0 + p.alpha) + std::expm1(4.0 * x);
  return (1.0 - p.gamma) * (1.0 - p.gamma) / den;
}

}  // namespace detail

/// Closed-form delta-information for bucket detectors without timing.
/// Continuous in delta away from the perfect-visibility point; at
/// delta = 0 the value is 0 for alpha < 1 and the 4 sigma^2 (1-gamma)^2
/// limit at alpha = 1 (where the information is discontinuous at the origin).
inline double cfi_bucket_notr(const PhysicalParams& p) {
  hom::require_valid(p);
  if (p.delta == 0.0)
    return p.alpha == 1.0
               ? 4.0 * p.sigma * p.sigma * (1.0 - p.gamma) * (1.0 - p.gamma)
               : 0.0;
  return 16.0 * p.alpha * p.alpha * p.delta * p.delta * detail::kappa(p) *
         std::pow(p.sigma, 4);
}

/// Closed-form delta-information for number-resolving detectors without
/// timing.
inline double cfi_nr_notr(const PhysicalParams& p) {
  hom::require_valid(p);
  if (p.delta == 0.0)
    return p.alpha == 1.0
               ? 4.0 * p.sigma * p.sigma * (1.0 - p.gamma) * (1.0 - p.gamma)
               : 0.0;
  return 16.0 * p.alpha * p.alpha * p.delta * p.delta * detail::xi(p) *
         std::pow(p.sigma, 4);
}

/// Closed-form 4x4 Fisher matrix (delta, alpha, sigma, gamma) for bucket
/// detectors without timing. Rank 2 for generic interior parameters.
inline FisherMatrix closed_form_fim_bucket(const PhysicalParams& p) {
  hom::require_valid(p);
  if (p.gamma == 1.0) throw BoundaryError("closed_form_fim_bucket: gamma = 1");
  const double k = detail::kappa(p);
  const double x = detail::chi(p);
  const double d = p.delta, a = p.alpha, s = p.sigma, g = p.gamma;
  const double e2 = std::exp(2.0 * d * d * s * s);

  FisherMatrix out;
  out.params = {Param::delta, Param::alpha, Param::sigma, Param::gamma};
  math::Matrix F(4);
  F(0, 0) = 16.0 * a * a * d * d * k * s * s * s * s;
  F(0, 1) = F(1, 0) = -4.0 * a * d * k * s * s;
  F(0, 2) = F(2, 0) = 16.0 * a * a * d * d * d * k * s * s * s;
  F(0, 3) = F(3, 0) = 8.0 * a * d * s * s * x;
  F(1, 1) = k;
  F(1, 2) = F(2, 1) = -4.0 * a * d * d * k * s;
  F(1, 3) = F(3, 1) = -2.0 * x;
  F(2, 2) = 16.0 * a * a * d * d * d * d * k * s * s;
  F(2, 3) = F(3, 2) = 8.0 * a * d * d * s * x;
  F(3, 3) = -8.0 * x * e2 / ((1.0 - g) * (1.0 - g));
  out.entries = std::move(F);
  return out;
}

/// Closed-form 4x4 Fisher matrix for number-resolving detectors without
/// timing; gamma decouples completely.
inline FisherMatrix closed_form_fim_nr(const PhysicalParams& p) {
  hom::require_valid(p);
  if (p.gamma == 1.0 || p.gamma == 0.0)
    throw BoundaryError("closed_form_fim_nr: gamma on its domain edge");
  const double xv = detail::xi(p);
  const double d = p.delta, a = p.alpha, s = p.sigma, g = p.gamma;

  FisherMatrix out;
  out.params = {Param::delta, Param::alpha, Param::sigma, Param::gamma};
  math::Matrix F(4);
  F(0, 0) = 16.0 * a * a * d * d * xv * s * s * s * s;
  F(0, 1) = F(1, 0) = -4.0 * a * d * xv * s * s;
  F(0, 2) = F(2, 0) = 16.0 * a * a * d * d * d * xv * s * s * s;
  F(1, 1) = xv;
  F(1, 2) = F(2, 1) = -4.0 * a * d * d * xv * s;
  F(2, 2) = 16.0 * a * a * d * d * d * d * xv * s * s;
  F(3, 3) = 2.0 / (g - g * g);
  out.entries = std::move(F);
  return out;
}

/// Quantum Fisher information for the delay: H_delta = 4 sigma^2.
inline double qfi(double sigma) {
  if (!(sigma > 0.0)) throw DomainError("qfi: sigma > 0 required");
  return 4.0 * sigma * sigma;
}

/// QFI conditioned on both photons surviving: (1-gamma)^2 H_delta.
inline double qfi_two_photon(double sigma, double gamma) {
  if (!(sigma > 0.0) || gamma < 0.0 || gamma > 1.0)
    throw DomainError("qfi_two_photon: invalid sigma or gamma");
  return 4.0 * sigma * sigma * (1.0 - gamma) * (1.0 - gamma);
}

/// Information as a fraction of the two-photon conditioned QFI.
inline double relative_information(double fisher, double sigma, double gamma) {
  return fisher / qfi_two_photon(sigma, gamma);
}

struct CfiConfig {
  PhysicalParams params;  // delta ignored by the search
  binned::BinningConfig binning;
  binned::DetectorConfig detector;
  binned::Protocol protocol = binned::Protocol::hom;
};

struct OptimalDelta {
  double delta = 0.0;
  double fisher = 0.0;
  bool flat_warning = false;
};

/// Global maximum of cfi_delta over delta in [0, 5/sigma + 2T]: coarse grid
/// of pitch min(T, 1/sigma)/40, then golden-section refinement of the best
/// bracket down to 1e-6/sigma. Ties break toward smaller delta (the CFI is
/// even in delta, so the nonnegative axis suffices).
inline OptimalDelta optimal_delta(const CfiConfig& cfg) {
  const double sigma = cfg.params.sigma;
  const double T = cfg.detector.time_resolving ? cfg.binning.bin_width : 0.0;
  const double delta_max = 5.0 / sigma + 2.0 * T;
  const double step = (T > 0.0 ? std::min(T, 1.0 / sigma) : 1.0 / sigma) / 40.0;

  auto cfi = [&](double d) {
    PhysicalParams p = cfg.params;
    p.delta = d;
    return cfi_delta(p, cfg.binning, cfg.detector, cfg.protocol);
  };

  double best_x = 0.0;
  double best_f = -1.0;
  const int npts = static_cast<int>(std::floor(delta_max / step)) + 1;
  for (int i = 0; i < npts; ++i) {
    const double x = i * step;
    const double f = cfi(x);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }

  const double lo = std::max(0.0, best_x - step);
  const double hi = std::min(delta_max, best_x + step);
  const auto refined = math::golden_section_max(cfi, lo, hi, 1e-6 / sigma);

  OptimalDelta out;
  const double f_tie = 1e-12 * std::max(std::abs(best_f), std::abs(refined.f));
  const bool tie = std::abs(refined.f - best_f) <= f_tie;
  if ((tie && refined.x < best_x) || (!tie && refined.f > best_f)) {
    out.delta = refined.x;
    out.fisher = refined.f;
  } else {
    out.delta = best_x;
    out.fisher = best_f;
  }
  out.flat_warning = out.fisher < 1e-12 * sigma * sigma;
  return out;
}

struct FimAnalysis {
  double determinant = 0.0;
  std::vector<double> eigenvalues;  // ascending
  int rank = 0;
  bool singular = false;
  /// Cramer-Rao variance per parameter (diagonal of F^{-1} / n_repetitions);
  /// present only when the matrix is full rank.
  std::optional<std::vector<double>> crb_variance;
};

/// Eigenstructure report of a Fisher matrix: determinant, eigenvalues, rank
/// at the 1e-10 relative threshold, and the CRB diagonal when invertible.
inline FimAnalysis fim_analysis(const FisherMatrix& fm) {
  const int n = fm.entries.n;
  const auto eig = math::eigen_symmetric(fm.entries);

  FimAnalysis out;
  out.eigenvalues = eig.values;
  double det = 1.0;
  double max_abs = 0.0;
  for (double v : eig.values) {
    det *= v;
    max_abs = std::max(max_abs, std::abs(v));
  }
  out.determinant = det;
  for (double v : eig.values)
    if (std::abs(v) > 1e-10 * max_abs && max_abs > 0.0) ++out.rank;
  out.singular = out.rank < n;

  if (!out.singular) {
    std::vector<double> crb(n, 0.0);
    for (int i = 0; i < n; ++i) {
      math::KahanSum acc;
      for (int k = 0; k < n; ++k)
        acc += eig.vectors(i, k) * eig.vectors(i, k) / eig.values[k];
      crb[i] = acc.value() / static_cast<double>(fm.n_repetitions);
    }
    out.crb_variance = std::move(crb);
  }
  return out;
}

/// Fisher matrix of one protocol configuration at the given parameters.
inline FisherMatrix fim_for_config(const PhysicalParams& p,
                                   const binned::BinningConfig& bc,
                                   const binned::DetectorConfig& dc,
                                   binned::Protocol protocol, const ParameterSet& ps,
                                   FimDiagnostics* diag = nullptr) {
  return fim_numeric(frozen_dist_builder(p, bc, dc, protocol), p, ps, diag);
}

}  // namespace hom::information
