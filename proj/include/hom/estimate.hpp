#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "hom/binned.hpp"
#include "hom/errors.hpp"
#include "hom/information.hpp"
#include "hom/math.hpp"
#include "hom/params.hpp"
#include "hom/simulate.hpp"

namespace hom::estimate {

struct EstimationResult {
  std::map<information::Param, double> estimates;
  double log_likelihood = 0.0;
  information::FisherMatrix observed_information;
  std::map<information::Param, double> crb_variance;
  std::uint64_t n_trials = 0;
  bool boundary_warning = false;
};

namespace detail {

inline bool outcome_admissible(const binned::Outcome& o,
                               const binned::DetectorConfig& dc,
                               binned::Protocol protocol) {
  using K = binned::OutcomeKind;
  switch (o.kind) {
    case K::zero_clicks:
    case K::one_click:
    case K::overflow:
      return true;
    case K::coincidence_sep:
      return protocol == binned::Protocol::hom && dc.time_resolving && o.bin >= 0;
    case K::bunch_sep:
      return protocol == binned::Protocol::hom && dc.time_resolving &&
             dc.number_resolving && o.bin >= 0;
    case K::two_clicks_coinc:
      return !dc.time_resolving;
    case K::two_clicks_bunch:
      return protocol == binned::Protocol::hom && !dc.time_resolving &&
             dc.number_resolving;
    case K::nohom_sep:
      return protocol == binned::Protocol::nohom && dc.time_resolving;
  }
  return false;
}

// Range that covers both the candidate's natural support and every bin that
// was actually observed, so no observed outcome silently drops to P = 0 just
// because the truncation moved.
inline binned::BinRange covering_range(const simulate::CountsHistogram& counts,
                                       const PhysicalParams& candidate) {
  if (!counts.detector.time_resolving) return {};
  binned::BinRange r =
      binned::choose_bin_range(candidate, counts.binning, counts.protocol);
  for (const auto& [o, c] : counts.counts) {
    if (!binned::outcome_has_bin(o.kind)) continue;
    r.hi = std::max(r.hi, o.bin);
    if (counts.protocol == binned::Protocol::nohom) r.lo = std::min(r.lo, o.bin);
  }
  return r;
}

}  // namespace detail

/// Multinomial log-likelihood of the recorded counts under `candidate`.
/// Outcomes with positive count but zero model probability push the result
/// to -infinity.
inline double log_likelihood(const simulate::CountsHistogram& counts,
                             const PhysicalParams& candidate) {
  require_valid(candidate);
  for (const auto& [o, c] : counts.counts)
    if (!detail::outcome_admissible(o, counts.detector, counts.protocol))
      throw IncompatibleConfigError(
          "counts contain outcomes outside the configuration's admissible set");

  const auto dist = binned::outcome_distribution_fixed(
      candidate, counts.binning, counts.detector, counts.protocol,
      detail::covering_range(counts, candidate));

  std::map<binned::Outcome, double> prob;
  for (const auto& [o, v] : dist.entries) prob[o] = v;

  math::KahanSum ll;
  for (const auto& [o, c] : counts.counts) {
    if (c == 0) continue;
    const auto it = prob.find(o);
    const double pm = it == prob.end() ? 0.0 : it->second;
    if (pm <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(c) * std::log(pm);
  }
  return ll.value();
}

namespace detail {

struct DeltaSearch {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
};

inline DeltaSearch delta_search_domain(const simulate::CountsHistogram& counts,
                                       const PhysicalParams& known) {
  const double sigma = known.sigma;
  const double T = counts.detector.time_resolving ? counts.binning.bin_width : 0.0;
  const double reach = 5.0 / sigma + 2.0 * T;
  DeltaSearch s;
  s.step = (1.0 / sigma) / 200.0;
  if (counts.protocol == binned::Protocol::nohom) {
    // Centre the signed window on the modal bin so large delays stay in view.
    double center = 0.0;
    std::uint64_t best = 0;
    for (const auto& [o, c] : counts.counts)
      if (o.kind == binned::OutcomeKind::nohom_sep && c > best) {
        best = c;
        center = o.bin * counts.binning.bin_width;
      }
    s.lo = center - reach;
    s.hi = center + reach;
  } else {
    s.lo = 0.0;
    s.hi = reach;
  }
  return s;
}

}  // namespace detail

/// Maximum-likelihood estimate of delta with (alpha, sigma, gamma) known.
/// HOM data determines |delta| only, so the estimate is reported on the
/// nonnegative axis; no-HOM estimates are signed.
inline EstimationResult mle_delta(const simulate::CountsHistogram& counts,
                                  const PhysicalParams& known) {
  auto ll = [&](double d) {
    PhysicalParams cand = known;
    cand.delta = d;
    return log_likelihood(counts, cand);
  };

  const auto dom = detail::delta_search_domain(counts, known);
  const int npts = static_cast<int>(std::floor((dom.hi - dom.lo) / dom.step)) + 1;
  double best_x = dom.lo, best_f = -std::numeric_limits<double>::infinity();
  double min_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i < npts; ++i) {
    const double x = dom.lo + i * dom.step;
    const double f = ll(x);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
    min_f = std::min(min_f, f);
  }

  if (!std::isfinite(best_f) ||
      best_f - min_f < 1e-9 * std::max(1.0, std::abs(best_f)))
    throw FlatLikelihoodError(
        "likelihood carries no delta information (e.g. all zero-click data)");

  const double xtol = 1e-6 / known.sigma;
  const auto refined = math::golden_section_max(
      ll, std::max(dom.lo, best_x - dom.step), std::min(dom.hi, best_x + dom.step), xtol);

  double delta_hat = best_x;
  double ll_hat = best_f;
  if (refined.f > best_f) {
    delta_hat = refined.x;
    ll_hat = refined.f;
  }

  EstimationResult out;
  out.estimates[information::Param::delta] = delta_hat;
  out.log_likelihood = ll_hat;
  out.n_trials = counts.n_trials;
  // delta = 0 is the physical floor of a |delta| estimate, not a truncation
  // artefact, so only genuine window edges trigger the warning.
  out.boundary_warning =
      delta_hat >= dom.hi - dom.step ||
      (counts.protocol == binned::Protocol::nohom && delta_hat <= dom.lo + dom.step);

  // Observed information: negative second difference at the optimum.
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) *
                   std::max(std::abs(delta_hat), 1.0 / known.sigma);
  out.observed_information.params = {information::Param::delta};
  out.observed_information.entries = math::Matrix(1);
  out.observed_information.entries(0, 0) =
      -(ll(delta_hat + h) - 2.0 * ll_hat + ll(delta_hat - h)) / (h * h);

  PhysicalParams at = known;
  at.delta = delta_hat;
  const double fim = information::fim_for_config(at, counts.binning, counts.detector,
                                                 counts.protocol,
                                                 {information::Param::delta})
                         .entries(0, 0);
  if (fim > 0.0)
    out.crb_variance[information::Param::delta] =
        1.0 / (fim * static_cast<double>(counts.n_trials));
  return out;
}

namespace detail {

inline constexpr double unit_clip = 1e-6;

inline double clip_unit(double x) {
  return std::min(std::max(x, unit_clip), 1.0 - unit_clip);
}

inline bool in_domain(information::Param which, double v, const DeltaSearch& dom,
                      double sigma_known) {
  switch (which) {
    case information::Param::delta: return v >= dom.lo && v <= dom.hi;
    case information::Param::alpha:
    case information::Param::gamma: return v >= unit_clip && v <= 1.0 - unit_clip;
    case information::Param::sigma:
      return v > sigma_known / 20.0 && v < sigma_known * 20.0;
  }
  return false;
}

}  // namespace detail

/// Joint maximum-likelihood estimation over an ordered parameter subset,
/// remaining parameters fixed at `known`. Direct simplex search restarted
/// from the best coarse-grid points. Raises SingularInformationError when
/// the model information restricted to the requested set is rank-deficient
/// at the optimum: the request is not identifiable (the classic
/// delay/visibility degeneracy without time resolution).
inline EstimationResult mle_joint(const simulate::CountsHistogram& counts,
                                  const information::ParameterSet& params,
                                  const PhysicalParams& known) {
  information::require_valid(params);
  const std::size_t k = params.size();
  const auto dom = detail::delta_search_domain(counts, known);

  auto assemble = [&](const std::vector<double>& x) {
    PhysicalParams cand = known;
    for (std::size_t i = 0; i < k; ++i)
      information::set_param(cand, params[i], x[i]);
    return cand;
  };
  auto objective = [&](const std::vector<double>& x) {
    for (std::size_t i = 0; i < k; ++i)
      if (!detail::in_domain(params[i], x[i], dom, known.sigma))
        return -std::numeric_limits<double>::infinity();
    return log_likelihood(counts, assemble(x));
  };

  // Coarse restart grid per free parameter.
  std::vector<std::vector<double>> axes(k);
  for (std::size_t i = 0; i < k; ++i) {
    switch (params[i]) {
      case information::Param::delta: {
        const int n = 25;
        for (int j = 0; j <= n; ++j)
          axes[i].push_back(dom.lo + (dom.hi - dom.lo) * j / n);
        break;
      }
      case information::Param::alpha:
      case information::Param::gamma:
        for (double v : {0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95}) axes[i].push_back(v);
        break;
      case information::Param::sigma:
        for (double f : {0.4, 0.7, 1.0, 1.5, 2.5}) axes[i].push_back(known.sigma * f);
        break;
    }
  }

  std::vector<std::pair<double, std::vector<double>>> grid;
  std::vector<std::size_t> idx(k, 0);
  while (true) {
    std::vector<double> x(k);
    for (std::size_t i = 0; i < k; ++i) x[i] = axes[i][idx[i]];
    grid.push_back({objective(x), x});
    std::size_t d = 0;
    while (d < k && ++idx[d] == axes[d].size()) idx[d++] = 0;
    if (d == k) break;
  }
  std::sort(grid.begin(), grid.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  if (grid.empty() || !std::isfinite(grid.front().first))
    throw FlatLikelihoodError("likelihood is degenerate over the whole grid");

  std::vector<double> steps(k);
  for (std::size_t i = 0; i < k; ++i) {
    steps[i] = params[i] == information::Param::delta
                   ? (dom.hi - dom.lo) / 50.0
                   : (params[i] == information::Param::sigma ? known.sigma / 20.0 : 0.04);
  }

  std::vector<double> best_x;
  double best_f = -std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::min<std::size_t>(3, grid.size());
  for (std::size_t r = 0; r < restarts; ++r) {
    auto [x, f] = math::nelder_mead_max(objective, grid[r].second, steps);
    if (f > best_f) {
      best_f = f;
      best_x = std::move(x);
    }
  }

  EstimationResult out;
  out.n_trials = counts.n_trials;
  out.log_likelihood = best_f;

  PhysicalParams at = known;
  for (std::size_t i = 0; i < k; ++i) {
    double v = best_x[i];
    if (params[i] == information::Param::alpha || params[i] == information::Param::gamma)
      v = detail::clip_unit(v);
    if (params[i] == information::Param::delta &&
        counts.protocol == binned::Protocol::hom)
      v = std::abs(v);
    out.estimates[params[i]] = v;
    information::set_param(at, params[i], v);
  }

  // Observed information: central-difference Hessian of the log-likelihood,
  // negated. Steps shrink near domain edges instead of stepping outside.
  auto obs_step = [&](std::size_t i) {
    double h = std::cbrt(std::numeric_limits<double>::epsilon()) *
               std::max(std::abs(best_x[i]),
                        information::detail::diff_scale(params[i], at));
    if (params[i] == information::Param::alpha ||
        params[i] == information::Param::gamma) {
      const double room =
          std::min(out.estimates[params[i]], 1.0 - out.estimates[params[i]]);
      if (h > 0.5 * room) {
        h = 0.5 * room;
        out.boundary_warning = true;
      }
    }
    return h;
  };
  auto ll_at = [&](const std::vector<double>& x) { return objective(x); };

  out.observed_information.params = params;
  out.observed_information.entries = math::Matrix(static_cast<int>(k));
  std::vector<double> x0(k);
  for (std::size_t i = 0; i < k; ++i) x0[i] = out.estimates[params[i]];
  const double f0 = ll_at(x0);
  for (std::size_t i = 0; i < k; ++i) {
    const double hi_ = obs_step(i);
    for (std::size_t j = i; j < k; ++j) {
      double val;
      if (i == j) {
        auto xp = x0, xm = x0;
        xp[i] += hi_;
        xm[i] -= hi_;
        val = -(ll_at(xp) - 2.0 * f0 + ll_at(xm)) / (hi_ * hi_);
      } else {
        const double hj = obs_step(j);
        auto xpp = x0, xpm = x0, xmp = x0, xmm = x0;
        xpp[i] += hi_; xpp[j] += hj;
        xpm[i] += hi_; xpm[j] -= hj;
        xmp[i] -= hi_; xmp[j] += hj;
        xmm[i] -= hi_; xmm[j] -= hj;
        val = -(ll_at(xpp) - ll_at(xpm) - ll_at(xmp) + ll_at(xmm)) / (4.0 * hi_ * hj);
      }
      out.observed_information.entries(static_cast<int>(i), static_cast<int>(j)) = val;
      out.observed_information.entries(static_cast<int>(j), static_cast<int>(i)) = val;
    }
  }

  // Identifiability: the model information restricted to the request must be
  // full rank at (a point vanishingly close to) the optimum.
  PhysicalParams fim_point = at;
  const double pull = 4.0 * std::cbrt(std::numeric_limits<double>::epsilon());
  fim_point.alpha = std::min(std::max(fim_point.alpha, pull), 1.0 - pull);
  fim_point.gamma = std::min(std::max(fim_point.gamma, pull), 1.0 - pull);
  if (std::abs(fim_point.alpha - at.alpha) > 0.0 ||
      std::abs(fim_point.gamma - at.gamma) > 0.0)
    out.boundary_warning = true;

  const auto fim = information::fim_for_config(fim_point, counts.binning,
                                               counts.detector, counts.protocol, params);
  const auto analysis = information::fim_analysis(fim);
  if (analysis.rank < static_cast<int>(k))
    throw SingularInformationError(
        "information matrix is rank-deficient at the optimum: the requested "
        "parameters are not jointly identifiable with this detector "
        "configuration");
  for (std::size_t i = 0; i < k; ++i)
    out.crb_variance[params[i]] =
        (*analysis.crb_variance)[i] / static_cast<double>(counts.n_trials);
  return out;
}

}  // namespace hom::estimate
