#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hom/errors.hpp"
#include "hom/math.hpp"
#include "hom/model.hpp"
#include "hom/params.hpp"

namespace hom::binned {

/// Detector time-bin width plus the tail-truncation policy. Bins are
/// enumerated until the analytic Gaussian tail beyond the last edge drops
/// below tail_mass_tolerance; the residual goes to an explicit Overflow
/// outcome instead of being renormalised away.
struct BinningConfig {
  double bin_width = 1.0;
  double tail_mass_tolerance = 1e-12;
  int max_bins = 0;  // 0: resolve to 10 ceil((|delta| + 6/sigma)/T) + 8
};

inline void require_valid(const BinningConfig& bc) {
  if (!(bc.bin_width > 0.0) || !std::isfinite(bc.bin_width))
    throw ConfigError("bin_width must be positive while time-resolving");
  if (!(bc.tail_mass_tolerance > 0.0) || !(bc.tail_mass_tolerance < 1e-3))
    throw ConfigError("tail_mass_tolerance must lie in (0, 1e-3)");
  if (bc.max_bins < 0) throw ConfigError("max_bins must be positive (0 = auto)");
}

inline int resolved_max_bins(const PhysicalParams& p, const BinningConfig& bc) {
  if (bc.max_bins > 0) return bc.max_bins;
  const double span = (std::abs(p.delta) + 6.0 / p.sigma) / bc.bin_width;
  return 10 * static_cast<int>(std::ceil(span)) + 8;
}

/// The four detector configurations: bucket/number-resolving crossed with
/// and without time resolution.
struct DetectorConfig {
  bool number_resolving = false;
  bool time_resolving = false;
};

enum class Protocol { hom, nohom };

enum class OutcomeKind : std::uint8_t {
  zero_clicks,
  one_click,
  coincidence_sep,    // two clicks on different detectors, n bins apart
  bunch_sep,          // two clicks on one detector, n bins apart (NR + TR only)
  two_clicks_coinc,   // coincidence aggregate without timing
  two_clicks_bunch,   // bunching aggregate without timing (NR only)
  nohom_sep,          // signed bin separation in the beamsplitter-free protocol
  overflow,           // truncated analytic tail
};

struct Outcome {
  OutcomeKind kind = OutcomeKind::zero_clicks;
  std::int32_t bin = 0;  // used by the *_sep kinds; signed for nohom_sep

  friend auto operator<=>(const Outcome&, const Outcome&) = default;
};

inline bool outcome_has_bin(OutcomeKind k) {
  return k == OutcomeKind::coincidence_sep || k == OutcomeKind::bunch_sep ||
         k == OutcomeKind::nohom_sep;
}

/// Closed-form integral of (c0 + c1 tau) N(tau; mu, s) over [a, b], the
/// kernel behind every triangular-weight bin probability. Exact up to
/// floating rounding; the first moment uses d/dtau[-s^2 N] = (tau - mu) N.
inline double gaussian_linear_segment_integral(double mu, double s, double a,
                                               double b, double c0, double c1) {
  if (!(s > 0.0)) throw DomainError("gaussian_linear_segment_integral: s > 0 required");
  if (!(b >= a)) throw DomainError("gaussian_linear_segment_integral: b >= a required");
  const double mass = math::gauss_mass(a, b, mu, s);
  const double first =
      mu * mass + s * s * (math::norm_pdf(a, mu, s) - math::norm_pdf(b, mu, s));
  return c0 * mass + c1 * first;
}

namespace detail {

// Two-segment triangular weight around bin n for one unit Gaussian, written
// in bin-local coordinates so the linear coefficients stay O(1) at large n.
inline double triangular_weight_integral(double mu, double s, double T, int n) {
  const double mu_local = mu - n * T;
  return gaussian_linear_segment_integral(mu_local, s, -T, 0.0, 1.0, 1.0 / T) +
         gaussian_linear_segment_integral(mu_local, s, 0.0, T, 1.0, -1.0 / T);
}

// Same with the left segment dropped: bin 0 of the folded HOM distributions
// only collects tau <= T.
inline double half_triangular_weight_integral(double mu, double s, double T) {
  return gaussian_linear_segment_integral(mu, s, 0.0, T, 1.0, -1.0 / T);
}

inline double binned_hom_family(const model::Components& comps, double s, double T,
                                int n) {
  math::KahanSum acc;
  for (const auto& c : comps) {
    const double v = (n == 0) ? half_triangular_weight_integral(c.center, s, T)
                              : triangular_weight_integral(c.center, s, T, n);
    acc += c.weight * v;
  }
  const double p = 2.0 * acc.value();
  return p < 0.0 ? 0.0 : p;
}

}  // namespace detail

/// P_{c,n}: probability of a coincidence with the two clicks n bins apart.
inline double binned_coincidence(const PhysicalParams& p, const BinningConfig& bc, int n) {
  require_valid(p);
  require_valid(bc);
  if (n < 0) throw DomainError("binned_coincidence: n must be nonnegative");
  return detail::binned_hom_family(model::coincidence_components(p),
                                   model::component_sd(p), bc.bin_width, n);
}

/// P_{b,n}: bunching mirror of binned_coincidence.
inline double binned_bunching(const PhysicalParams& p, const BinningConfig& bc, int n) {
  require_valid(p);
  require_valid(bc);
  if (n < 0) throw DomainError("binned_bunching: n must be nonnegative");
  return detail::binned_hom_family(model::bunching_components(p),
                                   model::component_sd(p), bc.bin_width, n);
}

/// P^NH_n: probability that the sample-arm photon lands n bins after the
/// other one. Signed n, single detector pair, no folding factor.
inline double binned_nohom(const PhysicalParams& p, const BinningConfig& bc, int n) {
  require_valid(p);
  require_valid(bc);
  const double v = detail::triangular_weight_integral(
      p.delta, model::component_sd(p), bc.bin_width, n);
  return v < 0.0 ? 0.0 : v;
}

/// Enumerated bin range: [0, hi] for the folded HOM distributions,
/// [lo, hi] signed for the no-HOM protocol.
struct BinRange {
  int lo = 0;
  int hi = 0;
};

/// Picks the enumeration range so the analytic tail beyond the outermost
/// edge is below tail_mass_tolerance (or max_bins is hit, in which case the
/// overflow outcome simply carries more mass). The alpha cross terms cancel
/// in the coincidence+bunching sum, so the tail criterion is alpha-free and
/// one range serves every detector type.
inline BinRange choose_bin_range(const PhysicalParams& p, const BinningConfig& bc,
                                 Protocol protocol) {
  require_valid(p);
  require_valid(bc);
  const double T = bc.bin_width;
  const double s = model::component_sd(p);
  const double tol = bc.tail_mass_tolerance;
  const double inf = std::numeric_limits<double>::infinity();
  const int cap = resolved_max_bins(p, bc);

  if (protocol == Protocol::hom) {
    auto folded_tail = [&](double edge) {
      return math::gauss_mass(edge, inf, -p.delta, s) +
             math::gauss_mass(edge, inf, p.delta, s);
    };
    int hi = std::max(0, static_cast<int>(std::floor((std::abs(p.delta)) / T)));
    while (hi < cap && folded_tail(hi * T) >= tol) ++hi;
    return {0, hi};
  }

  auto left_tail = [&](double edge) { return math::gauss_mass(-inf, edge, p.delta, s); };
  auto right_tail = [&](double edge) { return math::gauss_mass(edge, inf, p.delta, s); };
  int lo = static_cast<int>(std::llround(p.delta / T));
  int hi = lo;
  while (hi - lo < cap && left_tail(lo * T) >= 0.5 * tol) --lo;
  while (hi - lo < cap && right_tail(hi * T) >= 0.5 * tol) ++hi;
  return {lo, hi};
}

/// Full discrete outcome law for one protocol configuration. Probabilities
/// are >= 0 and close to 1 (with Overflow absorbing the truncated tail);
/// entry order is deterministic.
struct OutcomeDistribution {
  std::vector<std::pair<Outcome, double>> entries;
  PhysicalParams params;
  BinningConfig binning;
  DetectorConfig detector;
  Protocol protocol = Protocol::hom;
  BinRange range;

  double probability_of(const Outcome& o) const {
    for (const auto& [k, v] : entries)
      if (k == o) return v;
    return 0.0;
  }
  double total() const {
    math::KahanSum s;
    for (const auto& [k, v] : entries) s += v;
    return s.value();
  }
};

/// Assembles the outcome distribution on an explicitly fixed bin range.
/// Fisher differencing perturbs parameters while holding the range (and so
/// the outcome set) fixed; every smooth tail shift lands in Overflow.
inline OutcomeDistribution outcome_distribution_fixed(const PhysicalParams& p,
                                                      const BinningConfig& bc,
                                                      const DetectorConfig& dc,
                                                      Protocol protocol,
                                                      const BinRange& range) {
  require_valid(p);
  const bool timing = dc.time_resolving;
  if (timing) require_valid(bc);

  OutcomeDistribution dist;
  dist.params = p;
  dist.binning = bc;
  dist.detector = dc;
  dist.protocol = protocol;
  dist.range = range;

  const double gamma = p.gamma;
  const double q = (1.0 - gamma) * (1.0 - gamma);
  const double p0 = gamma * gamma;
  const auto tot = model::total_rates(p);

  auto push = [&dist](OutcomeKind kind, std::int32_t bin, double prob) {
    dist.entries.push_back({{kind, bin}, prob < 0.0 ? 0.0 : prob});
  };

  if (protocol == Protocol::nohom) {
    // Photons always hit distinct detectors; number resolution is moot.
    push(OutcomeKind::zero_clicks, 0, p0);
    push(OutcomeKind::one_click, 0, 2.0 * gamma * (1.0 - gamma));
    if (timing) {
      math::KahanSum sum;
      for (int n = range.lo; n <= range.hi; ++n) {
        const double v = binned_nohom(p, bc, n);
        sum += v;
        push(OutcomeKind::nohom_sep, n, q * v);
      }
      push(OutcomeKind::overflow, 0, q * (1.0 - sum.value()));
    } else {
      push(OutcomeKind::two_clicks_coinc, 0, q);
    }
    return dist;
  }

  push(OutcomeKind::zero_clicks, 0, p0);

  if (!timing) {
    if (dc.number_resolving) {
      push(OutcomeKind::one_click, 0, 2.0 * gamma * (1.0 - gamma));
      push(OutcomeKind::two_clicks_coinc, 0, q * tot.coincidence);
      push(OutcomeKind::two_clicks_bunch, 0, q * tot.bunching);
    } else {
      // A bucket detector cannot tell a bunched pair from a lone photon.
      push(OutcomeKind::one_click, 0,
           2.0 * gamma * (1.0 - gamma) * tot.coincidence +
               (1.0 - gamma * gamma) * tot.bunching);
      push(OutcomeKind::two_clicks_coinc, 0, q * tot.coincidence);
    }
    return dist;
  }

  std::vector<double> pcn(static_cast<std::size_t>(range.hi) + 1);
  math::KahanSum csum;
  for (int n = 0; n <= range.hi; ++n) {
    pcn[n] = binned_coincidence(p, bc, n);
    csum += pcn[n];
  }

  if (dc.number_resolving) {
    push(OutcomeKind::one_click, 0, 2.0 * gamma * (1.0 - gamma));
    for (int n = 0; n <= range.hi; ++n)
      push(OutcomeKind::coincidence_sep, n, q * pcn[n]);
    math::KahanSum bsum;
    for (int n = 0; n <= range.hi; ++n) {
      const double v = binned_bunching(p, bc, n);
      bsum += v;
      push(OutcomeKind::bunch_sep, n, q * v);
    }
    push(OutcomeKind::overflow, 0,
         q * ((tot.coincidence - csum.value()) + (tot.bunching - bsum.value())));
  } else {
    push(OutcomeKind::one_click, 0,
         2.0 * gamma * (1.0 - gamma) * tot.coincidence +
             (1.0 - gamma * gamma) * tot.bunching);
    for (int n = 0; n <= range.hi; ++n)
      push(OutcomeKind::coincidence_sep, n, q * pcn[n]);
    push(OutcomeKind::overflow, 0, q * (tot.coincidence - csum.value()));
  }
  return dist;
}

/// Outcome distribution with the bin range chosen by the truncation policy.
inline OutcomeDistribution outcome_distribution(const PhysicalParams& p,
                                                const BinningConfig& bc,
                                                const DetectorConfig& dc,
                                                Protocol protocol) {
  const BinRange range =
      dc.time_resolving ? choose_bin_range(p, bc, protocol) : BinRange{};
  return outcome_distribution_fixed(p, bc, dc, protocol, range);
}

inline std::string outcome_kind_label(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::zero_clicks: return "zero_clicks";
    case OutcomeKind::one_click: return "one_click";
    case OutcomeKind::coincidence_sep: return "coincidence_sep";
    case OutcomeKind::bunch_sep: return "bunch_sep";
    case OutcomeKind::two_clicks_coinc: return "two_clicks_coinc";
    case OutcomeKind::two_clicks_bunch: return "two_clicks_bunch";
    case OutcomeKind::nohom_sep: return "nohom_sep";
    case OutcomeKind::overflow: return "overflow";
  }
  return "unknown";
}

}  // namespace hom::binned
