#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "hom/binned.hpp"
#include "hom/errors.hpp"
#include "hom/math.hpp"
#include "hom/model.hpp"
#include "hom/params.hpp"
#include "hom/rng.hpp"

namespace hom::simulate {

struct RandomSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// Simulated (or ingested) experiment counts per outcome, the empirical
/// analogue of N protocol repetitions. Carries its full generating
/// configuration so downstream estimation never has to guess.
struct CountsHistogram {
  std::map<binned::Outcome, std::uint64_t> counts;
  std::uint64_t n_trials = 0;
  PhysicalParams params;
  binned::BinningConfig binning;
  binned::DetectorConfig detector;
  binned::Protocol protocol = binned::Protocol::hom;
  RandomSeed seed;

  void record(const binned::Outcome& o) { ++counts[o]; }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& [o, c] : counts) t += c;
    return t;
  }
};

/// Acceptance bookkeeping for the physically-ordered sampler.
struct GenerativeDiagnostics {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double acceptance_rate() const {
    return proposals == 0 ? 1.0 : static_cast<double>(accepted) / proposals;
  }
};

namespace detail {

// Walks the analytic tail beyond the enumerated range to turn an Overflow
// draw into a concrete bin, so histograms never contain Overflow itself.
inline binned::Outcome resolve_overflow(const PhysicalParams& p,
                                        const binned::BinningConfig& bc,
                                        const binned::DetectorConfig& dc,
                                        binned::Protocol protocol,
                                        const binned::BinRange& range, double u,
                                        double overflow_mass) {
  const double q = (1.0 - p.gamma) * (1.0 - p.gamma);
  double remaining = u * overflow_mass;

  if (protocol == binned::Protocol::nohom) {
    for (int k = 1; k < 100000; ++k) {
      const double right = q * binned::binned_nohom(p, bc, range.hi + k);
      if (remaining < right) return {binned::OutcomeKind::nohom_sep, range.hi + k};
      remaining -= right;
      const double left = q * binned::binned_nohom(p, bc, range.lo - k);
      if (remaining < left) return {binned::OutcomeKind::nohom_sep, range.lo - k};
      remaining -= left;
    }
    return {binned::OutcomeKind::nohom_sep, range.hi + 100000};
  }

  for (int k = 1; k < 100000; ++k) {
    const int n = range.hi + k;
    const double pc = q * binned::binned_coincidence(p, bc, n);
    if (remaining < pc) return {binned::OutcomeKind::coincidence_sep, n};
    remaining -= pc;
    if (dc.number_resolving) {
      const double pb = q * binned::binned_bunching(p, bc, n);
      if (remaining < pb) return {binned::OutcomeKind::bunch_sep, n};
      remaining -= pb;
    }
  }
  return {binned::OutcomeKind::coincidence_sep, range.hi + 100000};
}

}  // namespace detail

/// Categorical sampler: i.i.d. draws from the outcome distribution by
/// cumulative-sum inversion. Overflow draws are re-resolved into concrete
/// bins by extending the range on demand.
inline CountsHistogram sample_outcomes(const PhysicalParams& p,
                                       const binned::BinningConfig& bc,
                                       const binned::DetectorConfig& dc,
                                       binned::Protocol protocol,
                                       std::uint64_t n_trials, RandomSeed seed) {
  if (n_trials < 1) throw ConfigError("sample_outcomes: n_trials must be >= 1");
  const auto dist = binned::outcome_distribution(p, bc, dc, protocol);

  std::vector<double> cdf(dist.entries.size());
  math::KahanSum acc;
  for (std::size_t i = 0; i < dist.entries.size(); ++i) {
    acc += dist.entries[i].second;
    cdf[i] = acc.value();
  }

  CountsHistogram hist;
  hist.n_trials = n_trials;
  hist.params = p;
  hist.binning = bc;
  hist.detector = dc;
  hist.protocol = protocol;
  hist.seed = seed;

  rng::Philox gen(seed.seed, seed.stream_id);
  for (std::uint64_t t = 0; t < n_trials; ++t) {
    const double u = gen.next_double();
    std::size_t lo = 0, hi = cdf.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cdf[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    binned::Outcome o = dist.entries[lo].first;
    if (o.kind == binned::OutcomeKind::overflow) {
      const double mass = dist.entries[lo].second;
      const double frac = mass > 0.0 ? (cdf[lo] - u) / mass : 0.0;
      o = detail::resolve_overflow(p, bc, dc, protocol, dist.range,
                                   std::min(std::max(frac, 0.0), 1.0), mass);
    }
    hist.record(o);
  }
  return hist;
}

/// Physically-ordered sampler, the independent cross-check of
/// sample_outcomes: draw bunch-vs-coincide from the total rates, then the
/// arrival-time difference by rejection from a two-Gaussian proposal, then
/// per-photon loss, then the detector click logic with a uniform bin phase.
inline CountsHistogram sample_generative(const PhysicalParams& p,
                                         const binned::BinningConfig& bc,
                                         const binned::DetectorConfig& dc,
                                         binned::Protocol protocol,
                                         std::uint64_t n_trials, RandomSeed seed,
                                         GenerativeDiagnostics* diag = nullptr) {
  if (n_trials < 1) throw ConfigError("sample_generative: n_trials must be >= 1");
  require_valid(p);
  const bool timing = dc.time_resolving;
  if (timing) require_valid(bc);

  CountsHistogram hist;
  hist.n_trials = n_trials;
  hist.params = p;
  hist.binning = bc;
  hist.detector = dc;
  hist.protocol = protocol;
  hist.seed = seed;

  rng::Philox gen(seed.seed, seed.stream_id);
  const double s = model::component_sd(p);
  const double T = bc.bin_width;
  const auto tot = model::total_rates(p);

  // Proposal q(tau) = [N(tau; -delta, s) + N(tau; +delta, s)] / 2. The cross
  // term equals the geometric mean of the two proposal Gaussians, so
  // P_c <= q/2 and P_b <= (1+alpha)/2 q: tight per-branch envelopes, both
  // within the uniform constant 2.
  auto propose = [&] {
    const double center = gen.next_bernoulli(0.5) ? p.delta : -p.delta;
    return gen.next_normal(center, s);
  };
  auto proposal_density = [&](double tau) {
    return 0.5 * (math::norm_pdf(tau, -p.delta, s) + math::norm_pdf(tau, p.delta, s));
  };

  auto sample_tau = [&](bool bunch) {
    const double envelope = bunch ? 0.5 * (1.0 + p.alpha) : 0.5;
    for (int attempt = 0; attempt < 1000000; ++attempt) {
      const double tau = propose();
      const double target = bunch ? model::bunching_density(p, tau)
                                  : model::coincidence_density(p, tau);
      if (diag) ++diag->proposals;
      const double accept = target / (envelope * proposal_density(tau));
      if (gen.next_double() < accept) {
        if (diag) ++diag->accepted;
        return tau;
      }
    }
    throw std::logic_error(
        "sample_generative: rejection sampler exceeded 1e6 consecutive "
        "rejections; envelope bound violated");
  };

  for (std::uint64_t t = 0; t < n_trials; ++t) {
    const bool bunch =
        protocol == binned::Protocol::hom && gen.next_bernoulli(tot.bunching);

    double tau;
    if (protocol == binned::Protocol::nohom) {
      tau = gen.next_normal(p.delta, s);
    } else {
      tau = sample_tau(bunch);
    }

    const bool lost_a = gen.next_bernoulli(p.gamma);
    const bool lost_b = gen.next_bernoulli(p.gamma);

    if (lost_a && lost_b) {
      hist.record({binned::OutcomeKind::zero_clicks, 0});
      continue;
    }
    if (lost_a != lost_b) {
      hist.record({binned::OutcomeKind::one_click, 0});
      continue;
    }

    // Both photons detected. The first photon lands uniformly inside its
    // bin, which realises the triangular bin-difference law exactly.
    auto bin_separation = [&] {
      const double offset = gen.next_double() * T;
      return static_cast<std::int32_t>(std::floor((offset + tau) / T));
    };

    if (protocol == binned::Protocol::nohom) {
      if (timing)
        hist.record({binned::OutcomeKind::nohom_sep, bin_separation()});
      else
        hist.record({binned::OutcomeKind::two_clicks_coinc, 0});
      continue;
    }

    if (bunch) {
      if (!dc.number_resolving) {
        // Dead time: a bucket detector reports a bunched pair as one click.
        hist.record({binned::OutcomeKind::one_click, 0});
      } else if (timing) {
        hist.record({binned::OutcomeKind::bunch_sep, std::abs(bin_separation())});
      } else {
        hist.record({binned::OutcomeKind::two_clicks_bunch, 0});
      }
    } else {
      if (timing) {
        hist.record({binned::OutcomeKind::coincidence_sep, std::abs(bin_separation())});
      } else {
        hist.record({binned::OutcomeKind::two_clicks_coinc, 0});
      }
    }
  }
  return hist;
}

}  // namespace hom::simulate
