// Acceptance suite: runs every headline requirement end to end and prints
// one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "hom/cli.hpp"
#include "hom/estimate.hpp"
#include "hom/information.hpp"
#include "hom/model.hpp"
#include "hom/simulate.hpp"
#include "hom/verify.hpp"
#include "support/stat_helpers.hpp"

using namespace hom;
using information::Param;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

void report(int index, const char* name, bool pass, const std::string& detail) {
  std::printf("[%2d/10] %s %-48s %s\n", index, pass ? "PASS" : "FAIL", name,
              detail.c_str());
  if (!pass) ++g_failures;
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof(buf), pattern, args);
  va_end(args);
  return buf;
}

const binned::DetectorConfig kBucket{false, false};
const binned::DetectorConfig kNr{true, false};
const binned::DetectorConfig kNrTr{true, true};

// --- 1. QFI reference limits ------------------------------------------------
void criterion_qfi_limits() {
  const double h = information::qfi(1.0);
  const double h2 = information::qfi_two_photon(1.0, 0.4);
  const bool pass = h == 4.0 && std::abs(h2 - 1.44) < 1e-12;
  report(1, "QFI limits", pass, fmt("qfi=%.12g qfi_2ph=%.12g", h, h2));
}

// --- 2. numeric FIM vs closed forms ----------------------------------------
void criterion_closed_form_agreement() {
  std::mt19937 rng(20240209u);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const binned::BinningConfig bc{1.0, 1e-12, 0};
  const information::ParameterSet all{Param::delta, Param::alpha, Param::sigma,
                                      Param::gamma};

  double worst = 0.0;
  bool ranks_ok = true;
  for (int t = 0; t < 20; ++t) {
    PhysicalParams p;
    p.delta = 0.05 + 1.3 * ud(rng);
    p.alpha = 0.1 + 0.85 * ud(rng);
    p.sigma = 0.5 + 1.5 * ud(rng);
    p.gamma = 0.05 + 0.9 * ud(rng);

    for (bool nr : {false, true}) {
      const auto numeric = information::fim_for_config(
          p, bc, nr ? kNr : kBucket, binned::Protocol::hom, all);
      const auto closed = nr ? information::closed_form_fim_nr(p)
                             : information::closed_form_fim_bucket(p);
      const double scale = closed.entries.max_abs();
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          const double denom =
              std::max(std::abs(closed.entries(i, j)), 1e-3 * scale);
          worst = std::max(
              worst, std::abs(numeric.entries(i, j) - closed.entries(i, j)) / denom);
        }
      ranks_ok = ranks_ok && information::fim_analysis(numeric).rank == 2 &&
                 information::fim_analysis(closed).rank == 2;
    }
  }
  report(2, "closed-form FIM agreement (20 points)", worst < 1e-5 && ranks_ok,
         fmt("worst rel err=%.3g rank2=%s", worst, ranks_ok ? "yes" : "no"));
}

// --- 3. number-resolving boost ----------------------------------------------
void criterion_nr_boost() {
  auto maximize = [](auto&& f) {
    double best_x = 0.0, best_f = -1.0;
    for (double d = 0.0; d <= 2.0; d += 1.0 / 400.0) {
      const double v = f(d);
      if (v > best_f) {
        best_f = v;
        best_x = d;
      }
    }
    const auto refined =
        math::golden_section_max(f, std::max(0.0, best_x - 1.0 / 400.0),
                                 best_x + 1.0 / 400.0, 1e-9);
    return std::max(best_f, refined.f);
  };
  const double fb = maximize([](double d) {
    return information::cfi_bucket_notr({d, 0.9, 1.0, 0.4});
  });
  const double fn = maximize([](double d) {
    return information::cfi_nr_notr({d, 0.9, 1.0, 0.4});
  });
  const double ratio = fn / fb;
  report(3, "NR boost over bucket (no timing)", std::abs(ratio - 1.099) <= 0.002,
         fmt("ratio=%.4f expected 1.099 +- 0.002", ratio));
}

// --- 4. physical benchmark percentages --------------------------------------
void criterion_benchmarks() {
  const auto rows = cli::run_benchmarks();
  bool pass = true;
  std::string detail;
  for (const auto& row : rows) {
    if (row.name == "nr_vs_bucket_no_timing") continue;  // covered by #3
    pass = pass && row.pass;
    detail += fmt("%s %s%+.3f ", row.bin_label.c_str(),
                  row.pass ? "" : "!", row.computed);
  }
  report(4, "physical benchmarks vs reported values", pass, detail);
}

// --- 5. QFI approach ----------------------------------------------------------
void criterion_qfi_approach() {
  const binned::BinningConfig fine{0.01, 1e-12, 0};
  const double f = information::cfi_delta({0.0, 1.0, 1.0, 0.0}, fine, kNrTr,
                                          binned::Protocol::hom);
  const double score = verify::score_integral_cfi(
      [](const PhysicalParams& q, double tau) { return model::nohom_density(q, tau); },
      PhysicalParams{0.5, 1.0, 1.0, 0.0});
  const bool pass =
      std::abs(f - 4.0) < 0.01 * 4.0 && std::abs(score - 4.0) < 0.001 * 4.0;
  report(5, "QFI approach (NRTR T=0.01, continuous no-HOM)", pass,
         fmt("F=%.5f score=%.5f", f, score));
}

// --- 6. loss-invariant relative information ----------------------------------
void criterion_gamma_invariance() {
  const binned::BinningConfig bc{1.0, 1e-12, 0};
  std::vector<double> irel;
  for (double g : {0.1, 0.4, 0.7}) {
    const auto best = information::optimal_delta(
        {{0.0, 0.9, 1.0, g}, bc, kNrTr, binned::Protocol::hom});
    irel.push_back(information::relative_information(best.fisher, 1.0, g));
  }
  const double spread =
      std::max({irel[0], irel[1], irel[2]}) - std::min({irel[0], irel[1], irel[2]});
  report(6, "NRTR relative information is gamma-invariant", spread < 1e-6,
         fmt("I_rel=%.9f spread=%.2g", irel[1], spread));
}

// --- 7. structural figure properties ------------------------------------------
// Local maxima with at least `prominence` of the global maximum. Bucket
// timing adds faint bin-lattice ripples (a few percent of the main peaks)
// on top of the two characteristic information peaks; those ripples are
// invisible at figure scale and not what the two-peak structure refers to.
std::vector<int> local_maxima(const std::vector<double>& v, double prominence = 0.0) {
  double top = 0.0;
  for (double x : v) top = std::max(top, x);
  std::vector<int> idx;
  for (std::size_t i = 1; i + 1 < v.size(); ++i)
    if (v[i] > v[i - 1] && v[i] > v[i + 1] && v[i] >= prominence * top)
      idx.push_back(static_cast<int>(i));
  return idx;
}

void criterion_figures() {
  const binned::BinningConfig bc{5.0, 1e-12, 0};
  bool pass = true;
  std::string detail;

  // Two symmetric information peaks for every HOM configuration.
  const int n = 241;
  const double dmax = 3.0;
  for (auto dc : {kBucket, kNr, binned::DetectorConfig{false, true}, kNrTr}) {
    std::vector<double> curve(n);
    for (int i = 0; i < n; ++i) {
      const double d = -dmax + 2.0 * dmax * i / (n - 1);
      curve[i] =
          information::cfi_delta({d, 0.9, 1.0, 0.4}, bc, dc, binned::Protocol::hom);
    }
    const auto peaks = local_maxima(curve, 0.2);
    const bool two = peaks.size() == 2;
    bool symmetric = two;
    if (two) {
      const double d1 = -dmax + 2.0 * dmax * peaks[0] / (n - 1);
      const double d2 = -dmax + 2.0 * dmax * peaks[1] / (n - 1);
      symmetric = std::abs(d1 + d2) < 2.0 * dmax / (n - 1) &&
                  std::abs(curve[peaks[0]] - curve[peaks[1]]) <
                      1e-6 * curve[peaks[0]];
    }
    pass = pass && two && symmetric;
    if (!two) detail += fmt("peaks=%zu ", peaks.size());
  }

  // Peaks merge toward the origin as visibility rises.
  double prev = 10.0;
  bool merge = true;
  for (double a : {0.9, 0.99, 0.999}) {
    const auto best = information::optimal_delta(
        {{0.0, a, 1.0, 0.4}, bc, kBucket, binned::Protocol::hom});
    merge = merge && best.delta < prev;
    prev = best.delta;
  }
  const auto merged = information::optimal_delta(
      {{0.0, 1.0, 1.0, 0.4}, bc, kBucket, binned::Protocol::hom});
  merge = merge && merged.delta < 1e-3 && std::abs(merged.fisher - 1.44) < 1e-4;
  pass = pass && merge;
  if (!merge) detail += "merge ";

  // No-HOM information oscillates with period T.
  const double T = 5.0;
  const int m = 501;
  std::vector<double> osc(m);
  for (int i = 0; i < m; ++i) {
    const double d = 12.5 * i / (m - 1);
    osc[i] = information::cfi_delta({d, 0.9, 1.0, 0.4}, bc,
                                    {false, true}, binned::Protocol::nohom);
  }
  const auto opeaks = local_maxima(osc);
  bool period_ok = opeaks.size() >= 2;
  for (std::size_t i = 1; i < opeaks.size(); ++i) {
    const double spacing = 12.5 * (opeaks[i] - opeaks[i - 1]) / (m - 1);
    period_ok = period_ok && std::abs(spacing - T) < 0.15;
  }
  pass = pass && period_ok;
  if (!period_ok) detail += "period ";

  // The delta/alpha determinant grows as bins shrink.
  double prev_det = 0.0;
  bool det_ok = true;
  for (double Tb : {5.0, 2.0, 1.0, 0.5}) {
    const auto fim = information::fim_for_config(
        {0.2, 0.9, 1.0, 0.4}, {Tb, 1e-12, 0}, kNrTr, binned::Protocol::hom,
        {Param::delta, Param::alpha});
    const double det = information::fim_analysis(fim).determinant;
    det_ok = det_ok && det > prev_det && det > 0.0;
    prev_det = det;
  }
  pass = pass && det_ok;
  if (!det_ok) detail += "determinant ";

  report(7, "structural figure properties", pass,
         detail.empty() ? "peaks/merge/period/determinant ok" : detail);
}

// --- 8. sampler equivalence -----------------------------------------------------
void criterion_samplers() {
  const PhysicalParams p{0.5, 0.9, 1.0, 0.4};
  const binned::BinningConfig bc{1.0, 1e-12, 0};
  const std::uint64_t n = 1000000;

  const auto cat = simulate::sample_outcomes(p, bc, kNrTr, binned::Protocol::hom, n,
                                             {2026u, 0u});
  const auto gen = simulate::sample_generative(p, bc, kNrTr, binned::Protocol::hom, n,
                                               {2026u, 1u});
  const auto dist = binned::outcome_distribution(p, bc, kNrTr, binned::Protocol::hom);

  const double p_cross = testsupport::two_sample_pvalue(cat, gen);
  const double p_fit = testsupport::pearson_pvalue(cat, dist);

  double worst_dev = 0.0;
  for (const auto& [o, prob] : dist.entries) {
    if (prob < 1e-3) continue;
    double c = 0.0;
    if (auto it = cat.counts.find(o); it != cat.counts.end())
      c = static_cast<double>(it->second);
    worst_dev = std::max(worst_dev, std::abs(c / static_cast<double>(n) - prob));
  }
  const bool freq_ok = worst_dev < 5.0 / std::sqrt(static_cast<double>(n));

  const bool pass = p_cross > 0.001 && p_fit > 0.001 && freq_ok;
  report(8, "categorical/generative sampler equivalence", pass,
         fmt("cross p=%.3f fit p=%.3f max|f-p|=%.2g", p_cross, p_fit, worst_dev));
}

// --- 9. MLE efficiency -----------------------------------------------------------
void criterion_mle_efficiency() {
  const PhysicalParams truth{0.5, 0.9, 1.0, 0.4};
  const binned::BinningConfig bc{1.0, 1e-12, 0};
  PhysicalParams known = truth;
  known.delta = 0.0;

  const int reps = 200;
  const std::uint64_t n = 100000;
  std::vector<double> hats(reps);
  for (int r = 0; r < reps; ++r) {
    const auto counts = simulate::sample_outcomes(truth, bc, kNrTr,
                                                  binned::Protocol::hom, n,
                                                  {777u, 1000u + r});
    hats[r] = estimate::mle_delta(counts, known).estimates.at(Param::delta);
  }

  double mean = 0.0;
  for (double h : hats) mean += h;
  mean /= reps;
  double var = 0.0;
  for (double h : hats) var += (h - mean) * (h - mean);
  var /= (reps - 1);

  const double fim = information::fim_for_config(truth, bc, kNrTr,
                                                 binned::Protocol::hom,
                                                 {Param::delta})
                         .entries(0, 0);
  const double crb = 1.0 / (fim * static_cast<double>(n));
  const double bias_se = std::abs(mean - 0.5) / std::sqrt(var / reps);
  const double ratio = var / crb;

  const bool pass = bias_se < 3.0 && ratio >= 0.8 && ratio <= 1.3;
  report(9, "MLE consistency and CRB efficiency (200 reps)", pass,
         fmt("bias=%.2g (%.2f se) var/CRB=%.3f", mean - 0.5, bias_se, ratio));
}

// --- 10. identifiability ------------------------------------------------------------
void criterion_identifiability() {
  const PhysicalParams truth{0.2, 0.9, 1.0, 0.4};
  const binned::BinningConfig bc{1.0, 1e-12, 0};
  PhysicalParams known = truth;
  known.delta = 0.0;
  known.alpha = 0.5;
  const information::ParameterSet da{Param::delta, Param::alpha};

  bool raised = false;
  const auto bucket_counts = simulate::sample_outcomes(
      truth, bc, kBucket, binned::Protocol::hom, 100000, {31337u, 0u});
  try {
    estimate::mle_joint(bucket_counts, da, known);
  } catch (const SingularInformationError&) {
    raised = true;
  }

  bool succeeded = false;
  double dhat = 0.0, ahat = 0.0;
  const auto nrtr_counts = simulate::sample_outcomes(
      truth, bc, kNrTr, binned::Protocol::hom, 100000, {31337u, 1u});
  try {
    const auto res = estimate::mle_joint(nrtr_counts, da, known);
    dhat = res.estimates.at(Param::delta);
    ahat = res.estimates.at(Param::alpha);
    succeeded = std::abs(dhat - 0.2) < 0.1 && std::abs(ahat - 0.9) < 0.1;
  } catch (const std::exception&) {
    succeeded = false;
  }

  report(10, "joint (delta,alpha) identifiability", raised && succeeded,
         fmt("no-timing raised=%s, NRTR delta=%.3f alpha=%.3f", raised ? "yes" : "no",
             dhat, ahat));
}

}  // namespace

int main() {
  std::printf("acceptance suite: HOM delay metrology\n");
  criterion_qfi_limits();
  criterion_closed_form_agreement();
  criterion_nr_boost();
  criterion_benchmarks();
  criterion_qfi_approach();
  criterion_gamma_invariance();
  criterion_figures();
  criterion_samplers();
  criterion_mle_efficiency();
  criterion_identifiability();
  std::printf("%d/10 criteria passed\n", 10 - g_failures);
  return g_failures;
}
