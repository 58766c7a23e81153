#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hom/config.hpp"
#include "hom/errors.hpp"
#include "hom/estimate.hpp"
#include "hom/information.hpp"
#include "hom/io.hpp"
#include "hom/model.hpp"
#include "hom/simulate.hpp"
#include "hom/verify.hpp"

namespace hom::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBoundary = 3;
inline constexpr int kExitDegenerate = 4;
inline constexpr int kExitBenchmark = 5;

namespace detail {

// Dispatches grid points to a worker pool; results stay ordered by index.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const std::size_t workers = std::min<std::size_t>(hw, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

class OutputStream {
 public:
  explicit OutputStream(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError("cannot open output path: " + path);
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

struct ProtocolSpec {
  const char* label;
  binned::DetectorConfig detector;
  binned::Protocol protocol;
};

inline const std::vector<ProtocolSpec>& all_protocols() {
  static const std::vector<ProtocolSpec> specs{
      {"hom", {false, false}, binned::Protocol::hom},
      {"nr-hom", {true, false}, binned::Protocol::hom},
      {"tr-hom", {false, true}, binned::Protocol::hom},
      {"nrtr-hom", {true, true}, binned::Protocol::hom},
      {"no-hom", {false, true}, binned::Protocol::nohom},
  };
  return specs;
}

inline nlohmann::json matrix_to_json(const math::Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.n; ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/// `dist`: tabulate the outcome distribution as CSV.
inline int cmd_dist(const RunConfig& cfg) {
  const auto dist = binned::outcome_distribution(to_params(cfg), to_binning(cfg),
                                                 to_detector(cfg), to_protocol(cfg));
  detail::OutputStream out(cfg.out);
  io::write_distribution_csv(out.get(), dist, cfg);
  return kExitOk;
}

/// `fisher`: Fisher information report as JSON.
inline int cmd_fisher(const RunConfig& cfg) {
  const auto p = to_params(cfg);
  const auto bc = to_binning(cfg);
  const auto dc = to_detector(cfg);
  const auto protocol = to_protocol(cfg);
  const auto ps = to_parameter_set(cfg);

  information::FimDiagnostics diag;
  const auto fim = information::fim_for_config(p, bc, dc, protocol, ps, &diag);
  const auto analysis = information::fim_analysis(fim);
  const double cfi = information::cfi_delta(p, bc, dc, protocol);

  nlohmann::json j;
  j["schema_version"] = 1;
  j["config"] = config_to_json(cfg);
  j["params"] = cfg.fim_params;
  j["fim"] = detail::matrix_to_json(fim.entries);
  j["rank"] = analysis.rank;
  j["determinant"] = analysis.determinant;
  j["eigenvalues"] = analysis.eigenvalues;
  j["singular"] = analysis.singular;
  if (analysis.crb_variance) {
    nlohmann::json crb;
    for (std::size_t i = 0; i < ps.size(); ++i)
      crb[information::param_name(ps[i])] = (*analysis.crb_variance)[i];
    j["crb_variance_per_trial"] = crb;
  }
  j["cfi_delta"] = cfi;
  j["qfi"] = information::qfi(p.sigma);
  j["qfi_two_photon"] = information::qfi_two_photon(p.sigma, p.gamma);
  j["relative_information"] =
      information::relative_information(cfi, p.sigma, p.gamma);
  j["degenerate_warning"] = diag.degenerate_warning;

  detail::OutputStream out(cfg.out);
  out.get() << j.dump(2) << "\n";
  return kExitOk;
}

/// `scan`: parameter sweep over all five protocol configurations, one CSV
/// row per grid point per protocol.
inline int cmd_scan(const RunConfig& cfg) {
  if (!cfg.scan) throw ConfigError("scan requires a scan axis");
  const ScanAxis axis = *cfg.scan;
  const auto base_params = to_params(cfg);
  const auto base_bc = to_binning(cfg);
  const auto& protocols = detail::all_protocols();

  const bool with_fim = cfg.fim_params.size() >= 2;
  const auto ps = with_fim ? to_parameter_set(cfg) : information::ParameterSet{};

  struct Row {
    double value = 0.0;
    const char* label = nullptr;
    double delta = 0.0;
    double fisher = 0.0;
    double irel = 0.0;
    double det = 0.0;
    std::vector<double> eigs;
  };

  const std::size_t npts = static_cast<std::size_t>(axis.steps);
  std::vector<Row> rows(npts * protocols.size());

  detail::parallel_for(npts, [&](std::size_t i) {
    const double value =
        axis.steps == 1
            ? axis.start
            : axis.start + (axis.stop - axis.start) * static_cast<double>(i) /
                               (axis.steps - 1);
    PhysicalParams p = base_params;
    binned::BinningConfig bc = base_bc;
    switch (axis.parameter) {
      case ScanParam::delta: p.delta = value; break;
      case ScanParam::alpha: p.alpha = value; break;
      case ScanParam::sigma: p.sigma = value; break;
      case ScanParam::gamma: p.gamma = value; break;
      case ScanParam::bin_width: bc.bin_width = value; break;
    }
    require_valid(p);

    for (std::size_t k = 0; k < protocols.size(); ++k) {
      const auto& spec = protocols[k];
      PhysicalParams q = p;
      if (cfg.optimize_delta && axis.parameter != ScanParam::delta) {
        q.delta =
            information::optimal_delta({q, bc, spec.detector, spec.protocol}).delta;
      }
      Row row;
      row.value = value;
      row.label = spec.label;
      row.delta = q.delta;
      row.fisher = information::cfi_delta(q, bc, spec.detector, spec.protocol);
      row.irel = information::relative_information(row.fisher, q.sigma, q.gamma);
      if (with_fim) {
        const auto fim =
            information::fim_for_config(q, bc, spec.detector, spec.protocol, ps);
        const auto analysis = information::fim_analysis(fim);
        row.det = analysis.determinant;
        row.eigs = analysis.eigenvalues;
      }
      rows[i * protocols.size() + k] = row;
    }
  });

  detail::OutputStream out(cfg.out);
  auto& os = out.get();
  io::detail::write_meta(os, "scan", cfg);
  os << "parameter,value,protocol,delta,F_delta,I_rel";
  if (with_fim) {
    os << ",det";
    for (std::size_t i = 0; i < ps.size(); ++i) os << ",eig_" << (i + 1);
  }
  os << "\n";
  for (const auto& row : rows) {
    os << scan_param_name(axis.parameter) << "," << io::format_g17(row.value) << ","
       << row.label << "," << io::format_g17(row.delta) << ","
       << io::format_g17(row.fisher) << "," << io::format_g17(row.irel);
    if (with_fim) {
      os << "," << io::format_g17(row.det);
      for (double e : row.eigs) os << "," << io::format_g17(e);
    }
    os << "\n";
  }
  return kExitOk;
}

/// `simulate`: draw outcome counts and write them as CSV.
inline int cmd_simulate(const RunConfig& cfg) {
  const auto p = to_params(cfg);
  const auto bc = to_binning(cfg);
  const auto dc = to_detector(cfg);
  const auto protocol = to_protocol(cfg);

  const auto hist =
      cfg.sampler == "generative"
          ? simulate::sample_generative(p, bc, dc, protocol, cfg.n_trials, to_seed(cfg))
          : simulate::sample_outcomes(p, bc, dc, protocol, cfg.n_trials, to_seed(cfg));

  detail::OutputStream out(cfg.out);
  io::write_counts_csv(out.get(), hist, cfg);
  return kExitOk;
}

/// Explicitly-supplied calibration values; anything unset defaults to the
/// counts file's own embedded configuration.
struct KnownOverrides {
  std::optional<double> alpha;
  std::optional<double> sigma;
  std::optional<double> gamma;
};

namespace detail {

inline simulate::CountsHistogram load_counts(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open counts file: " + path);
  return io::read_counts_csv(is);
}

inline nlohmann::json estimation_to_json(const estimate::EstimationResult& res) {
  nlohmann::json j;
  for (const auto& [param, value] : res.estimates)
    j["estimates"][information::param_name(param)] = value;
  j["log_likelihood"] = res.log_likelihood;
  j["observed_information"] = matrix_to_json(res.observed_information.entries);
  for (const auto& [param, value] : res.crb_variance)
    j["crb_variance"][information::param_name(param)] = value;
  j["n_trials"] = res.n_trials;
  j["boundary_warning"] = res.boundary_warning;
  return j;
}

inline nlohmann::json counts_config_json(const simulate::CountsHistogram& counts) {
  nlohmann::json j;
  j["delta"] = counts.params.delta;
  j["alpha"] = counts.params.alpha;
  j["sigma"] = counts.params.sigma;
  j["gamma"] = counts.params.gamma;
  j["bin_width"] = counts.binning.bin_width;
  j["tail_mass_tolerance"] = counts.binning.tail_mass_tolerance;
  j["max_bins"] = counts.binning.max_bins;
  j["detector"] = counts.detector.number_resolving ? "nr" : "bucket";
  j["timing"] = counts.detector.time_resolving ? "tr" : "notr";
  j["protocol"] = counts.protocol == binned::Protocol::hom ? "hom" : "nohom";
  j["seed"] = counts.seed.seed;
  j["stream_id"] = counts.seed.stream_id;
  j["n_trials"] = counts.n_trials;
  return j;
}

inline estimate::EstimationResult run_estimation(
    const simulate::CountsHistogram& counts, const RunConfig& cfg,
    const KnownOverrides& known_overrides) {
  PhysicalParams known = counts.params;
  if (known_overrides.alpha) known.alpha = *known_overrides.alpha;
  if (known_overrides.sigma) known.sigma = *known_overrides.sigma;
  if (known_overrides.gamma) known.gamma = *known_overrides.gamma;

  const auto ps = to_parameter_set(cfg);
  if (ps.size() == 1 && ps[0] == information::Param::delta)
    return estimate::mle_delta(counts, known);
  return estimate::mle_joint(counts, ps, known);
}

}  // namespace detail

/// `estimate`: maximum-likelihood estimation from a counts CSV. With a
/// second dataset (recorded without the sample) the command also reports
/// delta_s_estimate = delta_hat_with - delta_hat_without.
inline int cmd_estimate(const RunConfig& cfg, const std::string& counts_path,
                        const std::string& second_path = {},
                        const KnownOverrides& known = {}) {
  const auto counts = detail::load_counts(counts_path);
  const auto res = detail::run_estimation(counts, cfg, known);

  nlohmann::json j;
  j["schema_version"] = 1;
  j["input"] = counts_path;
  j["seed"] = {{"seed", counts.seed.seed}, {"stream_id", counts.seed.stream_id}};
  j["counts_config"] = detail::counts_config_json(counts);
  j.update(detail::estimation_to_json(res));

  if (!second_path.empty()) {
    const auto counts2 = detail::load_counts(second_path);
    const auto res2 = detail::run_estimation(counts2, cfg, known);
    j["second"] = detail::estimation_to_json(res2);
    j["second"]["input"] = second_path;
    j["second"]["counts_config"] = detail::counts_config_json(counts2);
    j["delta_s_estimate"] = res.estimates.at(information::Param::delta) -
                            res2.estimates.at(information::Param::delta);
  }

  detail::OutputStream out(cfg.out);
  out.get() << j.dump(2) << "\n";
  return kExitOk;
}

struct BenchmarkRow {
  std::string name;
  std::string bin_label;
  double computed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// `benchmarks`: the headline detector-upgrade comparisons at the benchmark
/// point alpha = 0.9, gamma = 0.4. The physical operating points quoted as
/// T = 1, 0.2 and 0.1 ps correspond to a dip width 1/sigma = 0.2 ps, i.e.
/// T sigma = 5, 1 and 0.5; every protocol runs at its own optimal delay.
inline std::vector<BenchmarkRow> run_benchmarks() {
  const double alpha = 0.9, gamma = 0.4;
  PhysicalParams base{0.0, alpha, 1.0, gamma};
  const binned::BinningConfig none{1.0, 1e-12, 0};

  auto best = [&](const binned::DetectorConfig& dc, binned::Protocol protocol,
                  double bin_width) {
    return information::optimal_delta(
               {base, {bin_width, 1e-12, 0}, dc, protocol})
        .fisher;
  };

  const double f_hom = information::optimal_delta({base, none, {false, false},
                                                   binned::Protocol::hom})
                           .fisher;
  const double f_nr = information::optimal_delta({base, none, {true, false},
                                                  binned::Protocol::hom})
                          .fisher;

  std::vector<BenchmarkRow> rows;
  auto add = [&](std::string name, std::string label, double computed,
                 double expected, double tol) {
    BenchmarkRow row{std::move(name), std::move(label), computed, expected, tol,
                     std::abs(computed - expected) <= tol};
    rows.push_back(row);
  };

  add("nr_vs_bucket_no_timing", "-", f_nr / f_hom - 1.0, 0.099, 0.002);

  // T sigma = 5  (T = 1 ps at the 0.2 ps dip width)
  add("tr_hom_vs_hom", "T=1ps",
      best({false, true}, binned::Protocol::hom, 5.0) / f_hom - 1.0, 0.013, 0.005);
  add("nrtr_hom_vs_hom", "T=1ps",
      best({true, true}, binned::Protocol::hom, 5.0) / f_hom - 1.0, 0.14, 0.02);

  // T sigma = 1  (T = 0.2 ps)
  add("no_hom_vs_hom", "T=0.2ps",
      best({false, true}, binned::Protocol::nohom, 1.0) / f_hom - 1.0, 0.36, 0.04);
  add("nrtr_hom_vs_hom", "T=0.2ps",
      best({true, true}, binned::Protocol::hom, 1.0) / f_hom - 1.0, 0.50, 0.04);

  // T sigma = 0.5  (T = 0.1 ps)
  add("nrtr_hom_vs_hom", "T=0.1ps",
      best({true, true}, binned::Protocol::hom, 0.5) / f_hom - 1.0, 0.95, 0.05);
  return rows;
}

inline int cmd_benchmarks(const RunConfig& cfg) {
  const auto rows = run_benchmarks();

  detail::OutputStream out(cfg.out);
  auto& os = out.get();
  nlohmann::json jrows = nlohmann::json::array();
  bool all_pass = true;
  os << "benchmark comparisons at alpha=0.9, gamma=0.4, dip width 0.2 ps\n";
  for (const auto& row : rows) {
    all_pass = all_pass && row.pass;
    char line[160];
    std::snprintf(line, sizeof(line), "%-24s %-8s computed %+.4f expected %+.3f +-%.3f  %s",
                  row.name.c_str(), row.bin_label.c_str(), row.computed, row.expected,
                  row.tolerance, row.pass ? "PASS" : "FAIL");
    os << line << "\n";
    jrows.push_back({{"name", row.name},
                     {"bin", row.bin_label},
                     {"computed", row.computed},
                     {"expected", row.expected},
                     {"tolerance", row.tolerance},
                     {"pass", row.pass}});
  }
  os << (all_pass ? "all benchmarks PASS" : "benchmark FAILURES present") << "\n";
  if (!cfg.out.empty()) {
    // Human-readable table went to the file; mirror the verdict on stdout.
    std::cout << (all_pass ? "all benchmarks PASS" : "benchmark FAILURES present")
              << "\n";
  }
  return all_pass ? kExitOk : kExitBenchmark;
}

/// `selftest`: quick oracle checks wired into the CLI so a deployment can
/// vouch for its own numerics.
inline int cmd_selftest() {
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
    if (!ok) ++failures;
  };
  const double inf = std::numeric_limits<double>::infinity();

  const double gauss =
      verify::quad_integrate([](double x) { return std::exp(-x * x); }, 0.0, inf).value;
  check("quadrature: half-Gaussian mass",
        std::abs(gauss - std::sqrt(math::pi) / 2.0) < 1e-10);

  bool norm_ok = true;
  bool stable_ok = true;
  bool kernel_ok = true;
  bool binned_ok = true;
  rng::Philox gen(7u, 0u);
  for (int t = 0; t < 5; ++t) {
    PhysicalParams p{-1.0 + 2.0 * gen.next_double(), gen.next_double(),
                     0.5 + 1.5 * gen.next_double(), 0.0};
    const double total =
        verify::quad_integrate(
            [&](double x) {
              return model::coincidence_density(p, x) + model::bunching_density(p, x);
            },
            -inf, inf)
            .value;
    norm_ok = norm_ok && std::abs(total - 1.0) < 1e-9;

    const double tau = -1.0 + 2.0 * gen.next_double();
    if (std::abs(8.0 * p.delta * p.sigma * p.sigma * tau) < 600.0) {
      const double lit = verify::literal_coincidence_density(p, tau);
      const double stable = model::coincidence_density(p, tau);
      if (lit > 1e-280)
        stable_ok = stable_ok && std::abs(stable - lit) <= 1e-12 * std::abs(lit);
    }

    const double mu = -1.0 + 2.0 * gen.next_double();
    const double s = 0.3 + gen.next_double();
    const double a = mu - 2.0 * s, b = mu + 1.5 * s;
    const double kq =
        verify::quad_integrate(
            [&](double x) { return (0.3 + 0.7 * x) * math::norm_pdf(x, mu, s); }, a, b)
            .value;
    kernel_ok = kernel_ok &&
                std::abs(binned::gaussian_linear_segment_integral(mu, s, a, b, 0.3, 0.7) -
                         kq) < 1e-10;

    binned::BinningConfig bc{0.4 + gen.next_double(), 1e-12, 0};
    const int n = static_cast<int>(3.0 * gen.next_double());
    const double direct = binned::binned_coincidence(p, bc, n);
    double oracle;
    const double T = bc.bin_width;
    if (n == 0) {
      oracle = 2.0 * verify::quad_integrate(
                         [&](double x) {
                           return (T - x) / T * model::coincidence_density(p, x);
                         },
                         0.0, T)
                         .value;
    } else {
      oracle =
          2.0 * (verify::quad_integrate(
                     [&](double x) {
                       return (x - (n - 1) * T) / T * model::coincidence_density(p, x);
                     },
                     (n - 1) * T, n * T)
                     .value +
                 verify::quad_integrate(
                     [&](double x) {
                       return ((n + 1) * T - x) / T * model::coincidence_density(p, x);
                     },
                     n * T, (n + 1) * T)
                     .value);
    }
    binned_ok = binned_ok && std::abs(direct - oracle) < 1e-10;
  }
  check("quadrature: density normalization", norm_ok);
  check("stable vs literal density form", stable_ok);
  check("erf kernel vs quadrature", kernel_ok);
  check("binned probabilities vs quadrature", binned_ok);

  const double score = verify::score_integral_cfi(
      [](const PhysicalParams& q, double tau) { return model::nohom_density(q, tau); },
      PhysicalParams{0.5, 1.0, 1.0, 0.0});
  check("score integral reaches 4 sigma^2", std::abs(score - 4.0) < 4e-3);

  std::cout << (failures == 0 ? "selftest PASS" : "selftest FAIL") << "\n";
  return failures == 0 ? kExitOk : kExitBenchmark;
}

}  // namespace hom::cli
