// Command-line front end: outcome distributions, Fisher-information reports,
// parameter scans, Monte Carlo simulation, maximum-likelihood estimation and
// the benchmark/selftest suites.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hom/cli.hpp"
#include "hom/config.hpp"
#include "hom/errors.hpp"

namespace {

struct FlagSet {
  std::string config_path;
  double delta = 0.0, delta_s = 0.0, delta_a = 0.0;
  double alpha = 0.0, sigma = 0.0, gamma = 0.0;
  double bin_width = 0.0, tail_tol = 0.0;
  int max_bins = 0;
  std::string detector, timing, protocol, units, sampler, out;
  std::uint64_t n_trials = 0, seed = 0, stream_id = 0;
  std::vector<std::string> params;
  bool optimize_delta = false;
  std::string scan_param;
  double scan_start = 0.0, scan_stop = 0.0;
  int scan_steps = 0;

  CLI::App* app = nullptr;
};

void add_common_flags(CLI::App* cmd, FlagSet& f) {
  f.app = cmd;
  cmd->add_option("--config", f.config_path, "JSON run configuration");
  cmd->add_option("--delta", f.delta, "relative delay delta = delta_s - delta_a");
  cmd->add_option("--delta-s", f.delta_s, "sample-arm delay");
  cmd->add_option("--delta-a", f.delta_a, "adjustable-arm delay");
  cmd->add_option("--alpha", f.alpha, "visibility in [0,1]");
  cmd->add_option("--sigma", f.sigma, "spectral width (1/time)");
  cmd->add_option("--gamma", f.gamma, "per-photon loss probability");
  cmd->add_option("--bin-width", f.bin_width, "detector time-bin width T");
  cmd->add_option("--tail-tolerance", f.tail_tol, "bin truncation tail mass");
  cmd->add_option("--max-bins", f.max_bins, "bin enumeration cap (0 = auto)");
  cmd->add_option("--detector", f.detector, "bucket|nr")
      ->check(CLI::IsMember({"bucket", "nr"}));
  cmd->add_option("--timing", f.timing, "tr|notr")
      ->check(CLI::IsMember({"tr", "notr"}));
  cmd->add_option("--protocol", f.protocol, "hom|nohom")
      ->check(CLI::IsMember({"hom", "nohom"}));
  cmd->add_option("--units", f.units, "natural (sigma=1) | si (seconds)")
      ->check(CLI::IsMember({"natural", "si"}));
  cmd->add_option("--sampler", f.sampler, "categorical|generative")
      ->check(CLI::IsMember({"categorical", "generative"}));
  cmd->add_option("--params", f.params,
                  "estimation/FIM parameters (subset of delta,alpha,sigma,gamma)")
      ->delimiter(',');
  cmd->add_option("--n-trials", f.n_trials, "number of photon pairs");
  cmd->add_option("--seed", f.seed, "RNG seed");
  cmd->add_option("--stream-id", f.stream_id, "RNG stream id");
  cmd->add_option("--out", f.out, "output path (default stdout)");
  cmd->add_flag("--optimize-delta,!--no-optimize-delta", f.optimize_delta,
                "pick the information-optimal delta per scan point");
}

void add_scan_flags(CLI::App* cmd, FlagSet& f) {
  cmd->add_option("--scan-param", f.scan_param,
                  "delta|alpha|sigma|gamma|bin_width");
  cmd->add_option("--scan-start", f.scan_start, "first grid value");
  cmd->add_option("--scan-stop", f.scan_stop, "last grid value");
  cmd->add_option("--scan-steps", f.scan_steps, "number of grid points");
}

bool given(const FlagSet& f, const std::string& name) {
  const auto* opt = f.app->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

hom::cli::RunConfig resolve_config(const FlagSet& f) {
  hom::cli::RunConfig cfg;
  if (!f.config_path.empty()) {
    std::ifstream is(f.config_path);
    if (!is) throw hom::ConfigError("cannot open config file: " + f.config_path);
    nlohmann::json j;
    try {
      is >> j;
    } catch (const nlohmann::json::exception& e) {
      throw hom::ConfigError(std::string("config JSON parse error: ") + e.what());
    }
    cfg = hom::cli::config_from_json(j);
  }

  if (given(f, "--delta")) cfg.delta = f.delta;
  if (given(f, "--delta-s") || given(f, "--delta-a")) {
    if (given(f, "--delta"))
      throw hom::ConfigError("give either --delta or the --delta-s/--delta-a pair");
    hom::cli::DelayGeometry g = cfg.delay.value_or(hom::cli::DelayGeometry{});
    if (given(f, "--delta-s")) g.sample_delay = f.delta_s;
    if (given(f, "--delta-a")) g.adjustable_delay = f.delta_a;
    cfg.delay = g;
  }
  if (given(f, "--alpha")) cfg.alpha = f.alpha;
  if (given(f, "--sigma")) cfg.sigma = f.sigma;
  if (given(f, "--gamma")) cfg.gamma = f.gamma;
  if (given(f, "--bin-width")) cfg.bin_width = f.bin_width;
  if (given(f, "--tail-tolerance")) cfg.tail_mass_tolerance = f.tail_tol;
  if (given(f, "--max-bins")) cfg.max_bins = f.max_bins;
  if (given(f, "--detector")) cfg.detector = f.detector;
  if (given(f, "--timing")) cfg.timing = f.timing;
  if (given(f, "--protocol")) cfg.protocol = f.protocol;
  if (given(f, "--units")) cfg.units = f.units;
  if (given(f, "--sampler")) cfg.sampler = f.sampler;
  if (given(f, "--params")) cfg.fim_params = f.params;
  if (given(f, "--n-trials")) cfg.n_trials = f.n_trials;
  if (given(f, "--seed")) cfg.seed = f.seed;
  if (given(f, "--stream-id")) cfg.stream_id = f.stream_id;
  if (given(f, "--out")) cfg.out = f.out;
  if (given(f, "--optimize-delta") || given(f, "--no-optimize-delta"))
    cfg.optimize_delta = f.optimize_delta;

  if (given(f, "--scan-param") || given(f, "--scan-steps")) {
    hom::cli::ScanAxis axis;
    axis.parameter = hom::cli::scan_param_from_string(f.scan_param);
    axis.start = f.scan_start;
    axis.stop = f.scan_stop;
    axis.steps = f.scan_steps;
    if (axis.steps < 1) throw hom::ConfigError("scan steps must be >= 1");
    cfg.scan = axis;
    if (!given(f, "--optimize-delta") && !given(f, "--no-optimize-delta"))
      cfg.optimize_delta = axis.parameter != hom::cli::ScanParam::delta;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Time- and number-resolved Hong-Ou-Mandel delay metrology: outcome "
      "distributions, Fisher information, simulation and estimation"};
  app.require_subcommand(1);

  FlagSet dist_f, fisher_f, scan_f, sim_f, est_f, bench_f;
  std::string counts_path, second_path;
  double known_alpha = 0.0, known_sigma = 0.0, known_gamma = 0.0;

  auto* dist = app.add_subcommand("dist", "outcome distribution as CSV");
  add_common_flags(dist, dist_f);
  auto* fisher = app.add_subcommand("fisher", "Fisher information report as JSON");
  add_common_flags(fisher, fisher_f);
  auto* scan = app.add_subcommand("scan", "parameter sweep as CSV");
  add_common_flags(scan, scan_f);
  add_scan_flags(scan, scan_f);
  auto* sim = app.add_subcommand("simulate", "draw outcome counts as CSV");
  add_common_flags(sim, sim_f);
  auto* est = app.add_subcommand("estimate", "maximum-likelihood estimation as JSON");
  add_common_flags(est, est_f);
  est->add_option("counts", counts_path, "counts CSV (with sample)")->required();
  est->add_option("--second", second_path, "counts CSV without the sample");
  est->add_option("--known-alpha", known_alpha, "override calibrated visibility");
  est->add_option("--known-sigma", known_sigma, "override calibrated width");
  est->add_option("--known-gamma", known_gamma, "override calibrated loss");
  auto* bench = app.add_subcommand("benchmarks", "detector-upgrade benchmark table");
  add_common_flags(bench, bench_f);
  app.add_subcommand("selftest", "built-in numerical oracles");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dist->parsed()) return hom::cli::cmd_dist(resolve_config(dist_f));
    if (fisher->parsed()) return hom::cli::cmd_fisher(resolve_config(fisher_f));
    if (scan->parsed()) return hom::cli::cmd_scan(resolve_config(scan_f));
    if (sim->parsed()) return hom::cli::cmd_simulate(resolve_config(sim_f));
    if (est->parsed()) {
      hom::cli::KnownOverrides known;
      if (est->count("--known-alpha")) known.alpha = known_alpha;
      if (est->count("--known-sigma")) known.sigma = known_sigma;
      if (est->count("--known-gamma")) known.gamma = known_gamma;
      return hom::cli::cmd_estimate(resolve_config(est_f), counts_path, second_path,
                                    known);
    }
    if (bench->parsed()) return hom::cli::cmd_benchmarks(resolve_config(bench_f));
    return hom::cli::cmd_selftest();
  } catch (const hom::BoundaryError& e) {
    std::cerr << "boundary error: " << e.what() << "\n";
    return hom::cli::kExitBoundary;
  } catch (const hom::FlatLikelihoodError& e) {
    std::cerr << "degenerate data: " << e.what() << "\n";
    return hom::cli::kExitDegenerate;
  } catch (const hom::SingularInformationError& e) {
    std::cerr << "degenerate data: " << e.what() << "\n";
    return hom::cli::kExitDegenerate;
  } catch (const hom::IncompatibleConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return hom::cli::kExitConfig;
  } catch (const hom::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return hom::cli::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
