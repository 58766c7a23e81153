#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "hom/cli.hpp"
#include "hom/config.hpp"
#include "hom/io.hpp"

using namespace hom;
using namespace hom::cli;
using Catch::Approx;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hom_cli_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

nlohmann::json parse_file(const std::filesystem::path& p) {
  std::ifstream is(p);
  REQUIRE(is.good());
  nlohmann::json j;
  is >> j;
  return j;
}

}  // namespace

TEST_CASE("config parsing is strict") {
  nlohmann::json j{{"delta", 0.5}, {"alpha", 0.9}, {"gamma", 0.4}};
  const auto cfg = config_from_json(j);
  CHECK(resolved_delta(cfg) == 0.5);
  CHECK(resolved_sigma(cfg) == 1.0);

  j["visibility"] = 0.9;  // typo for alpha
  CHECK_THROWS_AS(config_from_json(j), ConfigError);

  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"schema_version", 2}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"alpha", 1.7}}), DomainError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"units", "si"}}), ConfigError);
  CHECK_NOTHROW(config_from_json(nlohmann::json{{"units", "si"}, {"sigma", 4.6e12}}));
  CHECK_THROWS_AS(
      config_from_json(nlohmann::json{{"delta", 0.1}, {"delta_s", 0.2}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{
                      {"scan", {{"parameter", "delta"}, {"start", 0.0},
                                {"stop", 1.0}, {"steps", 0}}}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"fim_params", {"delta", "mass"}}}),
                  ConfigError);

  // Delay geometry feeds the effective delta.
  const auto geo = config_from_json(
      nlohmann::json{{"delta_s", 0.7}, {"delta_a", 0.2}});
  CHECK(resolved_delta(geo) == Approx(0.5).epsilon(1e-15));

  // Resolved configs round-trip.
  const auto cfg2 = config_from_json(config_to_json(cfg));
  CHECK(config_hash(cfg2) == config_hash(cfg));
}

TEST_CASE("dist command output") {
  RunConfig cfg;
  cfg.delta = 0.0;
  cfg.alpha = 1.0;
  cfg.gamma = 0.0;
  cfg.detector = "nr";
  cfg.timing = "tr";
  cfg.bin_width = 1.0;
  cfg.out = temp_file("dist_ideal.csv").string();
  REQUIRE(cmd_dist(cfg) == kExitOk);

  std::ifstream is(cfg.out);
  const auto rows = io::read_distribution_csv(is);
  math::KahanSum total;
  for (const auto& row : rows) {
    total += row.probability;
    if (row.kind == "coincidence_sep") CHECK(row.probability == 0.0);
  }
  CHECK(total.value() == Approx(1.0).margin(1e-9));

  RunConfig lossy = cfg;
  lossy.alpha = 0.9;
  lossy.delta = 0.5;
  lossy.gamma = 0.4;
  lossy.out = temp_file("dist_lossy.csv").string();
  REQUIRE(cmd_dist(lossy) == kExitOk);
  std::ifstream is2(lossy.out);
  bool zero_row_found = false;
  math::KahanSum total2;
  for (const auto& row : io::read_distribution_csv(is2)) {
    total2 += row.probability;
    if (row.kind == "zero_clicks") {
      zero_row_found = true;
      CHECK(row.probability == Approx(0.16).epsilon(1e-12));
    }
  }
  CHECK(zero_row_found);
  CHECK(total2.value() == Approx(1.0).margin(1e-9));
}

TEST_CASE("fisher command output") {
  RunConfig cfg;
  cfg.delta = 0.3;
  cfg.alpha = 0.9;
  cfg.gamma = 0.4;
  cfg.detector = "bucket";
  cfg.timing = "notr";
  cfg.fim_params = {"delta", "alpha", "sigma", "gamma"};
  cfg.out = temp_file("fisher_notr.json").string();
  REQUIRE(cmd_fisher(cfg) == kExitOk);

  const auto j = parse_file(cfg.out);
  CHECK(j.at("rank").get<int>() == 2);
  CHECK(j.at("singular").get<bool>());
  CHECK(j.at("qfi_two_photon").get<double>() == Approx(1.44).epsilon(1e-12));
  CHECK(j.at("fim").size() == 4);

  // NRTR relative information is loss-invariant at fixed delta.
  auto irel_at = [&](double gamma) {
    RunConfig c;
    c.delta = 0.5;
    c.alpha = 0.9;
    c.gamma = gamma;
    c.detector = "nr";
    c.timing = "tr";
    c.bin_width = 1.0;
    c.fim_params = {"delta"};
    c.out = temp_file("fisher_g" + std::to_string(gamma) + ".json").string();
    REQUIRE(cmd_fisher(c) == kExitOk);
    return parse_file(c.out).at("relative_information").get<double>();
  };
  CHECK(std::abs(irel_at(0.1) - irel_at(0.7)) < 1e-6);

  // Boundary parameters in the requested set are refused.
  RunConfig edge = cfg;
  edge.alpha = 1.0;
  edge.fim_params = {"alpha"};
  CHECK_THROWS_AS(cmd_fisher(edge), BoundaryError);
}

TEST_CASE("scan command output") {
  RunConfig cfg;
  cfg.alpha = 0.9;
  cfg.gamma = 0.4;
  cfg.bin_width = 5.0;
  cfg.timing = "tr";
  cfg.scan = ScanAxis{ScanParam::delta, -2.0, 2.0, 41};
  cfg.out = temp_file("scan_delta.csv").string();
  REQUIRE(cmd_scan(cfg) == kExitOk);

  std::ifstream is(cfg.out);
  std::string line;
  std::map<std::string, std::vector<double>> irel;
  int rows = 0;
  bool header_passed = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_passed) {
      header_passed = true;
      CHECK(line == "parameter,value,protocol,delta,F_delta,I_rel");
      continue;
    }
    const auto cells = io::detail::split_csv_line(line);
    REQUIRE(cells.size() == 6);
    ++rows;
    irel[cells[2]].push_back(std::stod(cells[5]));
  }
  CHECK(rows == 41 * 5);

  // The grid is symmetric about zero, and so is each information curve.
  for (const auto& [label, curve] : irel) {
    REQUIRE(curve.size() == 41);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      CAPTURE(label, i);
      CHECK(curve[i] == Approx(curve[curve.size() - 1 - i]).margin(1e-9));
    }
  }
}

TEST_CASE("bin-width scan approaches the two-photon QFI") {
  RunConfig cfg;
  cfg.alpha = 0.9;
  cfg.gamma = 0.4;
  cfg.timing = "tr";
  cfg.scan = ScanAxis{ScanParam::bin_width, 0.2, 2.0, 4};
  cfg.optimize_delta = true;
  cfg.out = temp_file("scan_T.csv").string();
  REQUIRE(cmd_scan(cfg) == kExitOk);

  std::ifstream is(cfg.out);
  std::string line;
  std::vector<double> nrtr_irel;
  bool header_passed = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_passed) {
      header_passed = true;
      continue;
    }
    const auto cells = io::detail::split_csv_line(line);
    if (cells[2] == "nrtr-hom") nrtr_irel.push_back(std::stod(cells[5]));
  }
  REQUIRE(nrtr_irel.size() == 4);
  // Values are ordered by increasing T: finer bins always help, and at
  // T = 0.2/sigma the protocol is most of the way to the conditioned QFI.
  for (std::size_t i = 1; i < nrtr_irel.size(); ++i)
    CHECK(nrtr_irel[i] < nrtr_irel[i - 1]);
  CHECK(nrtr_irel.front() > 0.9);
  CHECK(nrtr_irel.front() < 1.0);
}

TEST_CASE("selftest oracles pass") { CHECK(cmd_selftest() == kExitOk); }

TEST_CASE("simulate command output and determinism") {
  RunConfig cfg;
  cfg.delta = 0.5;
  cfg.alpha = 0.9;
  cfg.gamma = 0.4;
  cfg.detector = "nr";
  cfg.timing = "tr";
  cfg.bin_width = 1.0;
  cfg.n_trials = 20000;
  cfg.seed = 7;
  cfg.out = temp_file("counts_a.csv").string();
  REQUIRE(cmd_simulate(cfg) == kExitOk);

  std::ifstream is(cfg.out);
  const auto hist = io::read_counts_csv(is);
  CHECK(hist.n_trials == 20000);
  CHECK(hist.total() == 20000);
  CHECK(hist.params.delta == Approx(0.5));
  CHECK(hist.detector.number_resolving);

  cfg.out = temp_file("counts_b.csv").string();
  REQUIRE(cmd_simulate(cfg) == kExitOk);
  std::ifstream a(temp_file("counts_a.csv")), b(temp_file("counts_b.csv"));
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());

  // All photons lost: a single zero-click row.
  RunConfig dark = cfg;
  dark.gamma = 1.0;
  dark.n_trials = 500;
  dark.out = temp_file("counts_dark.csv").string();
  REQUIRE(cmd_simulate(dark) == kExitOk);
  std::ifstream isd(dark.out);
  const auto darkhist = io::read_counts_csv(isd);
  REQUIRE(darkhist.counts.size() == 1);
  CHECK(darkhist.counts.at({binned::OutcomeKind::zero_clicks, 0}) == 500);

  // The generative sampler is available behind the same command.
  RunConfig gen = cfg;
  gen.sampler = "generative";
  gen.n_trials = 5000;
  gen.out = temp_file("counts_gen.csv").string();
  REQUIRE(cmd_simulate(gen) == kExitOk);
  std::ifstream isg(gen.out);
  CHECK(io::read_counts_csv(isg).total() == 5000);
}

TEST_CASE("estimate command recovers the delay") {
  RunConfig sim;
  sim.delta = 0.5;
  sim.alpha = 0.9;
  sim.gamma = 0.4;
  sim.detector = "nr";
  sim.timing = "tr";
  sim.bin_width = 1.0;
  sim.n_trials = 100000;
  sim.seed = 99;
  sim.out = temp_file("counts_est.csv").string();
  REQUIRE(cmd_simulate(sim) == kExitOk);

  RunConfig est;
  est.out = temp_file("estimate.json").string();
  REQUIRE(cmd_estimate(est, sim.out) == kExitOk);
  const auto j = parse_file(est.out);
  const double dhat = j.at("estimates").at("delta").get<double>();
  const double crb = j.at("crb_variance").at("delta").get<double>();
  CHECK(std::abs(dhat - 0.5) < 3.0 * std::sqrt(crb));
  CHECK(j.at("counts_config").at("seed").get<std::uint64_t>() == 99);

  // Degenerate data maps to the flat-likelihood error.
  RunConfig dark = sim;
  dark.gamma = 1.0;
  dark.n_trials = 1000;
  dark.out = temp_file("counts_dark2.csv").string();
  REQUIRE(cmd_simulate(dark) == kExitOk);
  CHECK_THROWS_AS(cmd_estimate(est, dark.out), FlatLikelihoodError);

  // Joint delta+alpha on no-timing bucket data is not identifiable.
  RunConfig bucket = sim;
  bucket.detector = "bucket";
  bucket.timing = "notr";
  bucket.delta = 0.3;
  bucket.out = temp_file("counts_bucket.csv").string();
  REQUIRE(cmd_simulate(bucket) == kExitOk);
  RunConfig joint = est;
  joint.fim_params = {"delta", "alpha"};
  joint.out = temp_file("estimate_joint.json").string();
  CHECK_THROWS_AS(cmd_estimate(joint, bucket.out), SingularInformationError);
}

TEST_CASE("two-dataset mode composes a signed sample delay") {
  // delta_s = 1.0, adjustable delay 0.2 in both runs; no-HOM keeps the sign.
  RunConfig with;
  with.protocol = "nohom";
  with.timing = "tr";
  with.alpha = 0.9;
  with.gamma = 0.4;
  with.bin_width = 1.0;
  with.n_trials = 60000;
  with.seed = 1234;
  with.delay = DelayGeometry{1.0, 0.2};
  with.out = temp_file("counts_with.csv").string();
  REQUIRE(cmd_simulate(with) == kExitOk);

  RunConfig without = with;
  without.delay = DelayGeometry{0.0, 0.2};
  without.out = temp_file("counts_without.csv").string();
  REQUIRE(cmd_simulate(without) == kExitOk);

  RunConfig est;
  est.out = temp_file("estimate_two.json").string();
  REQUIRE(cmd_estimate(est, with.out, without.out) == kExitOk);
  const auto j = parse_file(est.out);
  const double ds = j.at("delta_s_estimate").get<double>();
  CHECK(ds > 0.0);
  CHECK(ds == Approx(1.0).margin(0.05));
}

TEST_CASE("benchmark table reproduces the headline comparisons") {
  const auto rows = run_benchmarks();
  REQUIRE(rows.size() == 6);
  for (const auto& row : rows) {
    CAPTURE(row.name, row.bin_label, row.computed, row.expected);
    CHECK(row.pass);
  }
}
