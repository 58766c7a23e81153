#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hom/binned.hpp"
#include "hom/errors.hpp"
#include "hom/information.hpp"
#include "hom/params.hpp"
#include "hom/simulate.hpp"

namespace hom::cli {

/// Sample-arm delay delta_s and the experimenter-steered adjustable delay
/// delta_a; the model sees only delta = delta_s - delta_a.
struct DelayGeometry {
  double sample_delay = 0.0;
  double adjustable_delay = 0.0;
  double relative() const { return sample_delay - adjustable_delay; }
};

enum class ScanParam { delta, alpha, sigma, gamma, bin_width };

struct ScanAxis {
  ScanParam parameter = ScanParam::delta;
  double start = 0.0;
  double stop = 0.0;
  int steps = 1;
};

/// Fully resolved run configuration. Serialized into every output artifact
/// so any result can be reproduced bit-for-bit from the file alone.
struct RunConfig {
  int schema_version = 1;
  std::string units = "natural";  // natural (sigma = 1) | si (seconds)
  double delta = 0.0;
  std::optional<DelayGeometry> delay;
  double alpha = 1.0;
  std::optional<double> sigma;  // defaults to 1 in natural units; required in si
  double gamma = 0.0;
  double bin_width = 1.0;
  double tail_mass_tolerance = 1e-12;
  int max_bins = 0;
  std::string detector = "bucket";   // bucket | nr
  std::string timing = "notr";       // tr | notr
  std::string protocol = "hom";      // hom | nohom
  std::string sampler = "categorical";  // categorical | generative
  std::optional<ScanAxis> scan;
  std::vector<std::string> fim_params{"delta"};
  bool optimize_delta = false;
  std::uint64_t n_trials = 100000;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::string out;  // output path; empty writes to stdout
};

inline ScanParam scan_param_from_string(const std::string& s) {
  if (s == "delta") return ScanParam::delta;
  if (s == "alpha") return ScanParam::alpha;
  if (s == "sigma") return ScanParam::sigma;
  if (s == "gamma") return ScanParam::gamma;
  if (s == "bin_width") return ScanParam::bin_width;
  throw ConfigError("unknown scan parameter: " + s);
}

inline std::string scan_param_name(ScanParam p) {
  switch (p) {
    case ScanParam::delta: return "delta";
    case ScanParam::alpha: return "alpha";
    case ScanParam::sigma: return "sigma";
    case ScanParam::gamma: return "gamma";
    case ScanParam::bin_width: return "bin_width";
  }
  return "?";
}

inline information::Param info_param_from_string(const std::string& s) {
  if (s == "delta") return information::Param::delta;
  if (s == "alpha") return information::Param::alpha;
  if (s == "sigma") return information::Param::sigma;
  if (s == "gamma") return information::Param::gamma;
  throw ConfigError("unknown estimation parameter: " + s);
}

inline double resolved_sigma(const RunConfig& cfg) {
  if (cfg.sigma) return *cfg.sigma;
  if (cfg.units == "si")
    throw ConfigError("si units require an explicit sigma (in 1/seconds)");
  return 1.0;
}

inline double resolved_delta(const RunConfig& cfg) {
  return cfg.delay ? cfg.delay->relative() : cfg.delta;
}

inline PhysicalParams to_params(const RunConfig& cfg) {
  PhysicalParams p{resolved_delta(cfg), cfg.alpha, resolved_sigma(cfg), cfg.gamma};
  require_valid(p);
  return p;
}

inline binned::BinningConfig to_binning(const RunConfig& cfg) {
  return {cfg.bin_width, cfg.tail_mass_tolerance, cfg.max_bins};
}

inline binned::DetectorConfig to_detector(const RunConfig& cfg) {
  binned::DetectorConfig dc;
  if (cfg.detector == "nr")
    dc.number_resolving = true;
  else if (cfg.detector != "bucket")
    throw ConfigError("detector must be 'bucket' or 'nr'");
  if (cfg.timing == "tr")
    dc.time_resolving = true;
  else if (cfg.timing != "notr")
    throw ConfigError("timing must be 'tr' or 'notr'");
  return dc;
}

inline binned::Protocol to_protocol(const RunConfig& cfg) {
  if (cfg.protocol == "hom") return binned::Protocol::hom;
  if (cfg.protocol == "nohom") return binned::Protocol::nohom;
  throw ConfigError("protocol must be 'hom' or 'nohom'");
}

inline simulate::RandomSeed to_seed(const RunConfig& cfg) {
  return {cfg.seed, cfg.stream_id};
}

inline information::ParameterSet to_parameter_set(const RunConfig& cfg) {
  information::ParameterSet ps;
  for (const auto& s : cfg.fim_params) ps.push_back(info_param_from_string(s));
  information::require_valid(ps);
  return ps;
}

/// Strict parser: unknown keys are configuration errors, silent typos being
/// the classic way benchmark numbers rot.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::set<std::string> known{
      "schema_version", "units", "delta", "delta_s", "delta_a", "alpha", "sigma",
      "gamma", "bin_width", "tail_mass_tolerance", "max_bins", "detector",
      "timing", "protocol", "sampler", "scan", "fim_params", "optimize_delta",
      "n_trials", "seed", "stream_id", "out"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key: " + key);

  RunConfig cfg;
  try {
    cfg.schema_version = j.value("schema_version", 1);
    if (cfg.schema_version != 1)
      throw ConfigError("unsupported schema_version (expected 1)");
    cfg.units = j.value("units", std::string("natural"));
    if (cfg.units != "natural" && cfg.units != "si")
      throw ConfigError("units must be 'natural' or 'si'");

    if (j.contains("delta")) cfg.delta = j.at("delta").get<double>();
    if (j.contains("delta_s") || j.contains("delta_a")) {
      if (j.contains("delta"))
        throw ConfigError("give either delta or the delta_s/delta_a pair");
      DelayGeometry g;
      g.sample_delay = j.value("delta_s", 0.0);
      g.adjustable_delay = j.value("delta_a", 0.0);
      cfg.delay = g;
    }
    cfg.alpha = j.value("alpha", 1.0);
    if (j.contains("sigma")) cfg.sigma = j.at("sigma").get<double>();
    cfg.gamma = j.value("gamma", 0.0);
    cfg.bin_width = j.value("bin_width", 1.0);
    cfg.tail_mass_tolerance = j.value("tail_mass_tolerance", 1e-12);
    cfg.max_bins = j.value("max_bins", 0);
    cfg.detector = j.value("detector", std::string("bucket"));
    cfg.timing = j.value("timing", std::string("notr"));
    cfg.protocol = j.value("protocol", std::string("hom"));
    cfg.sampler = j.value("sampler", std::string("categorical"));
    if (cfg.sampler != "categorical" && cfg.sampler != "generative")
      throw ConfigError("sampler must be 'categorical' or 'generative'");

    if (j.contains("scan")) {
      const auto& s = j.at("scan");
      static const std::set<std::string> scan_keys{"parameter", "start", "stop",
                                                   "steps"};
      for (const auto& [key, value] : s.items())
        if (!scan_keys.count(key))
          throw ConfigError("unknown scan key: " + key);
      ScanAxis axis;
      axis.parameter = scan_param_from_string(s.at("parameter").get<std::string>());
      axis.start = s.at("start").get<double>();
      axis.stop = s.at("stop").get<double>();
      axis.steps = s.at("steps").get<int>();
      if (axis.steps < 1) throw ConfigError("scan steps must be >= 1");
      cfg.scan = axis;
    }
    if (j.contains("fim_params"))
      cfg.fim_params = j.at("fim_params").get<std::vector<std::string>>();
    cfg.optimize_delta =
        j.value("optimize_delta", cfg.scan && cfg.scan->parameter != ScanParam::delta);
    cfg.n_trials = j.value("n_trials", std::uint64_t{100000});
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.stream_id = j.value("stream_id", std::uint64_t{0});
    cfg.out = j.value("out", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }

  // Eagerly validate the cross-field constraints.
  to_params(cfg);
  to_detector(cfg);
  to_protocol(cfg);
  to_parameter_set(cfg);
  return cfg;
}

/// Fully resolved round-trippable form (delay geometry collapsed to delta,
/// sigma made explicit).
inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["schema_version"] = cfg.schema_version;
  j["units"] = cfg.units;
  j["delta"] = resolved_delta(cfg);
  j["alpha"] = cfg.alpha;
  j["sigma"] = resolved_sigma(cfg);
  j["gamma"] = cfg.gamma;
  j["bin_width"] = cfg.bin_width;
  j["tail_mass_tolerance"] = cfg.tail_mass_tolerance;
  j["max_bins"] = cfg.max_bins;
  j["detector"] = cfg.detector;
  j["timing"] = cfg.timing;
  j["protocol"] = cfg.protocol;
  j["sampler"] = cfg.sampler;
  if (cfg.scan) {
    j["scan"] = {{"parameter", scan_param_name(cfg.scan->parameter)},
                 {"start", cfg.scan->start},
                 {"stop", cfg.scan->stop},
                 {"steps", cfg.scan->steps}};
  }
  j["fim_params"] = cfg.fim_params;
  j["optimize_delta"] = cfg.optimize_delta;
  j["n_trials"] = cfg.n_trials;
  j["seed"] = cfg.seed;
  j["stream_id"] = cfg.stream_id;
  return j;
}

inline std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a_hash(config_to_json(cfg).dump());
}

}  // namespace hom::cli
