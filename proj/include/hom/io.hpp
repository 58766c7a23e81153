#pragma once

#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hom/binned.hpp"
#include "hom/config.hpp"
#include "hom/errors.hpp"
#include "hom/simulate.hpp"

namespace hom::io {

/// 17 significant digits: lossless text round-trip for doubles.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::optional<binned::OutcomeKind> parse_outcome_kind(const std::string& s) {
  using K = binned::OutcomeKind;
  for (K k : {K::zero_clicks, K::one_click, K::coincidence_sep, K::bunch_sep,
              K::two_clicks_coinc, K::two_clicks_bunch, K::nohom_sep, K::overflow})
    if (binned::outcome_kind_label(k) == s) return k;
  return std::nullopt;
}

namespace detail {

inline void write_meta(std::ostream& os, const std::string& kind,
                       const cli::RunConfig& cfg) {
  os << "# hom " << kind << " v1\n";
  os << "# config: " << cli::config_to_json(cfg).dump() << "\n";
  char hex[24];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(cli::config_hash(cfg)));
  os << "# config_hash: " << hex << "\n";
  os << "# seed: " << cfg.seed << "/" << cfg.stream_id << "\n";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void write_distribution_csv(std::ostream& os,
                                   const binned::OutcomeDistribution& dist,
                                   const cli::RunConfig& cfg) {
  detail::write_meta(os, "dist", cfg);
  os << "outcome_kind,bin_index,probability\n";
  for (const auto& [o, prob] : dist.entries) {
    os << binned::outcome_kind_label(o.kind) << ",";
    if (binned::outcome_has_bin(o.kind)) os << o.bin;
    os << "," << format_g17(prob) << "\n";
  }
}

struct DistRow {
  std::string kind;
  std::optional<int> bin;
  double probability = 0.0;
};

inline std::vector<DistRow> read_distribution_csv(std::istream& is) {
  std::vector<DistRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) throw ConfigError("malformed distribution CSV row: " + line);
    DistRow row;
    row.kind = cells[0];
    if (!cells[1].empty()) row.bin = std::stoi(cells[1]);
    row.probability = std::stod(cells[2]);
    rows.push_back(row);
  }
  return rows;
}

inline void write_counts_csv(std::ostream& os, const simulate::CountsHistogram& hist,
                             const cli::RunConfig& cfg) {
  detail::write_meta(os, "counts", cfg);
  os << "# n_trials: " << hist.n_trials << "\n";
  os << "outcome_kind,bin_index,count\n";
  for (const auto& [o, c] : hist.counts) {
    os << binned::outcome_kind_label(o.kind) << ",";
    if (binned::outcome_has_bin(o.kind)) os << o.bin;
    os << "," << c << "\n";
  }
}

/// Rebuilds a histogram (including its generating configuration) from a
/// counts CSV produced by write_counts_csv.
inline simulate::CountsHistogram read_counts_csv(std::istream& is) {
  simulate::CountsHistogram hist;
  std::optional<cli::RunConfig> cfg;
  std::string line;
  bool header_seen = false;
  std::uint64_t declared_trials = 0;

  while (std::getline(is, line)) {
    if (line.rfind("# config: ", 0) == 0) {
      cfg = cli::config_from_json(nlohmann::json::parse(line.substr(10)));
      continue;
    }
    if (line.rfind("# n_trials: ", 0) == 0) {
      declared_trials = std::stoull(line.substr(12));
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != 3) throw ConfigError("malformed counts CSV row: " + line);
    const auto kind = parse_outcome_kind(cells[0]);
    if (!kind) throw ConfigError("unknown outcome kind: " + cells[0]);
    binned::Outcome o{*kind, 0};
    if (binned::outcome_has_bin(*kind)) {
      if (cells[1].empty())
        throw ConfigError("outcome kind " + cells[0] + " needs a bin index");
      o.bin = std::stoi(cells[1]);
    }
    hist.counts[o] += std::stoull(cells[2]);
  }

  if (!cfg) throw ConfigError("counts CSV is missing its embedded config");
  hist.params = cli::to_params(*cfg);
  hist.binning = cli::to_binning(*cfg);
  hist.detector = cli::to_detector(*cfg);
  hist.protocol = cli::to_protocol(*cfg);
  hist.seed = cli::to_seed(*cfg);
  hist.n_trials = declared_trials > 0 ? declared_trials : hist.total();
  if (hist.total() != hist.n_trials)
    throw ConfigError("counts do not sum to the declared n_trials");
  return hist;
}

}  // namespace hom::io
