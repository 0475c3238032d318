#ifndef SPAMISS_IO_HPP
#define SPAMISS_IO_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spamiss/assessment.hpp"
#include "spamiss/mcmc.hpp"
#include "spamiss/model.hpp"
#include "spamiss/simgen.hpp"

namespace spamiss {

// ---------------------------------------------------------------------------
// Configuration files: [section] headers, key = value entries, '#' comments,
// whitespace-separated list values. Errors carry 1-based line numbers.
// ---------------------------------------------------------------------------

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(const std::string& key) const;
};

class Config {
 public:
  static Config parse_string(const std::string& text);
  static Config parse_file(const std::string& path);

  const ConfigSection* section(const std::string& name) const;
  std::vector<const ConfigSection*> sections_with_prefix(const std::string& prefix) const;
  const std::string& text() const { return text_; }

 private:
  std::vector<ConfigSection> sections_;
  std::string text_;
};

// Typed lookups; conversion failures rethrow as ParseError at the entry's line.
std::optional<std::string> get_string(const ConfigSection* s, const std::string& key);
std::optional<double> get_double(const ConfigSection* s, const std::string& key);
std::optional<long> get_long(const ConfigSection* s, const std::string& key);
std::optional<bool> get_bool(const ConfigSection* s, const std::string& key);
std::optional<std::vector<std::string>> get_tokens(const ConfigSection* s, const std::string& key);
std::optional<Vector> get_vector(const ConfigSection* s, const std::string& key);

// ---------------------------------------------------------------------------
// Dataset files. Observations: one row per observation with columns
// location_id, y, then the covariates; missing cells hold the literal token
// NA. Locations: location_id, coord1, coord2.
// ---------------------------------------------------------------------------

LocationSet read_locations_csv(const std::string& path);
void write_locations_csv(const std::string& path, const LocationSet& locations);

SpatialDataset read_dataset_csv(const std::string& observations_path,
                                const std::string& locations_path);
void write_dataset_csv(const std::string& path, const SpatialDataset& data);

/// Square 0/1 adjacency, one row per location, comma separated, no header.
Matrix read_adjacency_csv(const std::string& path, Eigen::Index n);

// ---------------------------------------------------------------------------
// Chain outputs. Draw file: tab separated, one row per kept draw, header
// naming every scalar element, deviance first. Likelihood terms go to a
// companion file so the draw file stays human-auditable.
// ---------------------------------------------------------------------------

void write_draws_tsv(const std::string& path, const ChainOutput& chain,
                     const SpatialDataset& data, const ModelSpec& spec);
std::vector<std::pair<std::string, Vector>> read_draws_tsv(const std::string& path);

void write_loglik_tsv(const std::string& path, const ChainOutput& chain);

void write_summary_tsv(const std::string& path, const std::vector<SummaryRow>& rows);

struct CriteriaReport {
  double mdic = 0.0;
  double mlpml = 0.0;
  std::optional<double> dic_r;
};

void write_criteria_tsv(const std::string& path, const CriteriaReport& report);
CriteriaReport read_criteria_tsv(const std::string& path);

// ---------------------------------------------------------------------------
// Run manifest: everything needed to re-derive the outputs bit for bit
// (command, config digest, seed, input digests, version), plus a timestamp
// annotation that is not part of the reproducibility core.
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string command;
  std::uint64_t config_digest = 0;
  std::uint64_t seed = 0;
  std::map<std::string, std::uint64_t> input_digests;
  std::string version;
  std::string timestamp;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

std::uint64_t digest_bytes(const std::string& bytes);
std::uint64_t digest_file(const std::string& path);

/// Write-temp-then-rename; partial files never appear under the final name.
void atomic_write(const std::string& path, const std::string& content);

// ---------------------------------------------------------------------------
// Config -> model structures.
// ---------------------------------------------------------------------------

/// Builds the ModelSpec against the dataset's columns. Unknown column names
/// are collected and reported together in one SchemaError.
ModelSpec resolve_model_spec(const Config& config, const SpatialDataset& data,
                             const std::optional<Matrix>& adjacency);

Priors parse_priors(const Config& config);
ChainConfig parse_chain_config(const Config& config);
SimDesign parse_sim_design(const Config& config);
SimTruths parse_sim_truths(const Config& config);
std::map<std::string, double> parse_truths(const Config& config);

}  // namespace spamiss

#endif
