#ifndef SPAMISS_COMMANDS_HPP
#define SPAMISS_COMMANDS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace spamiss {

struct CliOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config seed
  int threads = 0;                    // 0 = hardware concurrency
  bool cc = false;                    // complete-case mode
  std::string dataset_path;           // fit: observations CSV
  std::string locations_path;         // fit: optional override of [data].locations
  std::vector<std::string> inputs;    // compare: criteria files or fit output dirs
};

// Each command throws on failure; the CLI wrapper turns that into exit codes.
void cmd_simulate(const CliOptions& opts);
void cmd_fit(const CliOptions& opts);
void cmd_compare(const CliOptions& opts);
void cmd_replicate_study(const CliOptions& opts);
void cmd_summarize(const CliOptions& opts);

/// Bounded worker pool over [0, n); deterministic outputs require fn(i) to be
/// self-contained (it is: every replicate forks its own streams).
void parallel_for(long n, int threads, const std::function<void(long)>& fn);

}  // namespace spamiss

#endif
