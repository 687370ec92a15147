#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace stab {

// ============================================================================
// Config-driven experiment runner behind the CLI.  Configs are strict JSON
// (unknown fields rejected); outputs are a report.json and a series.csv under
// <out>/<config-hash>/.  Numeric payloads are byte-identical across reruns of
// the same (config, seed); wall-clock provenance lives in a separate metadata
// block.  See docs/config-schema.md.
// ============================================================================

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericError = 3;
inline constexpr int kExitAcceptanceFailure = 4;

struct ResultRecord {
  std::string config_hash;   // 16 hex chars over the canonical config
  std::string report_json;   // full report (config + results + meta)
  std::string results_json;  // results block only (deterministic payload)
  std::string series_csv;
  bool acceptance_failed = false;  // verify-all only
};

// 64-bit FNV-1a of the canonical (sorted-key) config serialization, hex.
[[nodiscard]] std::string config_hash(const std::string& config_text);

// Parses, validates, and runs one experiment.  `command` must match the
// config "kind".  Throws stab::Error; InvalidConfig marks a config error.
[[nodiscard]] ResultRecord run_experiment(const std::string& command,
                                          const std::string& config_text,
                                          std::optional<std::uint64_t> seed_override,
                                          int threads);

// Lines printed by `verify-all --list`.
[[nodiscard]] std::string acceptance_listing();

// Runs an experiment and writes <out_dir>/<hash>/report.json and series.csv.
// Returns a process exit code (0 / 2 / 3 / 4).  Error text goes to *error.
int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_dir, std::optional<std::uint64_t> seed_override,
                int threads, std::string* error, std::string* stdout_text);

}  // namespace stab
