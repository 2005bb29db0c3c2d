#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace locml {

/// Flat key-value run configuration. A run is fully determined by it: the
/// canonical echo is embedded in every output payload, and re-running the
/// same config yields byte-identical payload files (timing goes to the
/// .meta.json sidecars, which are excluded from that guarantee).
struct RunConfig {
  std::string subcommand;
  std::map<std::string, std::string> kv;

  /// Parses `key = value` lines; '#' starts a comment.
  static RunConfig from_file(const std::string& path);

  bool has(const std::string& key) const { return kv.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { kv[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          const std::vector<std::uint64_t>& fallback) const;
  std::vector<std::string> get_string_list(const std::string& key,
                                           const std::vector<std::string>& fallback) const;

  /// Seeds list: `seeds = a,b,c` wins over `seed = a`.
  std::vector<std::uint64_t> seeds(const std::vector<std::uint64_t>& fallback) const;

  /// Rejects keys outside `allowed` (catches config typos per subcommand).
  void validate_keys(const std::vector<std::string>& allowed) const;

  /// Canonical sorted "key=value" echo lines.
  std::vector<std::string> echo_lines() const;

  std::string out_dir() const { return get_string("out", "locml-out"); }
  std::string format() const { return get_string("format", "csv"); }
  std::uint64_t repeat() const { return get_u64("repeat", 5); }
};

/// Benchmark subcommands. Each writes a deterministic payload file plus a
/// .meta.json timing sidecar under the configured out directory and throws
/// on error.
void cmd_swsgd_bench(const RunConfig& config);
void cmd_joint_instance_bench(const RunConfig& config);
void cmd_cv_bench(const RunConfig& config);
void cmd_trace(const RunConfig& config);
void cmd_grad_check(const RunConfig& config);
void cmd_data_gen(const RunConfig& config);

/// Dispatch by subcommand name; returns false for an unknown name.
bool run_subcommand(const RunConfig& config);

std::vector<std::string> subcommand_names();

}  // namespace locml
