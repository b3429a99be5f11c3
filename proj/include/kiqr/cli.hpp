#pragma once

// Command-line front end: fit, tune, simulate, gwas, qc, report and rerun.

#include <optional>
#include <string>
#include <vector>

namespace kiqr::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

/// Everything needed to reproduce a command: its argument list, resolved
/// settings and input digests.
struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;  // after config-file merging, program name excluded
  std::string config_json;             // resolved settings, serialized
  std::optional<unsigned long long> seed;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::string version = kVersion;
  std::optional<double> wall_clock_seconds;

  std::string to_json() const;
  static RunManifest from_json_file(const std::string& path);
};

/// Runs one command line (program name excluded). Returns the exit code;
/// diagnostics go to stderr.
int run(const std::vector<std::string>& args);

/// Merges `key=value` lines of a config file into `args` as `--key value`
/// for keys not already given on the command line. `flags` lists option
/// names that take no value (`true`/`false` in the file).
std::vector<std::string> merge_config(const std::vector<std::string>& args, const std::string& config_path,
                                      const std::vector<std::string>& flags);

}  // namespace kiqr::cli
