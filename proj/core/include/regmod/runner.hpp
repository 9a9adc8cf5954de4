#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "regmod/analysis.hpp"

namespace regmod {

/// Directory holding catalog/, suites/ and schema/. REGMOD_DATA_DIR overrides
/// the compiled-in default.
std::filesystem::path default_data_dir();

/// Catalog names (file stems under data/catalog), sorted.
std::vector<std::string> list_catalog(const std::filesystem::path& data_dir);

/// A path to an existing JSON file, or a catalog name.
FunctionInstance resolve_instance(const std::string& ref, const std::filesystem::path& data_dir);

struct EmitFlags {
  bool json = true;
  bool csv = true;
  bool plotdata = true;
};

struct SuiteConfig {
  std::string name;
  std::vector<RunSpec> runs;
  std::filesystem::path out_dir;
  std::filesystem::path data_dir;
  std::size_t jobs = 1;
  bool force = false;
  double tol = 0.05;
  EmitFlags emit;
};

struct SuiteOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::size_t> jobs;
  std::optional<double> tol;
  bool force = false;
};

/// Parses a suite record. Throws UsageError("seed required") when neither the
/// suite, a run, nor the overrides supply a seed; ConfigError on schema errors.
SuiteConfig parse_suite(const std::string& json_text, const std::filesystem::path& data_dir,
                        const SuiteOverrides& overrides = {});
SuiteConfig load_suite(const std::string& ref, const std::filesystem::path& data_dir,
                       const SuiteOverrides& overrides = {});

struct RunOutcome {
  std::string label;
  bool completed = false;
  bool checks_failed = false;
  std::string diagnostic;  // one line when !completed
  std::vector<std::filesystem::path> files;
};

struct SuiteResult {
  int exit_code = 0;  // 0 ok, 1 a non-skipped check failed, 2 usage/config, 3 runtime
  std::vector<RunOutcome> runs;
};

SuiteResult run_suite(const SuiteConfig& config);

/// Refuses to replace an existing file unless force is set.
void guard_overwrite(const std::filesystem::path& path, bool force);

}  // namespace regmod
