#pragma once

// Config files, overrides and run directories for the command-line front end.
//
// Config format: '#' comments, "[section]" headers and "key = value" lines.
// A key may also be written fully qualified ("grid.cells = 256"), which is
// how the config snapshot in every run directory is stored. Lists are
// comma separated except noise.controls, whose entries contain commas and
// are separated by ';'.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "stochtr/experiments.hpp"

namespace stochtr {

/// Apply one qualified setting, e.g. ("grid.cells", "512"). Throws ConfigError.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Keys accepted by apply_setting, in canonical order.
std::vector<std::string> setting_keys();

/// Parse config text on top of `base`. If the text names an experiment
/// (experiment.name) and `base` is for a different one, defaults for the
/// named experiment are used instead. Every bad line is reported at once.
ExperimentConfig parse_config(const std::string& text, const std::optional<std::string>& experiment = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::optional<std::string>& experiment = {});

struct RunManifest {
  std::string config_path;
  std::string config_hash;
  std::string output_dir;
  std::string timestamp;
  nlohmann::json versions;

  nlohmann::json to_json() const;
};

std::string library_version();

/// CSV rendering of one table; fields containing separators are quoted.
std::string to_csv(const Table& table);

struct RunResult {
  Verdict verdict;
  RunManifest manifest;
  std::filesystem::path directory;
};

/// Run the experiment and publish its output directory atomically: files are
/// written to a sibling temp directory which then replaces `out`.
RunResult run_to_directory(const ExperimentConfig& cfg, const std::filesystem::path& out,
                           const std::string& config_path);

/// Human-readable catalog of drifts, initial data, mollifiers and h probes.
void print_catalog(std::ostream& os);

/// Entry point shared by the stochtr executable. Exit codes: 0 when every
/// assertion passes, 1 on assertion failure, 2 on invalid config or usage,
/// 3 when the run itself fails.
int cli_main(int argc, char** argv);

}  // namespace stochtr
