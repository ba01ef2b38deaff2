#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaussperc/config.hpp"

namespace gaussperc {

struct RunResult {
  std::string run_id;
  std::filesystem::path dir;
  std::vector<std::string> artifacts;
  nlohmann::ordered_json summary;
};

/// Output root: the CLI flag if given, else $GAUSSPERC_OUT, else config.output_dir.
std::filesystem::path resolve_output_root(const ExperimentConfig& config,
                                          const std::optional<std::filesystem::path>& cli_out = std::nullopt);

/// Runs the configured experiment into <root>/<run_id>. CSV tables are
/// written in trial order; summary.json and then manifest.json come last.
RunResult run(const ExperimentConfig& config, const std::filesystem::path& root);

/// JSON number, or the string "inf" / "-inf" / "nan" for non-finite values.
nlohmann::ordered_json json_number(double v);

}  // namespace gaussperc
