#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gaussperc/field.hpp"
#include "gaussperc/kernel.hpp"

namespace gaussperc {

enum class ExperimentKind { sample, events, crossing_scan, level_scan, chemdist, s_tail, renorm_scan, domination, stretch };

std::string_view to_string(ExperimentKind kind);
/// Throws ValidationError("experiment") for unknown names.
ExperimentKind experiment_from_string(std::string_view name);

struct FieldSpec {
  KernelKind kernel = KernelKind::bargmann_fock;
  int dim = 2;
  std::optional<double> beta;
  std::optional<double> r;
  std::optional<double> eps;
  double h = 0.25;
  double domain = 16.0;  // side of the sampled cube centered at 0
};

struct EventSpec {
  double R = 5.0;
  double kappa = 0.25;
  std::vector<double> levels{0.0};
  std::vector<double> radii;  // crossing-scan only
  std::string sign = "below";  // crossing-scan: which sign set crosses
};

struct ChemSpec {
  double s = 10.0;
  std::vector<double> thresholds;
  std::vector<double> distances{25.0, 50.0, 100.0};
  std::size_t connected_target = 200;
  std::size_t max_trials = 2000;
  double delta = 0.5;
};

struct RenormSpec {
  std::vector<double> p{0.99};
  std::vector<std::int64_t> x_norms{16, 32, 64};
  double C0 = 9.0;
  double delta = 0.5;
  std::vector<std::int64_t> n{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::optional<double> tail_p;
  std::vector<std::int64_t> sites{8, 8};
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::sample;
  std::uint64_t seed = 1;
  std::size_t trials = 100;
  unsigned threads = 1;
  std::string output_dir = "out";
  FieldSpec field;
  EventSpec event;
  ChemSpec chem;
  RenormSpec renorm;
  ResourceBudget budget;
};

/// Canonical form: every key present, fixed order.
nlohmann::ordered_json to_json(const ExperimentConfig& config);
/// Parses and validates. Unknown keys are rejected by name.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Canonical text; parse_config(serialize(c)) serializes to the same bytes.
std::string serialize(const ExperimentConfig& config);
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Checks every parameter the chosen experiment uses; throws
/// ValidationError naming the field.
void validate(const ExperimentConfig& config);

/// Kernel described by the field spec (truncated when r is set).
Kernel make_kernel(const FieldSpec& spec);
/// Cube of side `domain` centered at 0, spacing h.
Grid field_grid(const FieldSpec& spec);

}  // namespace gaussperc
