// gaussperc: command-line front end.
//
//   gaussperc <experiment> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]
//   gaussperc validate --config <path>
//   gaussperc plot --table <csv> --spec <json> [--output <svg>]
//
// Exit codes: 0 success, 2 validation error, 3 resource rejection, 4 runtime failure.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "gaussperc/config.hpp"
#include "gaussperc/csv.hpp"
#include "gaussperc/error.hpp"
#include "gaussperc/experiments.hpp"
#include "gaussperc/plot.hpp"

namespace {

constexpr int kValidation = 2;
constexpr int kResource = 3;
constexpr int kRuntime = 4;

const char* const kExperiments[] = {"sample",  "events", "crossing-scan", "level-scan", "chemdist",
                                    "s-tail",  "renorm-scan", "domination", "stretch"};

int run_experiment(const std::string& name, const std::string& config_path, const std::optional<std::string>& out,
                   const std::optional<std::uint64_t>& seed, const std::optional<unsigned>& threads) {
  gaussperc::ExperimentConfig config = gaussperc::load_config(config_path);
  if (config.experiment != gaussperc::experiment_from_string(name))
    throw gaussperc::ValidationError("experiment", "config describes '" +
                                                       std::string(gaussperc::to_string(config.experiment)) +
                                                       "' but '" + name + "' was requested");
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  gaussperc::validate(config);
  std::optional<std::filesystem::path> out_path;
  if (out) out_path = *out;
  const auto result = gaussperc::run(config, gaussperc::resolve_output_root(config, out_path));
  std::cout << result.dir.string() << "\n";
  return 0;
}

int run_plot(const std::string& table_path, const std::string& spec_path, const std::optional<std::string>& output) {
  const auto table = gaussperc::csv::read(table_path);
  std::ifstream in(spec_path);
  if (!in) throw gaussperc::ValidationError("spec", "cannot read " + spec_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw gaussperc::ValidationError("spec", e.what());
  }
  const std::string svg = gaussperc::emit_plot(table, gaussperc::plot_spec_from_json(j));
  if (output) {
    std::ofstream o(*output, std::ios::binary | std::ios::trunc);
    o << svg;
    if (!o) throw std::runtime_error("cannot write " + *output);
  } else {
    std::cout << svg;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian excursion-set percolation laboratory"};
  app.require_subcommand(1);
  std::string level = "info";
  app.add_option("--log-level", level, "trace, debug, info, warn, error or off");

  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  for (const char* name : kExperiments) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out, "output root (overrides $GAUSSPERC_OUT and the config)");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  }
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("--config", config_path, "experiment config (JSON)")->required();

  std::string table_path, spec_path;
  std::optional<std::string> plot_out;
  auto* plot = app.add_subcommand("plot", "render a CSV table as SVG");
  plot->add_option("--table", table_path, "CSV table")->required();
  plot->add_option("--spec", spec_path, "plot spec (JSON)")->required();
  plot->add_option("--output", plot_out, "SVG path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidation;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("gaussperc"));
  spdlog::set_level(spdlog::level::from_str(level));

  try {
    if (validate->parsed()) {
      gaussperc::load_config(config_path);
      std::cout << "ok\n";
      return 0;
    }
    if (plot->parsed()) return run_plot(table_path, spec_path, plot_out);
    for (auto* sub : app.get_subcommands())
      return run_experiment(sub->get_name(), config_path, out, seed, threads);
  } catch (const gaussperc::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const gaussperc::ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kRuntime;
}
