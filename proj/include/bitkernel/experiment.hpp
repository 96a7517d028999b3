#pragma once

// Experiment harness behind the bitkernel-lab tool: configuration, run
// orchestration and the files each command writes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bitkernel/data.hpp"
#include "bitkernel/rng.hpp"
#include "bitkernel/train.hpp"

namespace bitkernel::experiment {

inline constexpr const char* kVersion = "0.1.0";

// Default target of compare-1d: smooth oscillation plus two narrow bumps.
inline constexpr const char* kSpikyPreset =
    "sin(3*x) + 1.5*exp(-20*(x-1)^2) - exp(-30*(x+1.2)^2) + 0.5*cos(7*x)";

enum class Command { train, sweep_width, similarity, kernel_probe, generate_data, compare_1d };

const char* to_string(Command c) noexcept;
Command parse_command(std::string_view text);

struct ExperimentConfig {
  Command command = Command::train;
  std::string target = "f3";
  // Expression in x for custom_1d and compare-1d; empty selects kSpikyPreset.
  std::string expression;
  std::size_t n = 100;
  std::size_t n_test = 100;
  std::vector<std::size_t> widths = {1024};
  double kappa = 1.0;
  // nullopt: automatic rule of train::learning_rate.
  std::optional<double> eta;
  // Clamp a user eta to the automatic stability cap.
  bool cap_eta = true;
  std::size_t steps = 1000;
  std::vector<std::uint64_t> seeds = {1};
  data::SampleMode mode = data::SampleMode::box;
  data::SplitMode split = data::SplitMode::independent;
  // 0 selects max(1, steps / 100).
  std::size_t probe_stride = 0;
  bool kernel_probes = true;
  bool decomposition = false;
  double sigma = 1.0;
  std::size_t workers = 1;
  // compare-1d evaluation grid size.
  std::size_t grid = 1000;
  std::string output_dir = ".";
};

// Unknown keys, type mismatches and constraint violations raise ConfigError
// naming the key.
ExperimentConfig parse_config(const nlohmann::json& source);
ExperimentConfig parse_config_text(std::string_view json_text);

// Applies "key=value" overrides. The value is read as JSON when it parses,
// otherwise as a plain string.
void apply_overrides(nlohmann::json& source, const std::vector<std::string>& assignments);

void validate(const ExperimentConfig& cfg);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

// Seed of the network initialization for one (seed, width) sweep cell.
constexpr std::uint64_t network_seed(std::uint64_t seed, std::size_t width) noexcept {
  return mix_seed(seed, width);
}

struct PreparedData {
  data::Dataset train;
  data::Dataset test;
};

// Train set from `seed`, test set from split(..., seed, cfg.split).
PreparedData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed);

train::Hyperparams hyperparams(const ExperimentConfig& cfg, std::uint64_t seed,
                               std::size_t width);
train::Diagnostics diagnostics(const ExperimentConfig& cfg);

struct CellResult {
  std::size_t width = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double eta = 0.0;
  double min_loss_1bit = 0.0;
  double min_loss_fp = 0.0;
  // d·m + m
  std::size_t param_count = 0;
  // Present unless the cell failed.
  std::optional<train::TrainTrajectory> trajectory;
};

CellResult run_cell(const ExperimentConfig& cfg, const PreparedData& data, std::size_t width,
                    std::uint64_t seed);

// Every (width, seed) cell, run on up to cfg.workers threads. Results are
// ordered by (width, seed) whatever the worker count. A divergent cell is
// marked failed; any other error propagates.
std::vector<CellResult> run_sweep(const ExperimentConfig& cfg);

struct WidthSummary {
  std::size_t width = 0;
  std::size_t cells = 0;
  std::size_t failed = 0;
  double median_min_loss_1bit = 0.0;
  double median_min_loss_fp = 0.0;
};

// Medians over the non-failed cells of each width (NaN if none).
std::vector<WidthSummary> summarize(const std::vector<CellResult>& cells);

double median(std::vector<double> values);

struct Compare1dResult {
  // Grid rows first, then test rows.
  std::vector<double> x;
  std::vector<double> y_true;
  std::vector<double> y_1bit;
  std::vector<double> y_fp;
  std::size_t grid_rows = 0;
  double eta = 0.0;
  double max_test_gap = 0.0;
  double train_loss_1bit = 0.0;
  double train_loss_fp = 0.0;
};

// Input lift for one-variable targets: φ(x) = (x/π, (x/π)², 1).
std::vector<double> lift_1d(double x);

Compare1dResult compare_1d(const ExperimentConfig& cfg);

// Runs cfg.command and writes its outputs under out_dir (created if needed):
//   train          run.csv, run.json, [decomposition.csv]
//   sweep-width    sweep.csv, sweep_summary.csv, runs/run_w{w}_s{s}.csv
//   similarity     similarity.csv, runs/run_w{w}_s{s}.csv
//   kernel-probe   kernel_probe.csv, gram/gram_w{w}_s{s}_{mode}.csv
//   generate-data  data_s{s}_train.csv, data_s{s}_test.csv (+ sidecars)
//   compare-1d     compare1d.csv
// plus meta.json (config echo, version, wall time, per-run learning rates).
void run_command(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace bitkernel::experiment
