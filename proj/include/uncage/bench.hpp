#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "uncage/metrics.hpp"
#include "uncage/sampler.hpp"
#include "uncage/synthmgt.hpp"

namespace uncage {

// Experiment matrix: the Cartesian product of every list-valued field,
// crossed with `n_seeds` seeds per cell (seed = base_seed + index).
struct BenchConfig {
  // Scene.
  int height = 16;
  int width = 16;
  int n_objects = 2;
  double spacing = 0.4;
  double radius_factor = 0.125;
  double noise_sigma = 0.5;
  double margin = 1.0;
  double attn_sigma = 2.0;
  double ambiguity_sigma = 5.5;
  double ambiguity_gain = 1.0;
  double anchor_weight = 1.5;
  int anchor_radius = 1;
  std::vector<double> lambdas{0.7};

  // Schedule.
  int steps = 16;
  double temp_start = 1.0;
  double temp_end = 0.01;

  // Strategy sweep.
  std::vector<Strategy> strategies{Strategy::Baseline, Strategy::Uncage};
  std::vector<double> wa_values{3.0};
  std::vector<int> guidance_steps_values{4};
  std::vector<GuidanceMode> modes{GuidanceMode::Contrastive};
  std::vector<bool> blur_values{true};
  double guidance_sigma = 1.0;
  double token_temperature = 0.0;

  // Seeds and evaluation.
  int n_seeds = 200;
  std::uint64_t base_seed = 1;
  MetricThresholds thresholds;
  SyntheticModelConfig model;

  // Output file names, resolved against the --out directory.
  std::string results_csv = "results.csv";
  std::string summary_csv = "summary.csv";

  // Replay a fixed scene (--scene-file) instead of generating one per seed.
  // The file supplies geometry and scene knobs; only lambda is still swept.
  std::optional<std::pair<SceneSpec, PromptSpec>> fixed_scene;
};

// Parses the JSON config; unknown fields are an error. The UNCAGE_SEED
// environment variable, when set, overrides base_seed.
BenchConfig load_bench_config(const std::string& path);
BenchConfig bench_config_from_json(const std::string& text);

// One cell of the matrix (everything except the seed).
struct BenchCell {
  Strategy strategy = Strategy::Baseline;
  double wa = 0.0;
  int guidance_steps = 0;
  GuidanceMode mode = GuidanceMode::Contrastive;
  bool blur = true;
  double lambda = 0.0;
};

std::vector<BenchCell> bench_cells(const BenchConfig& cfg);

struct RunRow {
  long long run_id = 0;
  std::uint64_t seed = 0;
  BenchCell cell;
  double missing_rate = 0.0;
  double leakage = 0.0;
  double mixture = 0.0;
  int steps = 0;
  int height = 0;
  int width = 0;
};

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct CellSummary {
  BenchCell cell;
  int runs = 0;
  Interval missing, leakage, mixture;
};

struct BenchResult {
  std::vector<RunRow> rows;        // run_id order
  std::vector<CellSummary> cells;  // matrix order
  std::vector<std::string> errors;
};

// Executes the full matrix with up to `jobs` concurrent runs. Results are
// deterministic given the config, independent of the job count.
BenchResult run_benchmark(const BenchConfig& cfg, int jobs = 1);

// Executes one run of a cell and reports the resulting grid.
RunRow execute_run(const BenchConfig& cfg, const BenchCell& cell, std::uint64_t seed,
                   IntGrid* grid_out = nullptr, RunTrace* trace_out = nullptr,
                   SceneSpec* scene_out = nullptr, PromptSpec* prompt_out = nullptr);

// Percentile bootstrap interval of the mean (1000 resamples).
Interval bootstrap_mean(const std::vector<double>& values, std::mt19937_64& rng,
                        int resamples = 1000);

void write_results_csv(const std::vector<RunRow>& rows, std::ostream& out);
void write_summary_csv(const std::vector<CellSummary>& cells, const MetricThresholds& thresholds,
                       std::ostream& out);

// Colored cell per token: one hue per object, lighter shade for the
// borrowed-attribute variant, dashed outline on each planted region.
void render_grid_svg(const IntGrid& grid, const SceneSpec& scene, std::ostream& out);

// Final committed grid from a score-trace CSV (last token written per cell).
IntGrid grid_from_trace_csv(std::istream& in, int height, int width);

}  // namespace uncage
