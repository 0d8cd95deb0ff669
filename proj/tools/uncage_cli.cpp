#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "uncage/bench.hpp"

namespace fs = std::filesystem;
using namespace uncage;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

int cmd_run(const std::string& config_path, int jobs, const std::string& out_dir,
            const std::string& scene_file) {
  BenchConfig cfg = load_bench_config(config_path);
  if (!scene_file.empty()) cfg.fixed_scene = scene_from_json(slurp(scene_file));
  const BenchResult result = run_benchmark(cfg, jobs);

  fs::create_directories(out_dir);
  {
    auto out = open_out(fs::path(out_dir) / cfg.results_csv);
    write_results_csv(result.rows, out);
  }
  {
    auto out = open_out(fs::path(out_dir) / cfg.summary_csv);
    write_summary_csv(result.cells, cfg.thresholds, out);
  }

  std::printf("%zu runs over %zu cells -> %s, %s\n", result.rows.size(), result.cells.size(),
              (fs::path(out_dir) / cfg.results_csv).c_str(),
              (fs::path(out_dir) / cfg.summary_csv).c_str());
  for (const CellSummary& s : result.cells)
    std::printf("  %-10s wa=%-4g Tg=%-3d %-11s blur=%d lambda=%-4g  missing=%.3f  leakage=%.3f  "
                "mixture=%.3f [%.3f, %.3f]\n",
                strategy_name(s.cell.strategy).c_str(), s.cell.wa, s.cell.guidance_steps,
                mode_name(s.cell.mode).c_str(), s.cell.blur ? 1 : 0, s.cell.lambda,
                s.missing.mean, s.leakage.mean, s.mixture.mean, s.mixture.lo, s.mixture.hi);
  if (!result.errors.empty()) {
    for (const std::string& e : result.errors) std::fprintf(stderr, "error: %s\n", e.c_str());
    return 1;
  }
  return 0;
}

int cmd_render(const std::string& trace_path, const std::string& scene_path,
               const std::string& out_path) {
  const auto [scene, prompt] = scene_from_json(slurp(scene_path));
  (void)prompt;
  std::ifstream trace(trace_path);
  if (!trace) throw std::runtime_error("cannot open " + trace_path);
  const IntGrid grid = grid_from_trace_csv(trace, scene.height, scene.width);
  auto out = open_out(out_path);
  render_grid_svg(grid, scene, out);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_demo(const std::string& strategy, std::uint64_t seed, const std::string& out_dir,
             const std::string& scene_file) {
  BenchConfig cfg;  // desk-scale defaults: 16x16, T=16, two objects
  if (!scene_file.empty()) cfg.fixed_scene = scene_from_json(slurp(scene_file));
  BenchCell cell;
  cell.strategy = parse_strategy(strategy);
  cell.wa = 3.0;
  cell.guidance_steps = 4;
  cell.mode = GuidanceMode::Contrastive;
  cell.blur = true;
  cell.lambda = 0.7;

  IntGrid grid;
  RunTrace trace;
  SceneSpec scene;
  PromptSpec prompt;
  const RunRow row = execute_run(cfg, cell, seed, &grid, &trace, &scene, &prompt);

  std::printf("demo: %s on a %dx%d scene, seed %llu\n", strategy.c_str(), scene.height,
              scene.width, static_cast<unsigned long long>(seed));
  std::printf("objects:");
  for (const SceneEntity& e : scene.entities)
    std::printf(" %s(%s)@(%g,%g)", prompt.subject(e.object_id).label.c_str(),
                prompt.subject(e.attribute_id).label.c_str(), e.center_row, e.center_col);
  std::printf("  lambda=%g noise=%g\n", scene.lambda, scene.noise_sigma);

  long long left = static_cast<long long>(scene.height) * scene.width;
  for (const StepRecord& rec : trace.steps) {
    left -= rec.unmask_count;
    std::printf("step %2d  tau=%.3f  unmask %3d (left %3lld)", rec.step, rec.temperature,
                rec.unmask_count, left);
    if (rec.f.valid) std::printf("  F in [%.3f, %.3f]", rec.f.min, rec.f.max);
    if (rec.fa.valid) std::printf("  Fa mean %.3f", rec.fa.mean);
    std::printf("\n");
  }
  std::printf("metrics: missing=%.3f leakage=%.3f mixture=%.3f\n", row.missing_rate, row.leakage,
              row.mixture);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  {
    auto out = open_out(dir / "demo_trace.csv");
    write_trace_csv(trace, out);
  }
  {
    auto out = open_out(dir / "demo_scene.json");
    out << scene_to_json(scene, prompt);
  }
  {
    auto out = open_out(dir / "demo_grid.svg");
    render_grid_svg(grid, scene, out);
  }
  std::printf("wrote %s %s %s\n", (dir / "demo_trace.csv").c_str(),
              (dir / "demo_scene.json").c_str(), (dir / "demo_grid.svg").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masked-generative parallel decoding with contrastive attention guidance"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", trace_path, scene_path, svg_path, scene_file;
  int jobs = 1;
  std::string strategy = "uncage";
  std::uint64_t seed = 42;

  CLI::App* run_cmd = app.add_subcommand("run", "Execute the benchmark matrix from a JSON config");
  run_cmd->add_option("--config", config_path, "JSON config file")
      ->required()
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--scene-file", scene_file, "Replay a fixed scene JSON instead of sampling")
      ->check(CLI::ExistingFile);

  CLI::App* render_cmd = app.add_subcommand("render", "Render a trace CSV as a colored SVG grid");
  render_cmd->add_option("--trace", trace_path, "Score-trace CSV")->required()
      ->check(CLI::ExistingFile);
  render_cmd->add_option("--scene", scene_path, "Scene JSON")->required()
      ->check(CLI::ExistingFile);
  render_cmd->add_option("--out", svg_path, "Output SVG path")->required();

  CLI::App* demo_cmd = app.add_subcommand("demo", "One annotated desk-scale run");
  demo_cmd->add_option("--strategy", strategy, "random|confidence|baseline|halton|uncage");
  CLI::Option* seed_opt = demo_cmd->add_option("--seed", seed, "Run seed");
  demo_cmd->add_option("--out", out_dir, "Output directory");
  demo_cmd->add_option("--scene-file", scene_file, "Replay a fixed scene JSON instead of sampling")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(config_path, jobs, out_dir, scene_file);
    if (render_cmd->parsed()) return cmd_render(trace_path, scene_path, svg_path);
    if (demo_cmd->parsed()) {
      if (seed_opt->count() == 0)
        if (const char* env = std::getenv("UNCAGE_SEED")) seed = std::stoull(env);
      return cmd_demo(strategy, seed, out_dir, scene_file);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
