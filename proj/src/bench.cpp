#include "uncage/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "uncage/rng.hpp"
#include "uncage/schedule.hpp"

namespace uncage {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void expect_fields(const json& j, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(),
                     [&](const char* a) { return key == a; }) == allowed.end())
      throw std::invalid_argument("invalid config field: " + key);
  }
}

void check_config(const BenchConfig& cfg) {
  if (cfg.strategies.empty()) throw std::invalid_argument("invalid config field: strategies (empty)");
  if (cfg.n_seeds < 1) throw std::invalid_argument("invalid config field: seeds (need at least 1)");
  if (cfg.wa_values.empty() || cfg.guidance_steps_values.empty() || cfg.modes.empty() ||
      cfg.blur_values.empty() || cfg.lambdas.empty())
    throw std::invalid_argument("invalid config field: empty sweep list");
  if (cfg.height < 1 || cfg.width < 1) throw std::invalid_argument("invalid config field: grid");
  if (cfg.steps < 1) throw std::invalid_argument("invalid config field: steps");
}

}  // namespace

BenchConfig bench_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  expect_fields(j, {"grid",       "n_objects",      "spacing",       "radius_factor", "noise_sigma",
                    "margin",     "attn_sigma",     "ambiguity_sigma", "ambiguity_gain", "anchor_weight", "anchor_radius",
                    "lambda",     "steps",          "temp_start",    "temp_end",
                    "strategies", "wa",             "guidance_steps", "modes",
                    "blur",       "guidance_sigma", "token_temperature", "seeds",
                    "base_seed",  "theta_min",      "theta_mix",     "model",
                    "results_csv", "summary_csv"});
  BenchConfig cfg;
  if (j.contains("grid")) {
    cfg.height = j.at("grid").at(0).get<int>();
    cfg.width = j.at("grid").at(1).get<int>();
  }
  cfg.n_objects = j.value("n_objects", cfg.n_objects);
  cfg.spacing = j.value("spacing", cfg.spacing);
  cfg.radius_factor = j.value("radius_factor", cfg.radius_factor);
  cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
  cfg.margin = j.value("margin", cfg.margin);
  cfg.attn_sigma = j.value("attn_sigma", cfg.attn_sigma);
  cfg.ambiguity_sigma = j.value("ambiguity_sigma", cfg.ambiguity_sigma);
  cfg.ambiguity_gain = j.value("ambiguity_gain", cfg.ambiguity_gain);
  cfg.anchor_weight = j.value("anchor_weight", cfg.anchor_weight);
  cfg.anchor_radius = j.value("anchor_radius", cfg.anchor_radius);
  if (j.contains("lambda")) cfg.lambdas = j.at("lambda").get<std::vector<double>>();
  cfg.steps = j.value("steps", cfg.steps);
  cfg.temp_start = j.value("temp_start", cfg.temp_start);
  cfg.temp_end = j.value("temp_end", cfg.temp_end);
  if (j.contains("strategies")) {
    cfg.strategies.clear();
    for (const json& s : j.at("strategies")) cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
  }
  if (j.contains("wa")) cfg.wa_values = j.at("wa").get<std::vector<double>>();
  if (j.contains("guidance_steps"))
    cfg.guidance_steps_values = j.at("guidance_steps").get<std::vector<int>>();
  if (j.contains("modes")) {
    cfg.modes.clear();
    for (const json& m : j.at("modes")) cfg.modes.push_back(parse_mode(m.get<std::string>()));
  }
  if (j.contains("blur")) cfg.blur_values = j.at("blur").get<std::vector<bool>>();
  cfg.guidance_sigma = j.value("guidance_sigma", cfg.guidance_sigma);
  cfg.token_temperature = j.value("token_temperature", cfg.token_temperature);
  cfg.n_seeds = j.value("seeds", cfg.n_seeds);
  cfg.base_seed = j.value("base_seed", cfg.base_seed);
  cfg.thresholds.min_coverage = j.value("theta_min", cfg.thresholds.min_coverage);
  cfg.thresholds.mixture = j.value("theta_mix", cfg.thresholds.mixture);
  if (j.contains("model")) {
    const json& m = j.at("model");
    expect_fields(m, {"blocks", "heads", "bandwidth_jitter", "slice_noise"});
    cfg.model.blocks = m.value("blocks", cfg.model.blocks);
    cfg.model.heads = m.value("heads", cfg.model.heads);
    cfg.model.bandwidth_jitter = m.value("bandwidth_jitter", cfg.model.bandwidth_jitter);
    cfg.model.slice_noise = m.value("slice_noise", cfg.model.slice_noise);
  }
  cfg.results_csv = j.value("results_csv", cfg.results_csv);
  cfg.summary_csv = j.value("summary_csv", cfg.summary_csv);

  if (const char* env = std::getenv("UNCAGE_SEED")) {
    try {
      std::size_t used = 0;
      cfg.base_seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument("UNCAGE_SEED must be an unsigned integer");
    }
  }
  check_config(cfg);
  return cfg;
}

BenchConfig load_bench_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return bench_config_from_json(buf.str());
}

std::vector<BenchCell> bench_cells(const BenchConfig& cfg) {
  std::vector<BenchCell> cells;
  for (Strategy s : cfg.strategies)
    for (double wa : cfg.wa_values)
      for (int gs : cfg.guidance_steps_values)
        for (GuidanceMode m : cfg.modes)
          for (bool blur : cfg.blur_values)
            for (double lambda : cfg.lambdas) cells.push_back({s, wa, gs, m, blur, lambda});
  return cells;
}

RunRow execute_run(const BenchConfig& cfg, const BenchCell& cell, std::uint64_t seed,
                   IntGrid* grid_out, RunTrace* trace_out, SceneSpec* scene_out,
                   PromptSpec* prompt_out) {
  SceneSpec scene;
  PromptSpec prompt;
  if (cfg.fixed_scene) {
    scene = cfg.fixed_scene->first;
    prompt = cfg.fixed_scene->second;
    scene.lambda = cell.lambda;
  } else {
    auto scene_rng = make_rng(seed, kStreamScene);
    std::tie(scene, prompt) =
        gen_scene(scene_rng, cfg.height, cfg.width, cfg.n_objects, cell.lambda, cfg.spacing);
    const double side = std::min(scene.height, scene.width);
    for (SceneEntity& e : scene.entities) e.radius = std::max(2.0, cfg.radius_factor * side);
    scene.noise_sigma = cfg.noise_sigma;
    scene.margin = cfg.margin;
    scene.attn_sigma = cfg.attn_sigma;
    scene.ambiguity_sigma = cfg.ambiguity_sigma;
    scene.ambiguity_gain = cfg.ambiguity_gain;
    scene.anchor_weight = cfg.anchor_weight;
    scene.anchor_radius = cfg.anchor_radius;
  }

  SyntheticModel model(scene, prompt, mix64(seed, kStreamModel), cfg.model);

  ScheduleConfig sched;
  sched.total_steps = cfg.steps;
  sched.total_tokens = scene.height * scene.width;
  sched.temp_start = cfg.temp_start;
  sched.temp_end = cfg.temp_end;

  StrategyConfig strat;
  strat.strategy = cell.strategy;
  strat.guidance.w_a = cell.wa;
  strat.guidance.guidance_steps = cell.guidance_steps;
  strat.guidance.sigma = cfg.guidance_sigma;
  strat.guidance.blur_enabled = cell.blur;
  strat.guidance.mode = cell.mode;
  strat.seed = seed;
  strat.token_temperature = cfg.token_temperature;

  const RunResult rr = run(model, prompt, sched, strat);
  const FidelityReport rep = evaluate_fidelity(rr.state.tokens, scene, cfg.thresholds);

  RunRow row;
  row.seed = seed;
  row.cell = cell;
  row.missing_rate = rep.missing_rate;
  row.leakage = rep.attribute_leakage;
  row.mixture = rep.object_mixture;
  row.steps = cfg.steps;
  row.height = scene.height;
  row.width = scene.width;
  if (grid_out) *grid_out = rr.state.tokens;
  if (trace_out) *trace_out = rr.trace;
  if (scene_out) *scene_out = scene;
  if (prompt_out) *prompt_out = prompt;
  return row;
}

Interval bootstrap_mean(const std::vector<double>& values, std::mt19937_64& rng, int resamples) {
  Interval iv;
  if (values.empty()) {
    iv.mean = iv.lo = iv.hi = std::numeric_limits<double>::quiet_NaN();
    return iv;
  }
  const std::size_t n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  iv.mean = sum / static_cast<double>(n);

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (double& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[pick(rng)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const auto at = [&](double q) {
    const double idx = q * static_cast<double>(means.size() - 1);
    return means[static_cast<std::size_t>(std::llround(idx))];
  };
  iv.lo = at(0.025);
  iv.hi = at(0.975);
  return iv;
}

BenchResult run_benchmark(const BenchConfig& cfg, int jobs) {
  check_config(cfg);
  if (jobs < 1) throw std::invalid_argument("run_benchmark: jobs must be at least 1");
  const std::vector<BenchCell> cells = bench_cells(cfg);
  const std::size_t total = cells.size() * static_cast<std::size_t>(cfg.n_seeds);

  std::vector<std::optional<RunRow>> slots(total);
  std::vector<std::string> errs(total);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      const BenchCell& cell = cells[i / static_cast<std::size_t>(cfg.n_seeds)];
      const std::uint64_t seed =
          cfg.base_seed + static_cast<std::uint64_t>(i % static_cast<std::size_t>(cfg.n_seeds));
      try {
        RunRow row = execute_run(cfg, cell, seed);
        row.run_id = static_cast<long long>(i);
        slots[i] = std::move(row);
      } catch (const std::exception& e) {
        errs[i] = "run " + std::to_string(i) + ": " + e.what();
      }
    }
  };

  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), total));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  BenchResult result;
  for (std::size_t i = 0; i < total; ++i) {
    if (slots[i]) result.rows.push_back(*slots[i]);
    if (!errs[i].empty()) result.errors.push_back(errs[i]);
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellSummary summary;
    summary.cell = cells[c];
    std::vector<double> missing, leakage, mixture;
    for (std::size_t s = 0; s < static_cast<std::size_t>(cfg.n_seeds); ++s) {
      const std::size_t i = c * static_cast<std::size_t>(cfg.n_seeds) + s;
      if (!slots[i]) continue;
      missing.push_back(slots[i]->missing_rate);
      leakage.push_back(slots[i]->leakage);
      mixture.push_back(slots[i]->mixture);
    }
    summary.runs = static_cast<int>(missing.size());
    auto rng = make_rng(mix64(cfg.base_seed, static_cast<std::uint64_t>(c)), kStreamBootstrap);
    summary.missing = bootstrap_mean(missing, rng);
    summary.leakage = bootstrap_mean(leakage, rng);
    summary.mixture = bootstrap_mean(mixture, rng);
    result.cells.push_back(summary);
  }
  return result;
}

void write_results_csv(const std::vector<RunRow>& rows, std::ostream& out) {
  out << "run_id,seed,strategy,wa,guidance_steps,mode,blur,lambda,missing_rate,leakage,mixture,"
         "steps,grid\n";
  for (const RunRow& r : rows) {
    out << r.run_id << ',' << r.seed << ',' << strategy_name(r.cell.strategy) << ','
        << fmt(r.cell.wa) << ',' << r.cell.guidance_steps << ',' << mode_name(r.cell.mode) << ','
        << (r.cell.blur ? 1 : 0) << ',' << fmt(r.cell.lambda) << ',' << fmt(r.missing_rate) << ','
        << fmt(r.leakage) << ',' << fmt(r.mixture) << ',' << r.steps << ',' << r.height << 'x'
        << r.width << '\n';
  }
}

void write_summary_csv(const std::vector<CellSummary>& cells, const MetricThresholds& thresholds,
                       std::ostream& out) {
  out << "strategy,wa,guidance_steps,mode,blur,lambda,runs,"
         "missing_mean,missing_lo,missing_hi,leakage_mean,leakage_lo,leakage_hi,"
         "mixture_mean,mixture_lo,mixture_hi,theta_min,theta_mix\n";
  for (const CellSummary& s : cells) {
    out << strategy_name(s.cell.strategy) << ',' << fmt(s.cell.wa) << ',' << s.cell.guidance_steps
        << ',' << mode_name(s.cell.mode) << ',' << (s.cell.blur ? 1 : 0) << ','
        << fmt(s.cell.lambda) << ',' << s.runs << ',' << fmt(s.missing.mean) << ','
        << fmt(s.missing.lo) << ',' << fmt(s.missing.hi) << ',' << fmt(s.leakage.mean) << ','
        << fmt(s.leakage.lo) << ',' << fmt(s.leakage.hi) << ',' << fmt(s.mixture.mean) << ','
        << fmt(s.mixture.lo) << ',' << fmt(s.mixture.hi) << ',' << fmt(thresholds.min_coverage)
        << ',' << fmt(thresholds.mixture) << '\n';
  }
}

namespace {

struct Rgb {
  int r, g, b;
};

Rgb hsl_to_rgb(double h, double s, double l) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0);
  const double c = (1.0 - std::abs(2.0 * l - 1.0)) * s;
  const double x = c * (1.0 - std::abs(std::fmod(h / 60.0, 2.0) - 1.0));
  const double m = l - c / 2.0;
  double r = 0, g = 0, b = 0;
  if (h < 60) {
    r = c; g = x;
  } else if (h < 120) {
    r = x; g = c;
  } else if (h < 180) {
    g = c; b = x;
  } else if (h < 240) {
    g = x; b = c;
  } else if (h < 300) {
    r = x; b = c;
  } else {
    r = c; b = x;
  }
  const auto chan = [&](double v) {
    return std::clamp(static_cast<int>(std::lround((v + m) * 255.0)), 0, 255);
  };
  return {chan(r), chan(g), chan(b)};
}

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

}  // namespace

void render_grid_svg(const IntGrid& grid, const SceneSpec& scene, std::ostream& out) {
  if (grid.rows() != scene.height || grid.cols() != scene.width)
    throw std::invalid_argument("render_grid_svg: grid does not match scene");
  const int n = static_cast<int>(scene.entities.size());
  const int cell = 24;
  const int w = scene.width * cell;
  const int h = scene.height * cell;
  const auto hue = [&](int entity) { return n == 0 ? 0.0 : 360.0 * entity / n; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" viewBox=\"0 0 " << w << ' ' << h << "\">\n";
  for (int r = 0; r < scene.height; ++r)
    for (int c = 0; c < scene.width; ++c) {
      const int token = grid(r, c);
      if (token < 0 || token >= scene.vocab_size())
        throw std::invalid_argument("render_grid_svg: token id outside scene vocabulary");
      std::string fill = "#f7f6f2";
      if (token > 0) {
        const int entity = scene.token_entity(token);
        fill = scene.is_wrong_variant(token) ? hex(hsl_to_rgb(hue(entity), 0.55, 0.76))
                                             : hex(hsl_to_rgb(hue(entity), 0.62, 0.50));
      }
      out << "  <rect x=\"" << c * cell << "\" y=\"" << r * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"" << fill
          << "\" stroke=\"#ffffff\" stroke-width=\"1\"/>\n";
    }
  for (int e = 0; e < n; ++e) {
    const SceneEntity& ent = scene.entities[static_cast<std::size_t>(e)];
    out << "  <circle cx=\"" << fmt((ent.center_col + 0.5) * cell) << "\" cy=\""
        << fmt((ent.center_row + 0.5) * cell) << "\" r=\"" << fmt(ent.radius * cell)
        << "\" fill=\"none\" stroke=\"" << hex(hsl_to_rgb(hue(e), 0.70, 0.30))
        << "\" stroke-width=\"2.5\" stroke-dasharray=\"6 4\"/>\n";
  }
  out << "</svg>\n";
}

IntGrid grid_from_trace_csv(std::istream& in, int height, int width) {
  if (height < 1 || width < 1) throw std::invalid_argument("grid_from_trace_csv: empty grid");
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,row,col,token_id", 0) != 0)
    throw std::invalid_argument("grid_from_trace_csv: not a score-trace CSV");
  IntGrid grid = IntGrid::Zero(height, width);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f0, f1, f2, f3;
    if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') || !std::getline(ss, f2, ',') ||
        !std::getline(ss, f3, ','))
      throw std::invalid_argument("grid_from_trace_csv: malformed row: " + line);
    const int r = std::stoi(f1);
    const int c = std::stoi(f2);
    const int token = std::stoi(f3);
    if (r < 0 || r >= height || c < 0 || c >= width)
      throw std::invalid_argument("grid_from_trace_csv: position outside grid: " + line);
    grid(r, c) = token;
  }
  return grid;
}

}  // namespace uncage
