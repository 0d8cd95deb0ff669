#include "uncage/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "uncage/halton.hpp"
#include "uncage/rng.hpp"

namespace uncage {
namespace {

double elapsed_ns(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - from)
      .count();
}

FieldSummary summarize_masked(const Field& field, const GridState& state) {
  FieldSummary s;
  if (field.size() == 0) return s;
  double lo = 0.0, hi = 0.0, sum = 0.0;
  long long count = 0;
  for (int r = 0; r < state.height(); ++r)
    for (int c = 0; c < state.width(); ++c) {
      if (!state.masked(r, c)) continue;
      const double v = field(r, c);
      if (count == 0 || v < lo) lo = v;
      if (count == 0 || v > hi) hi = v;
      sum += v;
      ++count;
    }
  if (count == 0) return s;
  s.min = lo;
  s.max = hi;
  s.mean = sum / static_cast<double>(count);
  s.valid = true;
  return s;
}

double field_at(const Field& field, const Position& p) {
  if (field.size() == 0) return std::numeric_limits<double>::quiet_NaN();
  return field(p.row, p.col);
}

void append_double(std::string& line, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

}  // namespace

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Random: return "random";
    case Strategy::Confidence: return "confidence";
    case Strategy::Baseline: return "baseline";
    case Strategy::Halton: return "halton";
    case Strategy::Uncage: return "uncage";
  }
  throw std::invalid_argument("strategy_name: unknown strategy");
}

Strategy parse_strategy(const std::string& name) {
  if (name == "random") return Strategy::Random;
  if (name == "confidence") return Strategy::Confidence;
  if (name == "baseline") return Strategy::Baseline;
  if (name == "halton") return Strategy::Halton;
  if (name == "uncage") return Strategy::Uncage;
  throw std::invalid_argument("unknown strategy: " + name);
}

std::string mode_name(GuidanceMode m) {
  switch (m) {
    case GuidanceMode::Contrastive: return "contrastive";
    case GuidanceMode::PositiveOnly: return "positive";
    case GuidanceMode::NegativeOnly: return "negative";
  }
  throw std::invalid_argument("mode_name: unknown mode");
}

GuidanceMode parse_mode(const std::string& name) {
  if (name == "contrastive") return GuidanceMode::Contrastive;
  if (name == "positive") return GuidanceMode::PositiveOnly;
  if (name == "negative") return GuidanceMode::NegativeOnly;
  throw std::invalid_argument("unknown guidance mode: " + name);
}

IntGrid sample_tokens(const Logits& logits, const GridState& state, double token_temperature,
                      std::mt19937_64& rng, long long* draws) {
  const int h = state.height();
  const int w = state.width();
  if (logits.rows() != static_cast<Eigen::Index>(h) * w)
    throw std::invalid_argument("sample_tokens: logits rows do not match grid");
  const Eigen::Index vocab = logits.cols();
  if (vocab <= 0) throw std::invalid_argument("sample_tokens: empty vocabulary");
  if (token_temperature < 0.0)
    throw std::invalid_argument("sample_tokens: negative temperature");

  IntGrid out = state.tokens;
  std::vector<double> probs(static_cast<std::size_t>(vocab));
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (!state.masked(r, c)) continue;
      const Eigen::Index p = static_cast<Eigen::Index>(r) * w + c;
      if (token_temperature == 0.0) {
        Eigen::Index best = 0;
        for (Eigen::Index v = 1; v < vocab; ++v)
          if (logits(p, v) > logits(p, best)) best = v;
        out(r, c) = static_cast<int>(best);
        continue;
      }
      const double top = logits.row(p).maxCoeff();
      double total = 0.0;
      for (Eigen::Index v = 0; v < vocab; ++v) {
        probs[static_cast<std::size_t>(v)] = std::exp((logits(p, v) - top) / token_temperature);
        total += probs[static_cast<std::size_t>(v)];
      }
      const double u = uniform_open01(rng) * total;
      if (draws) ++*draws;
      double cum = 0.0;
      Eigen::Index pick = vocab - 1;
      for (Eigen::Index v = 0; v < vocab; ++v) {
        cum += probs[static_cast<std::size_t>(v)];
        if (u <= cum) {
          pick = v;
          break;
        }
      }
      out(r, c) = static_cast<int>(pick);
    }
  return out;
}

RunResult run(ModelInterface& model, const PromptSpec& spec, const ScheduleConfig& sched,
              const StrategyConfig& strat, const TraceOptions& topt) {
  const int h = model.height();
  const int w = model.width();
  if (sched.total_tokens != h * w)
    throw std::invalid_argument("run: schedule token count does not match the grid");

  const std::vector<int> counts = unmask_counts(sched);
  GridState state = GridState::initial(h, w);
  auto rng_token = make_rng(strat.seed, kStreamTokens);
  auto rng_gumbel = make_rng(strat.seed, kStreamGumbel);

  HaltonOrder scan;
  std::size_t scan_pos = 0;
  if (strat.strategy == Strategy::Halton) scan = halton_order(h, w);

  RunResult result;
  result.trace.height = h;
  result.trace.width = w;
  result.trace.steps.reserve(counts.size());

  for (int t = 1; t <= sched.total_steps; ++t) {
    StepRecord rec;
    rec.step = t;
    rec.temperature = gumbel_temperature(t, sched);
    // The schedule guarantees the counts fit; clamp anyway so a hand-built
    // config degrades to "unmask whatever is left" instead of a throw.
    rec.unmask_count = static_cast<int>(
        std::min<long long>(counts[static_cast<std::size_t>(t - 1)], state.masked_count()));

    const auto model_start = std::chrono::steady_clock::now();
    Prediction pred = model.query(spec, state, t);
    rec.model_ns = elapsed_ns(model_start);
    rec.model_queries = 1;

    const IntGrid sampled =
        sample_tokens(pred.logits, state, strat.token_temperature, rng_token, &rec.token_draws);

    Field f_c, f_g, f_a, f;
    switch (strat.strategy) {
      case Strategy::Halton:
        break;
      case Strategy::Random:
        f_g = gumbel_noise(h, w, rec.temperature, rng_gumbel);
        rec.gumbel_draws += static_cast<long long>(h) * w;
        f = state.masked.select(f_g, Field::Constant(h, w, kNegInf));
        break;
      case Strategy::Confidence:
        f_c = confidence_scores(pred.logits, sampled, state);
        f = f_c;
        break;
      case Strategy::Baseline:
        f_c = confidence_scores(pred.logits, sampled, state);
        f_g = gumbel_noise(h, w, rec.temperature, rng_gumbel);
        rec.gumbel_draws += static_cast<long long>(h) * w;
        f = combine_scores(f_c, f_g);
        break;
      case Strategy::Uncage: {
        f_c = confidence_scores(pred.logits, sampled, state);
        // Ordering noise is drawn before any guidance work so that the
        // noise stream stays aligned with an unguided run of the same seed.
        f_g = gumbel_noise(h, w, rec.temperature, rng_gumbel);
        rec.gumbel_draws += static_cast<long long>(h) * w;
        const GuidanceConfig& g = strat.guidance;
        const bool active = g.w_a != 0.0 && t <= g.guidance_steps;
        if (active) {
          const auto agg_start = std::chrono::steady_clock::now();
          AttentionMaps maps = aggregate_attention(pred.attention, t);
          rec.aggregate_ns = elapsed_ns(agg_start);

          const auto guide_start = std::chrono::steady_clock::now();
          if (g.blur_enabled)
            for (auto& [id, m] : maps.maps) m = gaussian_blur(m, g.sigma);
          f_a = contrastive_scores(maps, spec, g.mode);
          f = combine_scores(f_c, f_g, f_a, g.w_a, t, g.guidance_steps);
          rec.guidance_ns = elapsed_ns(guide_start);
        } else {
          f = combine_scores(f_c, f_g);
        }
        break;
      }
    }

    rec.fc = summarize_masked(f_c, state);
    rec.fg = summarize_masked(f_g, state);
    rec.fa = summarize_masked(f_a, state);
    rec.f = summarize_masked(f, state);
    if (topt.capture_fields) {
      if (f_c.size()) rec.field_fc = f_c;
      if (f_g.size()) rec.field_fg = f_g;
      if (f_a.size()) rec.field_fa = f_a;
      if (f.size()) rec.field_f = f;
    }

    std::vector<Position> chosen;
    if (strat.strategy == Strategy::Halton) {
      while (static_cast<int>(chosen.size()) < rec.unmask_count && scan_pos < scan.order.size()) {
        const Position p = scan.order[scan_pos++];
        if (state.masked(p.row, p.col)) chosen.push_back(p);
      }
      if (static_cast<int>(chosen.size()) < rec.unmask_count)
        throw std::logic_error("run: scan order exhausted before the schedule");
    } else {
      chosen = select_topk(f, state, rec.unmask_count);
    }

    for (const Position& p : chosen) {
      UnmaskEvent ev;
      ev.row = p.row;
      ev.col = p.col;
      ev.token_id = sampled(p.row, p.col);
      ev.f_c = field_at(f_c, p);
      ev.f_g = field_at(f_g, p);
      ev.f_a = field_at(f_a, p);
      ev.f = field_at(f, p);
      rec.events.push_back(ev);
      state.tokens(p.row, p.col) = ev.token_id;
      state.masked(p.row, p.col) = false;
    }
    state.step = t;
    result.trace.steps.push_back(std::move(rec));
    if (state.masked_count() == 0 && t < sched.total_steps) break;
  }

  if (state.masked_count() != 0) throw std::logic_error("run: positions left masked after T steps");
  result.state = std::move(state);
  return result;
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << "step,row,col,token_id,f_c,f_g,f_a,f\n";
  for (const StepRecord& rec : trace.steps)
    for (const UnmaskEvent& ev : rec.events) {
      std::string line;
      line += std::to_string(rec.step);
      line += ',';
      line += std::to_string(ev.row);
      line += ',';
      line += std::to_string(ev.col);
      line += ',';
      line += std::to_string(ev.token_id);
      line += ',';
      append_double(line, ev.f_c);
      line += ',';
      append_double(line, ev.f_g);
      line += ',';
      append_double(line, ev.f_a);
      line += ',';
      append_double(line, ev.f);
      line += '\n';
      out << line;
    }
}

}  // namespace uncage
