#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "uncage/guidance.hpp"
#include "uncage/prompt.hpp"
#include "uncage/schedule.hpp"
#include "uncage/scoring.hpp"
#include "uncage/types.hpp"

namespace uncage {

struct Prediction {
  Logits logits;            // (H*W) x V, row-major positions
  RawAttention attention;   // per (block, head) slices of per-subject maps
};

// Behavioral contract for the model being decoded: one parallel prediction
// pass per step, deterministic given (spec, state, t) and the model's seed.
struct ModelInterface {
  virtual ~ModelInterface() = default;
  virtual int height() const = 0;
  virtual int width() const = 0;
  virtual int vocab_size() const = 0;
  virtual Prediction query(const PromptSpec& spec, const GridState& state, int t) = 0;
};

enum class Strategy { Random, Confidence, Baseline, Halton, Uncage };

std::string strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

std::string mode_name(GuidanceMode m);
GuidanceMode parse_mode(const std::string& name);

struct StrategyConfig {
  Strategy strategy = Strategy::Baseline;
  GuidanceConfig guidance;  // consulted only when strategy == Uncage
  std::uint64_t seed = 0;
  // Temperature for committing token ids; 0 switches to argmax. The
  // ordering noise temperature is annealed separately by the schedule.
  double token_temperature = 0.0;
};

struct FieldSummary {
  double min = std::numeric_limits<double>::quiet_NaN();
  double max = std::numeric_limits<double>::quiet_NaN();
  double mean = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;
};

struct UnmaskEvent {
  int row = 0;
  int col = 0;
  int token_id = 0;
  double f_c, f_g, f_a, f;  // NaN where the strategy did not compute a term
};

struct StepRecord {
  int step = 0;
  double temperature = 0.0;
  int unmask_count = 0;
  std::vector<UnmaskEvent> events;
  FieldSummary fc, fg, fa, f;  // over positions still masked at scoring time
  long long model_queries = 0;
  long long gumbel_draws = 0;
  long long token_draws = 0;
  double model_ns = 0.0;
  double aggregate_ns = 0.0;
  double guidance_ns = 0.0;  // blur + contrastive scores + combine
  // Populated only when TraceOptions::capture_fields is set.
  std::optional<Field> field_fc, field_fg, field_fa, field_f;
};

struct RunTrace {
  int height = 0;
  int width = 0;
  std::vector<StepRecord> steps;
};

struct TraceOptions {
  bool capture_fields = false;
};

struct RunResult {
  GridState state;
  RunTrace trace;
};

// The parallel-decoding loop: query the model, score masked positions per
// the configured strategy, unmask the top k_t of them, repeat for T steps.
RunResult run(ModelInterface& model, const PromptSpec& spec, const ScheduleConfig& sched,
              const StrategyConfig& strat, const TraceOptions& topt = {});

// Categorical draw from softmax(logits / temperature) at masked positions;
// temperature 0 takes the argmax. Committed positions keep their token.
IntGrid sample_tokens(const Logits& logits, const GridState& state, double token_temperature,
                      std::mt19937_64& rng, long long* draws = nullptr);

void write_trace_csv(const RunTrace& trace, std::ostream& out);

}  // namespace uncage
