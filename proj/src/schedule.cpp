#include "uncage/schedule.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace uncage {

namespace {

void check_config(const ScheduleConfig& cfg) {
  if (cfg.total_steps < 1) throw std::invalid_argument("schedule: total_steps must be >= 1");
  if (cfg.total_tokens < 1) throw std::invalid_argument("schedule: total_tokens must be >= 1");
  if (!(cfg.temp_start >= cfg.temp_end) || !(cfg.temp_end > 0.0)) {
    throw std::invalid_argument("schedule: need temp_start >= temp_end > 0");
  }
}

}  // namespace

long long masked_after_step(int t, const ScheduleConfig& cfg) {
  check_config(cfg);
  if (t <= 0) return cfg.total_tokens;
  if (t >= cfg.total_steps) return 0;
  const double frac = std::cos(std::numbers::pi * t / (2.0 * cfg.total_steps));
  return static_cast<long long>(std::ceil(cfg.total_tokens * frac));
}

std::vector<int> unmask_counts(const ScheduleConfig& cfg) {
  check_config(cfg);
  std::vector<int> counts(cfg.total_steps);
  long long prev = cfg.total_tokens;
  for (int t = 1; t <= cfg.total_steps; ++t) {
    const long long cur = masked_after_step(t, cfg);
    counts[t - 1] = static_cast<int>(prev - cur);
    prev = cur;
  }
  return counts;
}

double gumbel_temperature(int t, const ScheduleConfig& cfg) {
  check_config(cfg);
  if (t < 1 || t > cfg.total_steps) {
    throw std::invalid_argument("schedule: step " + std::to_string(t) + " out of range");
  }
  if (cfg.total_steps == 1) return cfg.temp_start;
  const double frac = static_cast<double>(t - 1) / (cfg.total_steps - 1);
  return cfg.temp_start + (cfg.temp_end - cfg.temp_start) * frac;
}

}  // namespace uncage
