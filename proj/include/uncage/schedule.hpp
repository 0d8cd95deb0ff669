#pragma once

#include <vector>

namespace uncage {

struct ScheduleConfig {
  int total_steps = 16;   // T
  int total_tokens = 256; // N, must equal H*W of the grid being decoded
  double temp_start = 1.0;
  double temp_end = 0.01;
};

// Number of still-masked tokens after step t under the cosine schedule:
// ceil(N * cos(pi*t / (2T))) for 0 < t < T, pinned to N at t=0 and 0 at t=T.
long long masked_after_step(int t, const ScheduleConfig& cfg);

// Per-step unmask counts k_1..k_T; differences of masked_after_step, so they
// are nonnegative and sum to N by construction.
std::vector<int> unmask_counts(const ScheduleConfig& cfg);

// Ordering-noise temperature, linear from temp_start at t=1 to temp_end at
// t=T. A single-step schedule uses temp_start.
double gumbel_temperature(int t, const ScheduleConfig& cfg);

}  // namespace uncage
