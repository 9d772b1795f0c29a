#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "agentsim/kvcache.hpp"

namespace agentsim {

struct SchedulerParams {
  double lambda_max = 2.0;
  double k = 4.0;        // sigmoid steepness
  double epsilon = 1.0;  // blocks, denominator guard
  double a = 1.0;        // hit reward
  double b = 0.5;        // base need penalty
  double c = 0.05;       // wait reward per second
  std::size_t tpb = 16;

  // PI correction hook; off by default (the algorithm's stated parameter list
  // includes these but its steps never use them).
  bool pi_correction = false;
  double k_p = 0.0;
  double k_i = 0.0;
};

struct SchedulerState {
  double lambda = 0.0;
  double integral = 0.0;
};

struct QueueEntry {
  RequestId id = 0;
  std::size_t prompt_tok = 0;
  std::size_t hit = 0;
  std::size_t need = 0;
  double wait = 0.0;           // seconds since arrival
  std::uint64_t arrival = 0;   // arrival order index
};

double logistic(double x);

// Alg. step 2: H = sum(hit), U = max(0, N - H), D = sum(need),
// lambda = lambda_max * sigma(k * (D / (U + eps) - 1)).
double update_lambda(SchedulerState& state, std::span<const QueueEntry> queue,
                     std::size_t free_blocks, const SchedulerParams& p);

// Blended SJF / KV-aware score:
//   need_eff = sjf_mix * prompt_tok/tpb + (1 - sjf_mix) * need,
//   score    = a*hit - (b + lambda)*need_eff + c*wait,
// with sjf_mix = clamp(1 - lambda/lambda_max, 0, 1).
double score(const QueueEntry& e, double lambda, const SchedulerParams& p);

using FeasibilityFn = std::function<bool(const QueueEntry&)>;

// Highest score first (ties: older arrival); returns the first feasible entry.
std::optional<RequestId> select(std::span<const QueueEntry> queue, const SchedulerState& state,
                                const SchedulerParams& p, const FeasibilityFn& feasible);

std::optional<RequestId> baseline_fcfs(std::span<const QueueEntry> queue,
                                       const FeasibilityFn& feasible);
std::optional<RequestId> baseline_sjf(std::span<const QueueEntry> queue,
                                      const FeasibilityFn& feasible);

// Candidate order produced by the hybrid policy (exposed for property tests).
std::vector<RequestId> score_order(std::span<const QueueEntry> queue, double lambda,
                                   const SchedulerParams& p);
std::vector<RequestId> sjf_order(std::span<const QueueEntry> queue);

}  // namespace agentsim
