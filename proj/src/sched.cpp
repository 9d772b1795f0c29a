#include "agentsim/sched.hpp"

#include <algorithm>
#include <cmath>

namespace agentsim {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double update_lambda(SchedulerState& state, std::span<const QueueEntry> queue,
                     std::size_t free_blocks, const SchedulerParams& p) {
  double h = 0.0, d = 0.0;
  for (const QueueEntry& e : queue) {
    h += static_cast<double>(e.hit);
    d += static_cast<double>(e.need);
  }
  double u = std::max(0.0, static_cast<double>(free_blocks) - h);
  double z = d / (u + p.epsilon);
  double lambda = p.lambda_max * logistic(p.k * (z - 1.0));
  if (p.pi_correction) {
    double gap = d - u;
    state.integral += gap;
    lambda += std::clamp(p.k_p * gap + p.k_i * state.integral, -p.lambda_max, p.lambda_max);
    lambda = std::clamp(lambda, 0.0, p.lambda_max);
  }
  state.lambda = lambda;
  return lambda;
}

double score(const QueueEntry& e, double lambda, const SchedulerParams& p) {
  double need_tok = static_cast<double>(e.prompt_tok) / static_cast<double>(p.tpb);
  double sjf_mix = std::clamp(1.0 - lambda / p.lambda_max, 0.0, 1.0);
  double need_eff = sjf_mix * need_tok + (1.0 - sjf_mix) * static_cast<double>(e.need);
  return p.a * static_cast<double>(e.hit) - (p.b + lambda) * need_eff + p.c * e.wait;
}

namespace {

template <typename Better>
std::vector<std::size_t> ordered_indices(std::span<const QueueEntry> queue, Better better) {
  std::vector<std::size_t> idx(queue.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), better);
  return idx;
}

std::optional<RequestId> first_feasible(std::span<const QueueEntry> queue,
                                        const std::vector<std::size_t>& order,
                                        const FeasibilityFn& feasible) {
  for (std::size_t i : order) {
    if (!feasible || feasible(queue[i])) return queue[i].id;
  }
  return std::nullopt;
}

}  // namespace

std::vector<RequestId> score_order(std::span<const QueueEntry> queue, double lambda,
                                   const SchedulerParams& p) {
  std::vector<double> s(queue.size());
  for (std::size_t i = 0; i < queue.size(); ++i) s[i] = score(queue[i], lambda, p);
  auto order = ordered_indices(queue, [&](std::size_t x, std::size_t y) {
    if (s[x] != s[y]) return s[x] > s[y];
    return queue[x].arrival < queue[y].arrival;
  });
  std::vector<RequestId> ids;
  ids.reserve(order.size());
  for (std::size_t i : order) ids.push_back(queue[i].id);
  return ids;
}

std::vector<RequestId> sjf_order(std::span<const QueueEntry> queue) {
  auto order = ordered_indices(queue, [&](std::size_t x, std::size_t y) {
    if (queue[x].prompt_tok != queue[y].prompt_tok)
      return queue[x].prompt_tok < queue[y].prompt_tok;
    return queue[x].arrival < queue[y].arrival;
  });
  std::vector<RequestId> ids;
  ids.reserve(order.size());
  for (std::size_t i : order) ids.push_back(queue[i].id);
  return ids;
}

std::optional<RequestId> select(std::span<const QueueEntry> queue, const SchedulerState& state,
                                const SchedulerParams& p, const FeasibilityFn& feasible) {
  std::vector<double> s(queue.size());
  for (std::size_t i = 0; i < queue.size(); ++i) s[i] = score(queue[i], state.lambda, p);
  auto order = ordered_indices(queue, [&](std::size_t x, std::size_t y) {
    if (s[x] != s[y]) return s[x] > s[y];
    return queue[x].arrival < queue[y].arrival;
  });
  return first_feasible(queue, order, feasible);
}

std::optional<RequestId> baseline_fcfs(std::span<const QueueEntry> queue,
                                       const FeasibilityFn& feasible) {
  auto order = ordered_indices(
      queue, [&](std::size_t x, std::size_t y) { return queue[x].arrival < queue[y].arrival; });
  return first_feasible(queue, order, feasible);
}

std::optional<RequestId> baseline_sjf(std::span<const QueueEntry> queue,
                                      const FeasibilityFn& feasible) {
  auto order = ordered_indices(queue, [&](std::size_t x, std::size_t y) {
    if (queue[x].prompt_tok != queue[y].prompt_tok)
      return queue[x].prompt_tok < queue[y].prompt_tok;
    return queue[x].arrival < queue[y].arrival;
  });
  return first_feasible(queue, order, feasible);
}

}  // namespace agentsim
