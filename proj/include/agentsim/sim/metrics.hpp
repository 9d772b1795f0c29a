#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace agentsim {

struct RequestMetrics {
  std::uint64_t request_id = 0;
  std::string cls;  // "long" | "short"
  double arrival = 0.0;
  double ttft = 0.0;
  double tpot = 0.0;
  double e2e = 0.0;
  std::size_t hit_blocks = 0;
  std::size_t need_blocks = 0;
  double ote = 0.0;  // 0 when speculation is off
  double shr = 0.0;
  std::size_t output_tokens = 0;
};

struct TimePoint {
  double t = 0.0;
  double value = 0.0;
};

struct MetricsReport {
  std::vector<RequestMetrics> requests;
  double makespan = 0.0;
  double qps = 0.0;
  double cache_hit_rate = 0.0;
  double mean_ttft = 0.0;
  double mean_tpot = 0.0;
  double mean_e2e = 0.0;
  double mean_ote = 0.0;
  double mean_shr = 0.0;
  std::vector<TimePoint> lambda_series;
  std::vector<TimePoint> queue_depth_series;

  void finalize();  // fills aggregates from the request list

  // One row per request, documented column order; byte-stable formatting.
  std::string to_csv() const;
  std::string to_json() const;
};

std::string format_double(double v);  // %.6f, the single formatting used everywhere

}  // namespace agentsim
