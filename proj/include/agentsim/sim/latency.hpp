#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "agentsim/sim/oracle.hpp"

namespace agentsim {

struct ToolLatency {
  double mean = 0.0;
  double jitter = 0.0;  // uniform +/- jitter, drawn deterministically
};

// All knobs in seconds. Defaults are calibrated to the magnitudes reported
// for the reference serving stack: ~0.1 ms/token uncached prefill (31k-token
// prefill ~= 3.1 s), 15.5 ms per decode forward pass, and the measured tool
// latencies (url_crawler ~= 10.37 s, document_qa ~= 17.55 s).
struct LatencyModel {
  double prefill_per_uncached_token = 1e-4;
  double decode_per_forward_pass = 0.0155;
  double draft_verify_overhead_per_token = 0.0003;
  double sam_build_per_token = 4.7e-5;   // offline index construction
  double distill_latency = 3.0;          // background summarization job
  double small_model_pass_factor = 0.35; // small model pass time / large pass time
  std::map<std::string, ToolLatency> tools = {
      {"url_crawler", {10.37, 1.5}},
      {"document_qa", {17.55, 2.0}},
  };

  void validate() const {
    if (prefill_per_uncached_token < 0 || decode_per_forward_pass < 0 ||
        draft_verify_overhead_per_token < 0 || sam_build_per_token < 0 ||
        distill_latency < 0 || small_model_pass_factor < 0)
      throw std::invalid_argument("latency constants must be nonnegative");
    for (const auto& [name, t] : tools)
      if (t.mean < 0 || t.jitter < 0)
        throw std::invalid_argument("tool latency must be nonnegative: " + name);
  }

  // Deterministic draw: mean + uniform(-jitter, jitter) keyed by (seed, call).
  double tool_call(const std::string& name, std::uint64_t seed, std::uint64_t call_index) const {
    auto it = tools.find(name);
    if (it == tools.end()) throw std::invalid_argument("unknown tool: " + name);
    double u = static_cast<double>(mix64(seed ^ mix64(call_index)) % 1000000ull) / 1000000.0;
    return it->second.mean + (2.0 * u - 1.0) * it->second.jitter;
  }
};

}  // namespace agentsim
