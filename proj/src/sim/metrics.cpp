#include "agentsim/sim/metrics.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

namespace agentsim {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void MetricsReport::finalize() {
  double ttft = 0, tpot = 0, e2e = 0, ote_sum = 0, shr_sum = 0;
  std::size_t ote_n = 0;
  for (const auto& r : requests) {
    ttft += r.ttft;
    tpot += r.tpot;
    e2e += r.e2e;
    if (r.ote > 0) {
      ote_sum += r.ote;
      shr_sum += r.shr;
      ++ote_n;
    }
  }
  std::size_t n = requests.size();
  mean_ttft = n ? ttft / static_cast<double>(n) : 0.0;
  mean_tpot = n ? tpot / static_cast<double>(n) : 0.0;
  mean_e2e = n ? e2e / static_cast<double>(n) : 0.0;
  mean_ote = ote_n ? ote_sum / static_cast<double>(ote_n) : 0.0;
  mean_shr = ote_n ? shr_sum / static_cast<double>(ote_n) : 0.0;
  qps = makespan > 0 ? static_cast<double>(n) / makespan : 0.0;
}

std::string MetricsReport::to_csv() const {
  std::string out = "request_id,class,arrival,ttft,tpot,e2e,hit_blocks,need_blocks,ote,shr\n";
  for (const auto& r : requests) {
    out += std::to_string(r.request_id);
    out += ',';
    out += r.cls;
    out += ',';
    out += format_double(r.arrival);
    out += ',';
    out += format_double(r.ttft);
    out += ',';
    out += format_double(r.tpot);
    out += ',';
    out += format_double(r.e2e);
    out += ',';
    out += std::to_string(r.hit_blocks);
    out += ',';
    out += std::to_string(r.need_blocks);
    out += ',';
    out += format_double(r.ote);
    out += ',';
    out += format_double(r.shr);
    out += '\n';
  }
  return out;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["makespan"] = format_double(makespan);
  j["qps"] = format_double(qps);
  j["cache_hit_rate"] = format_double(cache_hit_rate);
  j["mean_ttft"] = format_double(mean_ttft);
  j["mean_tpot"] = format_double(mean_tpot);
  j["mean_e2e"] = format_double(mean_e2e);
  j["mean_ote"] = format_double(mean_ote);
  j["mean_shr"] = format_double(mean_shr);
  j["requests"] = nlohmann::ordered_json::array();
  for (const auto& r : requests) {
    nlohmann::ordered_json q;
    q["request_id"] = r.request_id;
    q["class"] = r.cls;
    q["arrival"] = format_double(r.arrival);
    q["ttft"] = format_double(r.ttft);
    q["tpot"] = format_double(r.tpot);
    q["e2e"] = format_double(r.e2e);
    q["hit_blocks"] = r.hit_blocks;
    q["need_blocks"] = r.need_blocks;
    q["ote"] = format_double(r.ote);
    q["shr"] = format_double(r.shr);
    q["output_tokens"] = r.output_tokens;
    j["requests"].push_back(std::move(q));
  }
  auto series = [](const std::vector<TimePoint>& s) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : s)
      arr.push_back({{"t", format_double(p.t)}, {"value", format_double(p.value)}});
    return arr;
  };
  j["lambda_series"] = series(lambda_series);
  j["queue_depth_series"] = series(queue_depth_series);
  return j.dump(2) + "\n";
}

}  // namespace agentsim
