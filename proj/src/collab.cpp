#include "agentsim/collab.hpp"

namespace agentsim {

namespace {

constexpr const char* kBegin = "===PROGRESS===";
constexpr const char* kEnd = "===END_PROGRESS===";

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool extract_tag(const std::string& body, const std::string& tag, std::string& out) {
  std::string open = "<" + tag + ">";
  std::string close = "</" + tag + ">";
  std::size_t b = body.find(open);
  if (b == std::string::npos) return false;
  std::size_t e = body.find(close, b + open.size());
  if (e == std::string::npos) return false;
  out = body.substr(b + open.size(), e - (b + open.size()));
  return true;
}

}  // namespace

ProgressParse parse_progress(const std::string& text) {
  ProgressParse res;
  std::size_t b = text.find(kBegin);
  if (b == std::string::npos) {
    res.error = "missing ===PROGRESS=== marker";
    return res;
  }
  std::size_t e = text.find(kEnd, b);
  if (e == std::string::npos) {
    res.error = "missing ===END_PROGRESS=== marker";
    return res;
  }
  std::string body = text.substr(b + std::string(kBegin).size(), e - b - std::string(kBegin).size());
  std::string reason, value;
  if (!extract_tag(body, "reason", reason)) {
    res.error = "missing <reason> tag";
    return res;
  }
  if (!extract_tag(body, "value", value)) {
    res.error = "missing <value> tag";
    return res;
  }
  std::string v = trim(value);
  if (v != "TRUE" && v != "FALSE") {
    res.error = "invalid <value>: \"" + v + "\"";
    return res;
  }
  res.ok = true;
  res.block.reason = trim(reason);
  res.block.value = (v == "TRUE");
  return res;
}

namespace {

// Malformed progress is treated as FALSE: fail toward the larger model.
bool progress_value(ModelAdapter& m, const std::string& ctx, CollabMode mode, CollabTrace& trace) {
  ProgressParse p = parse_progress(m.progress_check(ctx));
  bool value = p.ok && p.block.value;
  trace.events.push_back({StepKind::ProgressCheck, mode, value ? 1 : 0, !p.ok});
  if (!p.ok) ++trace.malformed_progress;
  return value;
}

}  // namespace

CollabResult run_collab(const std::string& query, ModelAdapter& large, ModelAdapter& small,
                        const CollabConfig& cfg) {
  CollabResult res;
  std::string ctx = query;
  std::string final_answer;
  bool final_seen = false;
  std::size_t total_steps = 0;

  auto record_think = [&](CollabMode mode, const ThinkOutput& out) {
    ctx += "\n" + out.text;
    if (mode == CollabMode::Large) {
      ++res.trace.large_steps;
      res.trace.events.push_back({StepKind::LargeThink, mode, -1, false});
    } else {
      ++res.trace.small_steps;
      res.trace.events.push_back({StepKind::SmallThink, mode, -1, false});
    }
    if (out.is_final) {
      final_seen = true;
      final_answer = out.text;
    }
    ++total_steps;
  };

  // Phase 1: large-model warm-up.
  std::size_t large_steps_used = 0;
  while (large_steps_used < cfg.warmup_large_steps) {
    if (total_steps >= cfg.max_total_steps) {
      res.status = CollabStatus::StepLimitExceeded;
      return res;
    }
    ThinkOutput out = large.think(ctx);
    record_think(CollabMode::Large, out);
    bool prog = progress_value(large, ctx, CollabMode::Large, res.trace);
    ++large_steps_used;
    if (prog && final_seen) {
      res.trace.events.push_back({StepKind::Final, CollabMode::Large, -1, false});
      res.answer = final_answer;
      return res;
    }
  }

  // Phase 2: small-model execution with escalation.
  CollabMode mode = CollabMode::Small;
  while (!final_seen) {
    if (total_steps >= cfg.max_total_steps) {
      res.status = CollabStatus::StepLimitExceeded;
      return res;
    }
    if (mode == CollabMode::Small) {
      ThinkOutput out = small.think_and_tools(ctx);
      record_think(CollabMode::Small, out);
      bool prog = progress_value(small, ctx, CollabMode::Small, res.trace);
      if (!prog) {
        res.trace.events.push_back({StepKind::Escalate, CollabMode::Small, -1, false});
        ++res.trace.escalations;
        mode = CollabMode::Large;
        large_steps_used = 0;
      }
    } else {
      ThinkOutput out = large.think_and_tools(ctx);
      record_think(CollabMode::Large, out);
      bool prog = progress_value(large, ctx, CollabMode::Large, res.trace);
      ++large_steps_used;
      if (prog) {
        if (final_seen) break;
        res.trace.events.push_back({StepKind::DeEscalate, CollabMode::Large, -1, false});
        ++res.trace.de_escalations;
        mode = CollabMode::Small;
      } else if (large_steps_used >= cfg.max_large_steps_per_escalation) {
        res.trace.events.push_back({StepKind::DeEscalate, CollabMode::Large, -1, false});
        ++res.trace.de_escalations;
        mode = CollabMode::Small;
      }
    }
  }

  res.trace.events.push_back({StepKind::Final, mode, -1, false});
  res.answer = final_answer;
  return res;
}

}  // namespace agentsim
