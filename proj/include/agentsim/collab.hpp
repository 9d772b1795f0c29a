#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace agentsim {

// Wire format of the structured self-evaluation block emitted after every
// think step:
//   ===PROGRESS===
//   <reason> ... </reason>
//   <value> TRUE </value>
//   ===END_PROGRESS===
struct ProgressBlock {
  std::string reason;
  bool value = false;
};

struct ProgressParse {
  bool ok = false;
  ProgressBlock block;
  std::string error;  // offending fragment / reason on failure
};

// Extracts the first PROGRESS block from `text`. Markers and tags must be
// present and <value> must be exactly TRUE or FALSE (case-sensitive,
// surrounding whitespace ignored).
ProgressParse parse_progress(const std::string& text);

enum class CollabMode { Large, Small };

struct ThinkOutput {
  std::string text;
  bool is_final = false;  // adapters signal finality explicitly
};

// Dual-model adapter pair driven by the controller. Simulation adapters are
// scripted and deterministic.
class ModelAdapter {
 public:
  virtual ~ModelAdapter() = default;
  virtual ThinkOutput think(const std::string& ctx) = 0;
  virtual ThinkOutput think_and_tools(const std::string& ctx) = 0;
  // Raw text that should contain a PROGRESS block.
  virtual std::string progress_check(const std::string& ctx) = 0;
};

struct CollabConfig {
  std::size_t warmup_large_steps = 2;       // K_L
  std::size_t max_large_steps_per_escalation = 3;  // B_L
  std::size_t max_total_steps = 64;
};

enum class StepKind { LargeThink, SmallThink, ProgressCheck, Escalate, DeEscalate, Final };

struct TraceEvent {
  StepKind kind;
  CollabMode mode;
  int progress = -1;      // 1 TRUE, 0 FALSE, -1 n/a
  bool malformed = false;
};

struct CollabTrace {
  std::vector<TraceEvent> events;
  std::size_t large_steps = 0;
  std::size_t small_steps = 0;
  std::size_t escalations = 0;
  std::size_t de_escalations = 0;
  std::size_t malformed_progress = 0;
};

enum class CollabStatus { Done, StepLimitExceeded };

struct CollabResult {
  CollabStatus status = CollabStatus::Done;
  std::string answer;
  CollabTrace trace;
};

// Runs the dual-model controller: a K_L-step large-model warm-up with early
// exit, then small-model execution with escalation to the large model on a
// FALSE progress signal and de-escalation on TRUE or after B_L consecutive
// large steps. A malformed PROGRESS block is treated as FALSE.
CollabResult run_collab(const std::string& query, ModelAdapter& large, ModelAdapter& small,
                        const CollabConfig& cfg);

}  // namespace agentsim
