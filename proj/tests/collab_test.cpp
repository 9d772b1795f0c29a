#include <deque>

#include "agentsim/collab.hpp"
#include "doctest.h"

using namespace agentsim;

namespace {

std::string progress_text(bool value) {
  return std::string("analysis...\n===PROGRESS===\n<reason> step check </reason>\n<value> ") +
         (value ? "TRUE" : "FALSE") + " </value>\n===END_PROGRESS===\ntrailing";
}

// Scripted adapter: consumes per-call scripts for think and progress outputs.
class ScriptedAdapter : public ModelAdapter {
 public:
  struct Step {
    bool is_final = false;
  };

  ScriptedAdapter(std::vector<Step> thinks, std::vector<std::string> progress)
      : thinks_(thinks.begin(), thinks.end()), progress_(progress.begin(), progress.end()) {}

  // Endless variant: same progress text every time, final after `final_after`
  // think calls (0 = never).
  ScriptedAdapter(std::string repeated_progress, std::size_t final_after)
      : repeated_progress_(std::move(repeated_progress)), final_after_(final_after) {}

  ThinkOutput think(const std::string&) override { return next_think(); }
  ThinkOutput think_and_tools(const std::string&) override { return next_think(); }
  std::string progress_check(const std::string&) override {
    if (!progress_.empty()) {
      std::string p = progress_.front();
      progress_.pop_front();
      return p;
    }
    return repeated_progress_;
  }

  std::size_t think_calls() const { return calls_; }

 private:
  ThinkOutput next_think() {
    ++calls_;
    if (!thinks_.empty()) {
      Step s = thinks_.front();
      thinks_.pop_front();
      return {"step " + std::to_string(calls_), s.is_final};
    }
    bool fin = final_after_ > 0 && calls_ >= final_after_;
    return {"step " + std::to_string(calls_), fin};
  }

  std::deque<Step> thinks_;
  std::deque<std::string> progress_;
  std::string repeated_progress_;
  std::size_t final_after_ = 0;
  std::size_t calls_ = 0;
};

}  // namespace

TEST_CASE("parse_progress accepts the canonical block") {
  auto p = parse_progress(progress_text(true));
  REQUIRE(p.ok);
  CHECK(p.block.value);
  CHECK(p.block.reason == "step check");

  auto f = parse_progress(progress_text(false));
  REQUIRE(f.ok);
  CHECK_FALSE(f.block.value);
}

TEST_CASE("parse_progress rejects malformed blocks") {
  CHECK_FALSE(parse_progress("no block here").ok);
  CHECK_FALSE(parse_progress("===PROGRESS===\n<reason>x</reason>\n<value>TRUE</value>").ok);
  CHECK_FALSE(
      parse_progress("===PROGRESS===\n<value>TRUE</value>\n===END_PROGRESS===").ok);
  CHECK_FALSE(
      parse_progress("===PROGRESS===\n<reason>x</reason>\n===END_PROGRESS===").ok);

  auto bad = parse_progress(
      "===PROGRESS===\n<reason>x</reason>\n<value> maybe </value>\n===END_PROGRESS===");
  CHECK_FALSE(bad.ok);
  CHECK(bad.error.find("maybe") != std::string::npos);

  // case-sensitive value
  CHECK_FALSE(parse_progress(
                  "===PROGRESS===\n<reason>x</reason>\n<value>true</value>\n===END_PROGRESS===")
                  .ok);
}

TEST_CASE("small model making progress keeps large usage at the warm-up budget") {
  CollabConfig cfg{/*K_L=*/2, /*B_L=*/3, /*max=*/64};
  ScriptedAdapter large(progress_text(true), /*final_after=*/0);
  ScriptedAdapter small(progress_text(true), /*final_after=*/5);  // final on its 5th step

  auto res = run_collab("q", large, small, cfg);
  CHECK(res.status == CollabStatus::Done);
  CHECK(res.trace.large_steps == cfg.warmup_large_steps);
  CHECK(res.trace.small_steps == 5);
  CHECK(res.trace.escalations == 0);
}

TEST_CASE("large model finishing in phase 1 skips the small model entirely") {
  CollabConfig cfg{3, 3, 64};
  ScriptedAdapter large(progress_text(true), /*final_after=*/1);
  ScriptedAdapter small(progress_text(true), 0);
  auto res = run_collab("q", large, small, cfg);
  CHECK(res.status == CollabStatus::Done);
  CHECK(res.trace.large_steps == 1);
  CHECK(res.trace.small_steps == 0);
  CHECK(res.answer == "step 1");
}

TEST_CASE("always-FALSE scripts alternate small with B_L-bounded large bursts") {
  // Cycle: small(1) -> large(B_L). With K_L=2, B_L=3, 4 full cycles fit in
  // max_total_steps = 2 + 4*(1+3) = 18.
  CollabConfig cfg{2, 3, 18};
  ScriptedAdapter large(progress_text(false), 0);
  ScriptedAdapter small(progress_text(false), 0);
  auto res = run_collab("q", large, small, cfg);
  CHECK(res.status == CollabStatus::StepLimitExceeded);
  CHECK(res.trace.escalations == 4);
  CHECK(res.trace.large_steps == cfg.warmup_large_steps +
                                     cfg.max_large_steps_per_escalation * res.trace.escalations);
  CHECK(res.trace.small_steps == 4);
  // Budget bound holds exactly.
  CHECK(res.trace.large_steps <= cfg.warmup_large_steps +
                                     cfg.max_large_steps_per_escalation * res.trace.escalations);
}

TEST_CASE("escalation only happens from small mode on FALSE") {
  CollabConfig cfg{1, 2, 64};
  // small: TRUE, FALSE -> escalate; large phase2: TRUE -> de-escalate; small
  // then finishes.
  ScriptedAdapter large({{false}, {false}},
                        {progress_text(true), progress_text(true)});
  ScriptedAdapter small({{false}, {false}, {true}},
                        {progress_text(true), progress_text(false), progress_text(true)});
  auto res = run_collab("q", large, small, cfg);
  CHECK(res.status == CollabStatus::Done);
  CHECK(res.trace.escalations == 1);
  CHECK(res.trace.de_escalations == 1);
  CHECK(res.trace.large_steps == 2);  // 1 warm-up + 1 escalated
  CHECK(res.trace.small_steps == 3);

  // Legality: Escalate events only ever follow a small-mode FALSE check.
  for (std::size_t i = 0; i < res.trace.events.size(); ++i) {
    if (res.trace.events[i].kind == StepKind::Escalate) {
      REQUIRE(i > 0);
      CHECK(res.trace.events[i - 1].kind == StepKind::ProgressCheck);
      CHECK(res.trace.events[i - 1].mode == CollabMode::Small);
      CHECK(res.trace.events[i - 1].progress == 0);
    }
  }
}

TEST_CASE("malformed progress is treated as FALSE and triggers escalation") {
  CollabConfig cfg{1, 2, 64};
  ScriptedAdapter large(progress_text(true), /*final_after=*/0);
  ScriptedAdapter small({{false}, {true}},
                        {"===PROGRESS===\n<reason>x</reason>\n<value>perhaps</value>\n"
                         "===END_PROGRESS===",
                         progress_text(true)});
  auto res = run_collab("q", large, small, cfg);
  CHECK(res.status == CollabStatus::Done);
  CHECK(res.trace.malformed_progress == 1);
  CHECK(res.trace.escalations == 1);
}

TEST_CASE("step limit truncates runs") {
  CollabConfig cfg{2, 2, 5};
  ScriptedAdapter large(progress_text(false), 0);
  ScriptedAdapter small(progress_text(true), 0);  // never final
  auto res = run_collab("q", large, small, cfg);
  CHECK(res.status == CollabStatus::StepLimitExceeded);
  CHECK(res.trace.large_steps + res.trace.small_steps == 5);
}

TEST_CASE("scripted adapters give identical traces across runs") {
  CollabConfig cfg{2, 3, 32};
  auto run_once = [&] {
    ScriptedAdapter large(progress_text(false), 0);
    ScriptedAdapter small(progress_text(false), 0);
    return run_collab("q", large, small, cfg);
  };
  auto a = run_once();
  auto b = run_once();
  REQUIRE(a.trace.events.size() == b.trace.events.size());
  for (std::size_t i = 0; i < a.trace.events.size(); ++i) {
    CHECK(a.trace.events[i].kind == b.trace.events[i].kind);
    CHECK(a.trace.events[i].progress == b.trace.events[i].progress);
  }
}
