// Command-line front end: runs scenarios, writes reports, and hosts the
// built-in verification suite plus ad-hoc substring-index inspection.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime contract violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "agentsim/config.hpp"
#include "agentsim/driver.hpp"
#include "agentsim/verify.hpp"

namespace fs = std::filesystem;
using namespace agentsim;

namespace {

constexpr const char* kOutDirEnv = "AGENTSIM_OUT_DIR";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read \"" + path + "\"");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Resolution order: --out-dir flag, config's out_dir, env var, "./reports".
fs::path resolve_out_dir(const std::string& flag, const ScenarioConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.out_dir.empty()) return cfg.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "reports";
}

// Preset name or config file path; overrides applied on top, then --seed.
ScenarioConfig load_config(const std::string& source, const std::vector<std::string>& sets,
                           std::int64_t seed_flag) {
  ScenarioConfig cfg;
  if (fs::exists(source))
    cfg = parse_config(read_file(source));
  else
    cfg = preset(source);
  for (const std::string& kv : sets) cfg = apply_override(cfg, kv);
  if (seed_flag >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_flag)};
  cfg.validate();
  return cfg;
}

int cmd_run(const std::string& source, const std::vector<std::string>& sets,
            std::int64_t seed_flag, const std::string& out_flag) {
  ScenarioConfig cfg = load_config(source, sets, seed_flag);
  fs::path out_dir = resolve_out_dir(out_flag, cfg);
  fs::create_directories(out_dir);
  for (std::uint64_t seed : cfg.seeds) {
    RunOutput out = run_one(cfg, seed);
    for (const ReportFile& f : out.files) {
      std::ofstream os(out_dir / f.name, std::ios::binary);
      os << f.content;
      if (!os) throw std::runtime_error("cannot write " + (out_dir / f.name).string());
    }
    std::cout << "[" << cfg.scenario << " seed " << seed << "]\n" << out.summary;
    for (const ReportFile& f : out.files)
      std::cout << "wrote " << (out_dir / f.name).string() << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& self) {
  VerifyOptions opts;
  opts.cli_path = self;
  auto results = run_verification(opts);
  std::cout << format_verification(results);
  return all_passed(results) ? 0 : 1;
}

TokenVec read_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("tokens: cannot read \"" + path + "\"");
  TokenVec out;
  long long t;
  while (in >> t) out.push_back(static_cast<TokenId>(t));
  return out;
}

int cmd_sam(const std::string& sub, const std::string& corpus_path,
            const std::string& query_path, std::size_t k) {
  SuffixAutomaton sam;
  TokenVec corpus = read_tokens(corpus_path);
  if (!sam.extend_all(corpus)) throw std::runtime_error("sam: capacity exhausted");
  if (sub == "build" || sub == "stats") {
    std::cout << "tokens " << corpus.size() << "\nstates " << sam.state_count()
              << "\ndistinct_substrings " << sam.distinct_substrings() << "\n";
    return 0;
  }
  TokenVec query = read_tokens(query_path);
  MatchCursor cur = sam.root_cursor();
  for (TokenId t : query) {
    cur = sam.advance(cur, t);
    std::cout << "token " << t << " -> state " << cur.state << " match_len " << cur.match_len
              << "\n";
  }
  if (sub == "draft") {
    TokenVec d = sam.draft(cur, k, 2, DraftPolicy::PreferEarlier);
    std::cout << "draft";
    for (TokenId t : d) std::cout << " " << t;
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic simulator for agent-serving acceleration mechanisms"};
  app.require_subcommand(1);
  app.fallthrough();  // global --seed/--set/--out-dir may follow the subcommand

  std::vector<std::string> sets;
  std::int64_t seed_flag = -1;
  std::string out_flag;
  app.add_option("--set", sets,
                 "Override a config key, dotted path (e.g. --set pool.N=2048); repeatable")
      ->take_all();
  app.add_option("--seed", seed_flag, "Run a single seed instead of the config's seed list");
  app.add_option("--out-dir", out_flag,
                 std::string("Report directory (default: config out_dir, then $") +
                     kOutDirEnv + ", then ./reports)");

  std::string run_source;
  auto* run = app.add_subcommand("run", "Run a scenario and write JSON + CSV reports");
  {
    std::string presets;
    for (const auto& p : preset_names()) presets += (presets.empty() ? "" : ", ") + p;
    run->add_option("config", run_source, "Preset name (" + presets + ") or config file path")
        ->required();
    run->footer("Config keys and defaults:\n" + describe_config_keys());
  }

  app.add_subcommand("verify", "Run the acceptance suite; prints a per-criterion table");

  auto* sam = app.add_subcommand("sam", "Inspect a substring index built from a token file");
  std::string sam_sub, sam_corpus, sam_query;
  std::size_t sam_k = 4;
  sam->add_option("sub", sam_sub, "build | stats | match | draft")->required();
  sam->add_option("corpus", sam_corpus, "whitespace-separated token id file")->required();
  sam->add_option("query", sam_query, "token file to match/draft against");
  sam->add_option("-k", sam_k, "draft length");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_source, sets, seed_flag, out_flag);
    if (app.got_subcommand("verify")) return cmd_verify(argv[0]);
    if (sam->parsed()) return cmd_sam(sam_sub, sam_corpus, sam_query, sam_k);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
