#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <span>
#include <string>

#include "gtb/env.hpp"

namespace gtb::episodelog {

// Line-delimited episode trace. Every line is one JSON object with a
// "type" tag: hdr, cur, sched, act, trade, tax, metrics, hash, end.
// The format is greppable and diffable, and it carries enough to re-drive
// the environment: feeding the logged action stream through an env built
// from the header reproduces every logged state hash. Applied tax
// schedules are logged verbatim (sched records), so replays do not depend
// on cross-episode planner history.
class Writer {
 public:
  // hash_every: state-hash record cadence in steps (the end record always
  // carries the final hash).
  Writer(const std::string& path, int hash_every = 100);

  // seed must be the exact value the episode's env was reset with.
  void header(std::uint64_t config_hash, std::uint64_t seed,
              const std::string& scenario_name, const env::Env& e);

  // Call when the curriculum changes mid-episode, before the affected step.
  void curriculum(const env::Env& e);

  // Call once per env.step(), right after it returns.
  void step(const env::Env& e, std::span<const int> agent_actions,
            std::span<const int> planner_actions, const env::StepOutputs& out);

  void finish(const env::Env& e);

 private:
  std::ofstream out_;
  int hash_every_;
};

struct ReplayResult {
  bool ok = false;
  int steps = 0;
  int hashes_checked = 0;
  std::string error;  // empty when ok
};

// Re-runs the logged episode and checks every recorded state hash, trade,
// settlement, and metric against the fresh simulation.
ReplayResult verify(const std::string& log_path,
                    const std::string& scenario_dir);

// Streams records to `fn` in file order. Throws ConfigError on unreadable
// files or malformed lines. `fn` gets the raw JSON text of each line.
void for_each_record(const std::string& log_path,
                     const std::function<void(const std::string&)>& fn);

}  // namespace gtb::episodelog
