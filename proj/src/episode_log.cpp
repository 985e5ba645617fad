#include "gtb/episode_log.hpp"

#include <cmath>
#include <numeric>
#include <vector>

#include "json.hpp"

#include "gtb/hash.hpp"
#include "gtb/scenario.hpp"

namespace gtb::episodelog {

using nlohmann::json;

namespace {

json rates_json(const fiscal::TaxSchedule& s) {
  json a = json::array();
  for (double r : s.rates) a.push_back(r);
  return a;
}

}  // namespace

Writer::Writer(const std::string& path, int hash_every)
    : out_(path), hash_every_(hash_every) {
  if (!out_) throw ConfigError("cannot open episode log for writing: " + path);
  if (hash_every_ <= 0) throw ConfigError("hash_every must be positive");
}

void Writer::header(std::uint64_t config_hash, std::uint64_t seed,
                    const std::string& scenario_name, const env::Env& e) {
  const CurriculumState& c = e.curriculum();
  json j{{"type", "hdr"},
         {"config", hex64(config_hash)},
         {"seed", seed},
         {"scenario", scenario_name},
         {"planner", env::planner_kind_name(e.config().planner)},
         {"objective", welfare::objective_name(e.config().objective)},
         {"eta", e.config().eta},
         {"steps_per_year", e.config().steps_per_year},
         {"episode_len", e.config().episode_len},
         {"episode", e.episode_index()},
         {"taxes", c.taxes_enabled},
         {"labor_mult", c.labor_multiplier},
         {"tax_cap", c.tax_cap}};
  out_ << j.dump() << "\n";
}

void Writer::curriculum(const env::Env& e) {
  const CurriculumState& c = e.curriculum();
  json j{{"type", "cur"},
         {"t", e.t()},
         {"taxes", c.taxes_enabled},
         {"labor_mult", c.labor_multiplier},
         {"tax_cap", c.tax_cap}};
  out_ << j.dump() << "\n";
}

void Writer::step(const env::Env& e, std::span<const int> agent_actions,
                  std::span<const int> planner_actions,
                  const env::StepOutputs& out) {
  const int t_after = e.t();
  const int t_before = t_after - 1;
  const bool year_started = t_before % e.config().steps_per_year == 0;

  if (year_started) {
    json sched{{"type", "sched"},
               {"t", t_before},
               {"year", t_before / e.config().steps_per_year},
               {"rates", rates_json(e.schedule())}};
    out_ << sched.dump() << "\n";
  }

  json act{{"type", "act"}, {"t", t_before}};
  act["a"] = json::array();
  for (int a : agent_actions) act["a"].push_back(a);
  if (year_started && !planner_actions.empty()) {
    act["p"] = json::array();
    for (int p : planner_actions) act["p"].push_back(p);
  }
  act["pos"] = json::array();
  for (int i = 0; i < e.num_agents(); ++i) {
    const world::AgentState& a = e.world().agent(i);
    act["pos"].push_back(json::array({a.row, a.col}));
  }
  out_ << act.dump() << "\n";

  for (const market::Trade& tr : out.trades) {
    json j{{"type", "trade"},     {"t", t_before},
           {"res", resource_name(tr.resource)},
           {"price", tr.price},   {"buyer", tr.buyer},
           {"seller", tr.seller}};
    out_ << j.dump() << "\n";
  }

  if (out.tax_settled) {
    std::vector<double> paid(out.settled_incomes.size());
    for (std::size_t i = 0; i < paid.size(); ++i)
      paid[i] = e.schedule().tax_owed(out.settled_incomes[i]);
    const double rebate =
        paid.empty()
            ? 0.0
            : std::accumulate(paid.begin(), paid.end(), 0.0) /
                  static_cast<double>(paid.size());
    json tax{{"type", "tax"},
             {"year", out.settled_year},
             {"rates", rates_json(e.schedule())},
             {"incomes", out.settled_incomes},
             {"paid", paid},
             {"rebate", rebate}};
    out_ << tax.dump() << "\n";
    json met{{"type", "metrics"},
             {"year", out.settled_year},
             {"swf", e.social_welfare_now()},
             {"equality", e.equality_now()},
             {"productivity", e.productivity_now()}};
    out_ << met.dump() << "\n";
  }

  if (t_after % hash_every_ == 0 && t_after != e.config().episode_len) {
    json j{{"type", "hash"}, {"t", t_after}, {"h", hex64(e.state_hash())}};
    out_ << j.dump() << "\n";
  }
}

void Writer::finish(const env::Env& e) {
  json j{{"type", "end"}, {"t", e.t()}, {"h", hex64(e.state_hash())}};
  j["coins"] = e.world().coin_endowments();
  out_ << j.dump() << "\n";
  out_.flush();
}

void for_each_record(const std::string& log_path,
                     const std::function<void(const std::string&)>& fn) {
  std::ifstream in(log_path);
  if (!in) throw ConfigError("cannot open episode log: " + log_path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    fn(line);
  }
}

namespace {

std::uint64_t parse_hex64(const std::string& s) {
  return std::stoull(s, nullptr, 16);
}

struct ReplayState {
  std::unique_ptr<env::Env> env;
  env::StepOutputs last_out;
  std::size_t trade_cursor = 0;  // into last_out.trades
  ReplayResult result;
};

void fail(ReplayState& rs, const std::string& why) {
  if (rs.result.error.empty()) rs.result.error = why;
}

void apply_record(ReplayState& rs, const json& j,
                  const std::string& scenario_dir) {
  const std::string type = j.at("type");
  if (type == "hdr") {
    env::EnvConfig cfg;
    cfg.steps_per_year = j.at("steps_per_year");
    cfg.episode_len = j.at("episode_len");
    cfg.eta = j.at("eta");
    cfg.planner = env::parse_planner_kind(j.at("planner"));
    cfg.objective = welfare::parse_objective(j.at("objective"));
    scenario::ScenarioSpec spec = scenario::load_scenario(
        scenario_dir + "/" + std::string(j.at("scenario")) + ".txt");
    rs.env = std::make_unique<env::Env>(std::move(spec), cfg,
                                        j.at("seed").get<std::uint64_t>());
    CurriculumState c = curriculum_done();
    c.taxes_enabled = j.at("taxes");
    c.labor_multiplier = j.at("labor_mult");
    c.tax_cap = j.at("tax_cap");
    rs.env->set_curriculum(c);
    return;
  }
  if (!rs.env) {
    fail(rs, "log does not start with a header record");
    return;
  }
  env::Env& e = *rs.env;

  if (type == "cur") {
    if (e.t() != j.at("t").get<int>()) fail(rs, "cur record out of sequence");
    CurriculumState c = e.curriculum();
    c.taxes_enabled = j.at("taxes");
    c.labor_multiplier = j.at("labor_mult");
    c.tax_cap = j.at("tax_cap");
    e.set_curriculum(c);
  } else if (type == "sched") {
    fiscal::TaxSchedule s;
    for (int b = 0; b < fiscal::kNumBrackets; ++b)
      s.rates[static_cast<std::size_t>(b)] = j.at("rates").at(b);
    e.override_next_schedule(s);
  } else if (type == "act") {
    if (e.t() != j.at("t").get<int>()) {
      fail(rs, "act record out of sequence at t=" +
                   std::to_string(j.at("t").get<int>()));
      return;
    }
    if (rs.trade_cursor != rs.last_out.trades.size()) {
      fail(rs, "simulation produced trades the log does not record");
      return;
    }
    std::vector<int> a = j.at("a").get<std::vector<int>>();
    std::vector<int> p;
    if (j.contains("p")) p = j.at("p").get<std::vector<int>>();
    rs.last_out = e.step(a, p);
    rs.trade_cursor = 0;
    ++rs.result.steps;
    for (int i = 0; i < e.num_agents(); ++i) {
      const world::AgentState& ag = e.world().agent(i);
      if (ag.row != j.at("pos").at(i).at(0).get<int>() ||
          ag.col != j.at("pos").at(i).at(1).get<int>())
        fail(rs, "agent position diverged at t=" + std::to_string(e.t() - 1));
    }
  } else if (type == "trade") {
    if (rs.trade_cursor >= rs.last_out.trades.size()) {
      fail(rs, "log records a trade the simulation did not produce");
      return;
    }
    const market::Trade& tr = rs.last_out.trades[rs.trade_cursor++];
    if (resource_name(tr.resource) != j.at("res").get<std::string>() ||
        tr.price != j.at("price").get<int>() ||
        tr.buyer != j.at("buyer").get<int>() ||
        tr.seller != j.at("seller").get<int>())
      fail(rs, "trade mismatch at t=" + std::to_string(e.t() - 1));
  } else if (type == "tax") {
    if (!rs.last_out.tax_settled ||
        rs.last_out.settled_year != j.at("year").get<int>()) {
      fail(rs, "tax record without a matching settlement");
      return;
    }
    const std::vector<double> incomes = j.at("incomes");
    for (std::size_t i = 0; i < incomes.size(); ++i)
      if (std::abs(incomes[i] - rs.last_out.settled_incomes[i]) > 1e-12)
        fail(rs, "settled incomes diverged in year " +
                     std::to_string(rs.last_out.settled_year));
    for (int b = 0; b < fiscal::kNumBrackets; ++b)
      if (std::abs(e.schedule().rates[static_cast<std::size_t>(b)] -
                   j.at("rates").at(b).get<double>()) > 1e-12)
        fail(rs, "applied schedule diverged in year " +
                     std::to_string(rs.last_out.settled_year));
  } else if (type == "metrics") {
    if (std::abs(e.social_welfare_now() - j.at("swf").get<double>()) > 1e-9 ||
        std::abs(e.equality_now() - j.at("equality").get<double>()) > 1e-9 ||
        std::abs(e.productivity_now() - j.at("productivity").get<double>()) >
            1e-9)
      fail(rs, "year metrics diverged");
  } else if (type == "hash") {
    if (e.t() != j.at("t").get<int>()) {
      fail(rs, "hash record out of sequence");
      return;
    }
    if (e.state_hash() != parse_hex64(j.at("h"))) {
      fail(rs, "state hash diverged at t=" + std::to_string(e.t()));
      return;
    }
    ++rs.result.hashes_checked;
  } else if (type == "end") {
    if (e.t() != j.at("t").get<int>() ||
        e.state_hash() != parse_hex64(j.at("h"))) {
      fail(rs, "final state diverged");
      return;
    }
    ++rs.result.hashes_checked;
  } else {
    fail(rs, "unknown record type: " + type);
  }
}

}  // namespace

ReplayResult verify(const std::string& log_path,
                    const std::string& scenario_dir) {
  ReplayState rs;
  bool saw_end = false;
  try {
    for_each_record(log_path, [&](const std::string& line) {
      if (!rs.result.error.empty()) return;
      const json j = json::parse(line);
      if (j.at("type") == "end") saw_end = true;
      apply_record(rs, j, scenario_dir);
    });
  } catch (const json::exception& ex) {
    fail(rs, std::string("malformed log line: ") + ex.what());
  } catch (const std::exception& ex) {
    fail(rs, ex.what());
  }
  if (rs.result.error.empty() && !saw_end)
    fail(rs, "log has no end record");
  rs.result.ok = rs.result.error.empty();
  return rs.result;
}

}  // namespace gtb::episodelog
