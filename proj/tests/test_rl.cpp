#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gtb/common.hpp"
#include "gtb/curriculum.hpp"
#include "gtb/nn.hpp"
#include "gtb/policy.hpp"
#include "gtb/ppo.hpp"
#include "gtb/rng.hpp"
#include "rl_checks.hpp"

using namespace gtb;

TEST_CASE("gae matches hand-worked fixtures") {
  {
    std::vector<double> r = {1.0}, v = {0.0}, adv(1), ret(1);
    ppo::gae(r, v, 0.0, 0.998, 0.98, adv, ret);
    CHECK(adv[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ret[0] == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    // gamma 0.5, lambda 1: pure discounted Monte Carlo returns.
    std::vector<double> r = {0.0, 1.0}, v = {0.0, 0.0}, adv(2), ret(2);
    ppo::gae(r, v, 0.0, 0.5, 1.0, adv, ret);
    CHECK(adv[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    // lambda 0: advantage collapses to the one-step TD error.
    std::vector<double> r = {1.0, 2.0, 3.0}, v = {0.5, 1.0, 1.5};
    std::vector<double> adv(3), ret(3);
    ppo::gae(r, v, 2.0, 0.9, 0.0, adv, ret);
    CHECK(adv[0] == doctest::Approx(1.0 + 0.9 * 1.0 - 0.5).epsilon(1e-12));
    CHECK(adv[1] == doctest::Approx(2.0 + 0.9 * 1.5 - 1.0).epsilon(1e-12));
    CHECK(adv[2] == doctest::Approx(3.0 + 0.9 * 2.0 - 1.5).epsilon(1e-12));
    for (int t = 0; t < 3; ++t)
      CHECK(ret[t] == doctest::Approx(adv[t] + v[t]).epsilon(1e-12));
  }
}

TEST_CASE("gae agrees with the lambda-return oracle on short sequences") {
  CHECK(testing::gae_vs_lambda_return_max_err(10, 40, 0x6AE0001) < 1e-10);
}

TEST_CASE("ppo loss gradient matches central differences on a toy policy") {
  CHECK(testing::toy_ppo_grad_max_rel_err(0xA11CE) <= 1e-4);
  CHECK(testing::toy_ppo_grad_max_rel_err(0xB0B) <= 1e-4);
  CHECK(testing::toy_ppo_grad_max_rel_err(0xC0FFEE) <= 1e-4);
}

TEST_CASE("zero advantages and zero entropy bonus give exactly zero policy gradient") {
  std::array<double, 10> theta;
  testing::ToyPpoProblem p = testing::make_toy_ppo_problem(0xD00D, &theta);
  p.adv.setZero();
  p.cfg.ent_coef = 0.0;
  std::array<double, 10> grads{};
  testing::toy_ppo_loss(p, theta, &grads);
  for (int i = 0; i < 8; ++i) CHECK(grads[static_cast<std::size_t>(i)] == 0.0);
  // The value head still trains against its targets.
  CHECK(std::fabs(grads[8]) + std::fabs(grads[9]) > 0.0);
}

namespace {

struct StepRecord {
  Eigen::VectorXd spatial, flat;
  std::vector<Eigen::VectorXd> masks;
  policy::ActResult res;
};

// Rolls one actor forward with act(), snapshotting hidden state at sequence
// boundaries, and returns everything needed to rebuild the same computation
// as a training batch.
struct ActorTrace {
  std::vector<StepRecord> steps;
  std::vector<policy::Hidden> seq_hidden;
};

ActorTrace trace_actor(const nn::Params& params,
                       const policy::PolicyConfig& pcfg, int steps,
                       int seq_len, Rng& rng) {
  ActorTrace tr;
  policy::Hidden hid = policy::zero_hidden(pcfg);
  for (int t = 0; t < steps; ++t) {
    if (t % seq_len == 0) tr.seq_hidden.push_back(hid);
    StepRecord rec;
    if (pcfg.has_conv()) {
      rec.spatial.resize(pcfg.spatial_channels * pcfg.spatial_h * pcfg.spatial_w);
      for (int i = 0; i < rec.spatial.size(); ++i)
        rec.spatial(i) = uniform_real(rng, -1.0, 1.0);
    }
    rec.flat.resize(pcfg.flat_dim);
    for (int i = 0; i < rec.flat.size(); ++i)
      rec.flat(i) = uniform_real(rng, -1.0, 1.0);
    for (int sz : pcfg.head_sizes) {
      Eigen::VectorXd m(sz);
      for (int i = 0; i < sz; ++i) m(i) = bernoulli(rng, 0.7) ? 1.0 : 0.0;
      m(static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(sz)))) = 1.0;
      rec.masks.push_back(m);
    }
    rec.res = policy::act(params, pcfg, rec.spatial, rec.flat, rec.masks, hid, rng);
    tr.steps.push_back(std::move(rec));
  }
  return tr;
}

void check_seq_forward_matches_act(const policy::PolicyConfig& pcfg,
                                   std::uint64_t seed, int steps, int seq_len) {
  Rng rng(seed);
  nn::Params params = policy::init_params(pcfg, rng);
  const int actors = 3;
  std::vector<ActorTrace> traces;
  for (int a = 0; a < actors; ++a)
    traces.push_back(trace_actor(params, pcfg, steps, seq_len, rng));

  const int seqs_per_actor = steps / seq_len;
  const int batch = actors * seqs_per_actor;
  const int heads = static_cast<int>(pcfg.head_sizes.size());
  policy::SeqBatch sb;
  sb.seq_len = seq_len;
  sb.batch = batch;
  sb.h0.resize(pcfg.lstm_width, batch);
  sb.c0.resize(pcfg.lstm_width, batch);
  sb.spatial.resize(seq_len);
  sb.flat.resize(seq_len);
  sb.masks.resize(seq_len);
  sb.actions.resize(seq_len);
  // Column layout: actor-major within each sequence block.
  auto col_of = [&](int actor, int seq) { return seq * actors + actor; };
  for (int a = 0; a < actors; ++a)
    for (int q = 0; q < seqs_per_actor; ++q) {
      sb.h0.col(col_of(a, q)) = traces[a].seq_hidden[q].h;
      sb.c0.col(col_of(a, q)) = traces[a].seq_hidden[q].c;
    }
  for (int t = 0; t < seq_len; ++t) {
    if (pcfg.has_conv())
      sb.spatial[t].resize(pcfg.spatial_channels * pcfg.spatial_h * pcfg.spatial_w, batch);
    sb.flat[t].resize(pcfg.flat_dim, batch);
    sb.masks[t].resize(heads);
    sb.actions[t].resize(heads);
    for (int k = 0; k < heads; ++k) {
      sb.masks[t][k].resize(pcfg.head_sizes[k], batch);
      sb.actions[t][k].resize(batch);
    }
    for (int a = 0; a < actors; ++a)
      for (int q = 0; q < seqs_per_actor; ++q) {
        const StepRecord& rec = traces[a].steps[q * seq_len + t];
        const int c = col_of(a, q);
        if (pcfg.has_conv()) sb.spatial[t].col(c) = rec.spatial;
        sb.flat[t].col(c) = rec.flat;
        for (int k = 0; k < heads; ++k) {
          sb.masks[t][k].col(c) = rec.masks[static_cast<std::size_t>(k)];
          sb.actions[t][k][c] = rec.res.actions[static_cast<std::size_t>(k)];
        }
      }
  }

  nn::Tape tape;
  policy::TapedParams taped;
  policy::SeqForward fwd = policy::forward_seq(tape, taped, params, pcfg, sb);
  const nn::Mat lp = tape.value(fwd.logp);
  const nn::Mat en = tape.value(fwd.entropy);
  const nn::Mat va = tape.value(fwd.value);
  for (int a = 0; a < actors; ++a)
    for (int q = 0; q < seqs_per_actor; ++q)
      for (int t = 0; t < seq_len; ++t) {
        const StepRecord& rec = traces[a].steps[q * seq_len + t];
        const int j = t * batch + col_of(a, q);
        CHECK(lp(0, j) == doctest::Approx(rec.res.logp).epsilon(1e-9));
        CHECK(en(0, j) == doctest::Approx(rec.res.entropy).epsilon(1e-9));
        CHECK(va(0, j) == doctest::Approx(rec.res.value).epsilon(1e-9));
      }
}

}  // namespace

TEST_CASE("training-time sequence forward reproduces rollout-time act outputs") {
  // Agent-shaped network: conv branch on, one big action head.
  policy::PolicyConfig agent;
  agent.spatial_channels = 2;
  agent.spatial_h = agent.spatial_w = 7;
  agent.conv1_channels = 3;
  agent.conv2_channels = 4;
  agent.flat_dim = 5;
  agent.fc_width = 8;
  agent.lstm_width = 8;
  agent.head_sizes = {6};
  check_seq_forward_matches_act(agent, 0x5EC1, 10, 5);

  // Planner-shaped network: no conv, several small heads.
  policy::PolicyConfig planner;
  planner.flat_dim = 11;
  planner.fc_width = 8;
  planner.lstm_width = 8;
  planner.head_sizes = {5, 5, 5, 5, 5, 5, 5};
  check_seq_forward_matches_act(planner, 0x5EC2, 8, 4);
}

namespace {

// Stateless two-context bandit: observation is a one-hot context, the matching
// action pays 1, everything else pays 0. Small enough to train in seconds yet
// it exercises the whole rollout -> finalize -> minibatched-update path.
// With equal_arms every action instead pays an action-independent coin flip,
// which turns the policy gradient into pure noise and isolates the entropy
// bonus as the only systematic force on the policy.
policy::PolicyConfig bandit_config() {
  policy::PolicyConfig pcfg;
  pcfg.flat_dim = 2;
  pcfg.fc_width = 8;
  pcfg.lstm_width = 8;
  pcfg.head_sizes = {3};
  return pcfg;
}

struct RolloutSummary {
  std::vector<ppo::Stream> streams;
  double mean_reward = 0.0;
  double mean_entropy = 0.0;
};

RolloutSummary rollout_bandit(const nn::Params& params,
                              const policy::PolicyConfig& pcfg, int n_streams,
                              int steps, int seq_len, bool equal_arms,
                              Rng& rng) {
  RolloutSummary out;
  const Eigen::VectorXd no_spatial;
  double reward_sum = 0.0, entropy_sum = 0.0;
  for (int i = 0; i < n_streams; ++i) {
    ppo::Stream st;
    policy::Hidden hid = policy::zero_hidden(pcfg);
    for (int t = 0; t < steps; ++t) {
      if (t % seq_len == 0) st.seq_hidden.push_back(hid);
      const int context = static_cast<int>(uniform_below(rng, 2));
      Eigen::VectorXd flat = Eigen::VectorXd::Zero(2);
      flat(context) = 1.0;
      std::vector<Eigen::VectorXd> masks = {Eigen::VectorXd::Ones(3)};
      policy::ActResult res =
          policy::act(params, pcfg, no_spatial, flat, masks, hid, rng);
      const double reward = equal_arms
                                ? (bernoulli(rng, 0.5) ? 1.0 : 0.0)
                                : (res.actions[0] == context ? 1.0 : 0.0);
      st.flat.push_back(flat);
      st.masks.push_back({nn::Mat(masks[0])});
      st.actions.push_back({res.actions[0]});
      st.logp.push_back(res.logp);
      st.value.push_back(res.value);
      st.reward.push_back(reward);
      reward_sum += reward;
      entropy_sum += res.entropy;
    }
    Eigen::VectorXd next = Eigen::VectorXd::Zero(2);
    next(static_cast<int>(uniform_below(rng, 2))) = 1.0;
    st.bootstrap = policy::state_value(params, pcfg, no_spatial, next, hid);
    out.streams.push_back(std::move(st));
  }
  out.mean_reward = reward_sum / (n_streams * steps);
  out.mean_entropy = entropy_sum / (n_streams * steps);
  return out;
}

struct BanditRun {
  nn::Params params;
  double first_reward = 0.0;
  double final_reward = 0.0;
  double final_entropy = 0.0;  // averaged over the last ten rounds
};

BanditRun train_bandit(double ent_coef, std::uint64_t seed, int rounds,
                       bool equal_arms) {
  const policy::PolicyConfig pcfg = bandit_config();
  ppo::PpoConfig cfg;
  cfg.seq_len = 25;
  cfg.minibatch = 100;
  cfg.ent_coef = ent_coef;
  cfg.gamma = 0.9;
  cfg.lam = 0.95;
  Rng init_rng(derive_seed(seed, 0));
  Rng env_rng(derive_seed(seed, 1));
  Rng upd_rng(derive_seed(seed, 2));
  BanditRun run;
  run.params = policy::init_params(pcfg, init_rng);
  nn::Adam opt(3e-3);
  double tail_entropy = 0.0;
  int tail_count = 0;
  for (int round = 0; round < rounds; ++round) {
    RolloutSummary roll =
        rollout_bandit(run.params, pcfg, 8, 50, cfg.seq_len, equal_arms, env_rng);
    if (round == 0) run.first_reward = roll.mean_reward;
    run.final_reward = roll.mean_reward;
    if (round >= rounds - 10) {
      tail_entropy += roll.mean_entropy;
      ++tail_count;
    }
    ppo::finalize_streams(roll.streams, cfg.gamma, cfg.lam);
    ppo::ppo_update(run.params, opt, pcfg, cfg, roll.streams, upd_rng);
  }
  run.final_entropy = tail_entropy / tail_count;
  return run;
}

}  // namespace

TEST_CASE("ppo learns a contextual bandit end to end") {
  const BanditRun run = train_bandit(0.01, 41, 60, false);
  CHECK(run.final_reward > 0.8);
  CHECK(run.final_reward > run.first_reward + 0.15);
}

TEST_CASE("entropy bonus keeps the policy stochastic when rewards carry no signal") {
  // On equal arms the surrogate gradient is noise, so without the bonus the
  // policy drifts off uniform and entropy decays; with it, entropy stays
  // pinned near log(3).
  const BanditRun with_bonus = train_bandit(0.125, 43, 60, true);
  const BanditRun without = train_bandit(0.0, 43, 60, true);
  CHECK(with_bonus.final_entropy > 1.0);
  CHECK(with_bonus.final_entropy > without.final_entropy + 0.05);
}

TEST_CASE("ppo update is deterministic given seeds") {
  const BanditRun a = train_bandit(0.01, 77, 10, false);
  const BanditRun b = train_bandit(0.01, 77, 10, false);
  REQUIRE(a.params.size() == b.params.size());
  for (const auto& [name, mat] : a.params) {
    const nn::Mat& other = b.params.at(name);
    CHECK((mat - other).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("first update sees unit ratios: nothing clips and the surrogate vanishes") {
  const policy::PolicyConfig pcfg = bandit_config();
  ppo::PpoConfig cfg;
  cfg.seq_len = 25;
  cfg.minibatch = 100;  // single minibatch covering the whole buffer
  cfg.gamma = 0.9;
  cfg.lam = 0.95;
  Rng init_rng(1);
  nn::Params params = policy::init_params(pcfg, init_rng);
  Rng env_rng(2), upd_rng(3);
  RolloutSummary roll = rollout_bandit(params, pcfg, 4, 25, cfg.seq_len, false, env_rng);
  ppo::finalize_streams(roll.streams, cfg.gamma, cfg.lam);
  nn::Adam opt(1e-3);
  const ppo::UpdateStats stats =
      ppo::ppo_update(params, opt, pcfg, cfg, roll.streams, upd_rng);
  CHECK(stats.minibatches == 1);
  CHECK(stats.clip_frac == 0.0);
  CHECK(std::fabs(stats.pg_loss) < 1e-6);
  CHECK(stats.entropy == doctest::Approx(roll.mean_entropy).epsilon(1e-9));
}

TEST_CASE("non-finite loss aborts the update") {
  const policy::PolicyConfig pcfg = bandit_config();
  ppo::PpoConfig cfg;
  cfg.seq_len = 25;
  cfg.minibatch = 50;
  Rng init_rng(5);
  nn::Params params = policy::init_params(pcfg, init_rng);
  Rng env_rng(6), upd_rng(7);
  RolloutSummary roll = rollout_bandit(params, pcfg, 2, 25, cfg.seq_len, false, env_rng);
  ppo::finalize_streams(roll.streams, cfg.gamma, cfg.lam);
  roll.streams[0].logp[0] = std::nan("");
  nn::Adam opt(1e-3);
  CHECK_THROWS_AS(ppo::ppo_update(params, opt, pcfg, cfg, roll.streams, upd_rng),
                  NonFiniteLoss);
}

TEST_CASE("update rejects malformed buffers") {
  const policy::PolicyConfig pcfg = bandit_config();
  ppo::PpoConfig cfg;
  cfg.seq_len = 25;
  cfg.minibatch = 60;  // not a multiple of seq_len
  Rng init_rng(8);
  nn::Params params = policy::init_params(pcfg, init_rng);
  Rng env_rng(9), upd_rng(10);
  RolloutSummary roll = rollout_bandit(params, pcfg, 2, 25, cfg.seq_len, false, env_rng);
  ppo::finalize_streams(roll.streams, cfg.gamma, cfg.lam);
  nn::Adam opt(1e-3);
  CHECK_THROWS_AS(ppo::ppo_update(params, opt, pcfg, cfg, roll.streams, upd_rng),
                  ContractViolation);
}

TEST_CASE("curriculum anneals are monotone with the pinned endpoints") {
  CurriculumConfig cc;
  cc.phase_one_steps = 1'000'000;
  cc.tax_cap_anneal_steps = 2'000'000;
  cc.entropy_anneal_steps = 4'000'000;

  const CurriculumState start = curriculum_at(cc, 0);
  CHECK(start.phase == 1);
  CHECK(start.labor_multiplier == 0.0);
  CHECK_FALSE(start.taxes_enabled);

  const CurriculumState mid1 = curriculum_at(cc, 500'000);
  CHECK(mid1.labor_multiplier == doctest::Approx(0.5));
  CHECK_FALSE(mid1.taxes_enabled);
  CHECK(mid1.tax_cap == doctest::Approx(0.10));
  CHECK(mid1.planner_entropy_coef == doctest::Approx(0.125));

  const CurriculumState p2_0 = curriculum_at(cc, cc.phase_one_steps);
  CHECK(p2_0.phase == 2);
  CHECK(p2_0.taxes_enabled);
  CHECK(p2_0.labor_multiplier == 1.0);
  CHECK(p2_0.tax_cap == doctest::Approx(0.10));
  CHECK(p2_0.planner_entropy_coef == doctest::Approx(0.125));

  const CurriculumState p2_mid = curriculum_at(cc, cc.phase_one_steps + 1'000'000);
  CHECK(p2_mid.tax_cap == doctest::Approx(0.55));
  CHECK(p2_mid.planner_entropy_coef == doctest::Approx(0.125 + (0.0125 - 0.125) * 0.25));

  const CurriculumState p2_done = curriculum_at(cc, cc.phase_one_steps + 2'000'000);
  CHECK(p2_done.tax_cap == doctest::Approx(1.0));

  const CurriculumState late = curriculum_at(cc, cc.phase_one_steps + 10'000'000);
  CHECK(late.tax_cap == 1.0);
  CHECK(late.planner_entropy_coef == doctest::Approx(0.0125));

  // Monotone over a dense sweep: labor and cap never decrease, entropy never
  // increases, and every value stays in its documented range.
  CurriculumState prev = curriculum_at(cc, 0);
  for (long long step = 0; step <= 8'000'000; step += 40'000) {
    const CurriculumState cur = curriculum_at(cc, step);
    CHECK(cur.labor_multiplier >= prev.labor_multiplier);
    CHECK(cur.tax_cap >= prev.tax_cap);
    CHECK(cur.planner_entropy_coef <= prev.planner_entropy_coef);
    CHECK(cur.labor_multiplier >= 0.0);
    CHECK(cur.labor_multiplier <= 1.0);
    CHECK(cur.tax_cap >= 0.10);
    CHECK(cur.tax_cap <= 1.0);
    CHECK(cur.planner_entropy_coef >= 0.0125);
    CHECK(cur.planner_entropy_coef <= 0.125);
    prev = cur;
  }

  // Degenerate durations skip straight to the finished ramps.
  CurriculumConfig instant;
  instant.phase_one_steps = 0;
  instant.tax_cap_anneal_steps = 0;
  instant.entropy_anneal_steps = 0;
  const CurriculumState s0 = curriculum_at(instant, 0);
  CHECK(s0.phase == 2);
  CHECK(s0.tax_cap == 1.0);
  CHECK(s0.planner_entropy_coef == doctest::Approx(0.0125));
}
