#pragma once

#include <span>
#include <vector>

#include "gtb/nn.hpp"
#include "gtb/policy.hpp"
#include "gtb/rng.hpp"

namespace gtb::ppo {

struct PpoConfig {
  double clip = 0.2;
  double vf_coef = 0.05;
  double ent_coef = 0.025;
  double max_grad_norm = 10.0;
  double gamma = 0.998;
  double lam = 0.98;
  int seq_len = 25;
  // Transitions per gradient step. Must be a multiple of seq_len; the update
  // makes a single pass over the buffer, so transitions/minibatch is also the
  // number of optimizer steps per update.
  int minibatch = 600;
};

// Generalized advantage estimation over one reward/value stream.
// bootstrap_value is V(s_T) from the step after the last transition; pass 0
// when the stream ends exactly at an episode boundary. advantages and returns
// must already be sized like rewards.
void gae(std::span<const double> rewards, std::span<const double> values,
         double bootstrap_value, double gamma, double lam,
         std::span<double> advantages, std::span<double> returns);

// Clipped-surrogate PPO loss, built on the tape so the same expression serves
// both the trainer and the finite-difference tests. logp_new / value / entropy
// are 1 x M rows from forward_seq; the Mats are constants of the same shape.
//
//   L = -mean(min(r A, clip(r, 1-c, 1+c) A))
//       + vf_coef * mean((V - target)^2)
//       - ent_coef * mean(H)
nn::Var ppo_loss(nn::Tape& t, nn::Var logp_new, nn::Var value, nn::Var entropy,
                 const nn::Mat& logp_old, const nn::Mat& advantages,
                 const nn::Mat& value_targets, const PpoConfig& cfg);

// One actor's transitions from one rollout round, in step order. The trainer
// fills everything except advantage / ret, which finalize_streams computes.
// Hidden state is snapshotted at every seq_len boundary so truncated BPTT can
// restart each training sequence from the state the rollout actually saw.
struct Stream {
  std::vector<nn::Mat> spatial;                // column vectors; empty if no conv
  std::vector<nn::Mat> flat;                   // column vectors
  std::vector<std::vector<nn::Mat>> masks;     // [step][head], column vectors
  std::vector<std::vector<int>> actions;       // [step][head]
  std::vector<double> logp;
  std::vector<double> value;
  std::vector<double> reward;
  std::vector<policy::Hidden> seq_hidden;      // [step / seq_len]
  double bootstrap = 0.0;                      // V(s_T); 0 at episode end

  std::vector<double> advantage;               // filled by finalize_streams
  std::vector<double> ret;

  int steps() const { return static_cast<int>(reward.size()); }
};

// Runs GAE on every stream, then normalizes advantages to zero mean and unit
// variance across the whole batch (all streams together, so the result does
// not depend on how transitions were split into streams).
void finalize_streams(std::vector<Stream>& streams, double gamma, double lam);

struct UpdateStats {
  double loss = 0.0;       // averaged over minibatches
  double pg_loss = 0.0;
  double vf_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;  // pre-clip, averaged
  double clip_frac = 0.0;  // fraction of ratios outside [1-c, 1+c]
  int minibatches = 0;
};

// Single-pass minibatched PPO update with truncated BPTT. Streams must all
// have the same length, a multiple of cfg.seq_len, and be finalized. Chops
// each stream into seq_len sequences, shuffles them, regroups into minibatches
// of cfg.minibatch transitions, and takes one Adam step per minibatch.
// Throws NonFiniteLoss if any minibatch loss is NaN or infinite.
UpdateStats ppo_update(nn::Params& params, nn::Adam& opt,
                       const policy::PolicyConfig& pcfg, const PpoConfig& cfg,
                       const std::vector<Stream>& streams, Rng& rng);

}  // namespace gtb::ppo
