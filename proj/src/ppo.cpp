#include "gtb/ppo.hpp"

#include <cmath>
#include <string>

#include "gtb/common.hpp"

namespace gtb::ppo {

void gae(std::span<const double> rewards, std::span<const double> values,
         double bootstrap_value, double gamma, double lam,
         std::span<double> advantages, std::span<double> returns) {
  const int n = static_cast<int>(rewards.size());
  if (static_cast<int>(values.size()) != n ||
      static_cast<int>(advantages.size()) != n ||
      static_cast<int>(returns.size()) != n) {
    throw ContractViolation("gae: span lengths disagree");
  }
  double next_value = bootstrap_value;
  double acc = 0.0;
  for (int t = n - 1; t >= 0; --t) {
    const double delta = rewards[t] + gamma * next_value - values[t];
    acc = delta + gamma * lam * acc;
    advantages[t] = acc;
    returns[t] = acc + values[t];
    next_value = values[t];
  }
}

nn::Var ppo_loss(nn::Tape& t, nn::Var logp_new, nn::Var value, nn::Var entropy,
                 const nn::Mat& logp_old, const nn::Mat& advantages,
                 const nn::Mat& value_targets, const PpoConfig& cfg) {
  nn::Var ratio = t.exp(t.sub(logp_new, t.constant(logp_old)));
  nn::Var surr = t.mul_const(ratio, advantages);
  nn::Var surr_clipped =
      t.mul_const(t.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip), advantages);
  // Inside the clip band the two branches are bit-identical and min_elem
  // routes the gradient through the unclipped ratio; outside, the clamp's
  // dead zone kills it. That is exactly the PPO pessimistic surrogate.
  nn::Var pg = t.scale(t.mean_all(t.min_elem(surr, surr_clipped)), -1.0);
  nn::Var vf = t.scale(
      t.mean_all(t.square(t.sub(value, t.constant(value_targets)))),
      cfg.vf_coef);
  nn::Var ent = t.scale(t.mean_all(entropy), -cfg.ent_coef);
  return t.add(t.add(pg, vf), ent);
}

void finalize_streams(std::vector<Stream>& streams, double gamma, double lam) {
  double sum = 0.0;
  long count = 0;
  for (Stream& s : streams) {
    const int n = s.steps();
    s.advantage.assign(n, 0.0);
    s.ret.assign(n, 0.0);
    gae(s.reward, s.value, s.bootstrap, gamma, lam, s.advantage, s.ret);
    for (double a : s.advantage) sum += a;
    count += n;
  }
  if (count == 0) throw ContractViolation("finalize_streams: empty batch");
  const double mean = sum / static_cast<double>(count);
  double var = 0.0;
  for (const Stream& s : streams)
    for (double a : s.advantage) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(count));
  for (Stream& s : streams)
    for (double& a : s.advantage) a = (a - mean) / (sd + 1e-8);
}

namespace {

struct SeqRef {
  int stream;
  int start;
};

// Assembles the lockstep minibatch: sequence s becomes column s of every
// per-step matrix, and the flattened constants use column t*batch + s to
// match forward_seq's output layout.
struct MinibatchData {
  policy::SeqBatch batch;
  nn::Mat logp_old, adv, vtarg;
};

MinibatchData gather_minibatch(const std::vector<Stream>& streams,
                               const policy::PolicyConfig& pcfg, int seq_len,
                               std::span<const SeqRef> refs) {
  const int B = static_cast<int>(refs.size());
  MinibatchData mb;
  policy::SeqBatch& sb = mb.batch;
  sb.seq_len = seq_len;
  sb.batch = B;
  sb.h0.setZero(pcfg.lstm_width, B);
  sb.c0.setZero(pcfg.lstm_width, B);
  for (int s = 0; s < B; ++s) {
    const Stream& st = streams[refs[s].stream];
    const policy::Hidden& h = st.seq_hidden[refs[s].start / seq_len];
    sb.h0.col(s) = h.h;
    sb.c0.col(s) = h.c;
  }
  const int heads = static_cast<int>(pcfg.head_sizes.size());
  sb.spatial.resize(seq_len);
  sb.flat.resize(seq_len);
  sb.masks.resize(seq_len);
  sb.actions.resize(seq_len);
  mb.logp_old.resize(1, seq_len * B);
  mb.adv.resize(1, seq_len * B);
  mb.vtarg.resize(1, seq_len * B);
  for (int t = 0; t < seq_len; ++t) {
    if (pcfg.has_conv())
      sb.spatial[t].resize(pcfg.spatial_channels * pcfg.spatial_h * pcfg.spatial_w, B);
    sb.flat[t].resize(pcfg.flat_dim, B);
    sb.masks[t].resize(heads);
    sb.actions[t].resize(heads);
    for (int k = 0; k < heads; ++k) {
      sb.masks[t][k].resize(pcfg.head_sizes[k], B);
      sb.actions[t][k].resize(B);
    }
    for (int s = 0; s < B; ++s) {
      const Stream& st = streams[refs[s].stream];
      const int i = refs[s].start + t;
      if (pcfg.has_conv()) sb.spatial[t].col(s) = st.spatial[i];
      sb.flat[t].col(s) = st.flat[i];
      for (int k = 0; k < heads; ++k) {
        sb.masks[t][k].col(s) = st.masks[i][k];
        sb.actions[t][k][s] = st.actions[i][k];
      }
      mb.logp_old(0, t * B + s) = st.logp[i];
      mb.adv(0, t * B + s) = st.advantage[i];
      mb.vtarg(0, t * B + s) = st.ret[i];
    }
  }
  return mb;
}

}  // namespace

UpdateStats ppo_update(nn::Params& params, nn::Adam& opt,
                       const policy::PolicyConfig& pcfg, const PpoConfig& cfg,
                       const std::vector<Stream>& streams, Rng& rng) {
  if (streams.empty()) throw ContractViolation("ppo_update: no streams");
  const int steps = streams[0].steps();
  long total = 0;
  for (const Stream& s : streams) {
    if (s.steps() != steps)
      throw ContractViolation("ppo_update: stream lengths differ");
    if (static_cast<int>(s.advantage.size()) != steps)
      throw ContractViolation("ppo_update: streams not finalized");
    total += steps;
  }
  if (steps % cfg.seq_len != 0)
    throw ContractViolation("ppo_update: stream length not a seq_len multiple");
  if (cfg.minibatch % cfg.seq_len != 0)
    throw ContractViolation("ppo_update: minibatch not a seq_len multiple");
  if (total % cfg.minibatch != 0)
    throw ContractViolation("ppo_update: buffer not a minibatch multiple");

  std::vector<SeqRef> seqs;
  seqs.reserve(static_cast<std::size_t>(total / cfg.seq_len));
  for (int i = 0; i < static_cast<int>(streams.size()); ++i)
    for (int s0 = 0; s0 < steps; s0 += cfg.seq_len) seqs.push_back({i, s0});
  shuffle_vec(seqs, rng);

  const int seqs_per_mb = cfg.minibatch / cfg.seq_len;
  UpdateStats stats;
  for (std::size_t at = 0; at + seqs_per_mb <= seqs.size(); at += seqs_per_mb) {
    MinibatchData mb = gather_minibatch(
        streams, pcfg, cfg.seq_len,
        std::span<const SeqRef>(seqs).subspan(at, seqs_per_mb));

    nn::Tape tape;
    policy::TapedParams taped;
    policy::SeqForward fwd = forward_seq(tape, taped, params, pcfg, mb.batch);
    nn::Var loss = ppo_loss(tape, fwd.logp, fwd.value, fwd.entropy,
                            mb.logp_old, mb.adv, mb.vtarg, cfg);
    const double loss_value = tape.value(loss)(0, 0);
    if (!std::isfinite(loss_value))
      throw NonFiniteLoss("ppo_update: minibatch " +
                          std::to_string(stats.minibatches) + " loss " +
                          std::to_string(loss_value));
    tape.backward(loss);

    nn::Grads grads;
    for (const auto& [name, leaf] : taped.leaves) grads[name] = tape.grad(leaf);
    const double gn = nn::global_grad_norm(grads);
    nn::clip_global_norm(grads, cfg.max_grad_norm);
    opt.step(params, grads);

    // Diagnostics recomputed from forward values (cheap relative to backward).
    const nn::Mat lp = tape.value(fwd.logp);
    const nn::Mat val = tape.value(fwd.value);
    const nn::Mat ent = tape.value(fwd.entropy);
    const int m = static_cast<int>(lp.cols());
    double pg = 0.0, vf = 0.0, en = 0.0, clipped = 0.0;
    for (int j = 0; j < m; ++j) {
      const double ratio = std::exp(lp(0, j) - mb.logp_old(0, j));
      const double c = std::max(1.0 - cfg.clip, std::min(ratio, 1.0 + cfg.clip));
      pg -= std::min(ratio * mb.adv(0, j), c * mb.adv(0, j));
      if (ratio < 1.0 - cfg.clip || ratio > 1.0 + cfg.clip) clipped += 1.0;
      const double verr = val(0, j) - mb.vtarg(0, j);
      vf += verr * verr;
      en += ent(0, j);
    }
    stats.loss += loss_value;
    stats.pg_loss += pg / m;
    stats.vf_loss += vf / m;
    stats.entropy += en / m;
    stats.grad_norm += gn;
    stats.clip_frac += clipped / m;
    stats.minibatches += 1;
  }
  if (stats.minibatches > 0) {
    const double inv = 1.0 / stats.minibatches;
    stats.loss *= inv;
    stats.pg_loss *= inv;
    stats.vf_loss *= inv;
    stats.entropy *= inv;
    stats.grad_norm *= inv;
    stats.clip_frac *= inv;
  }
  return stats;
}

}  // namespace gtb::ppo
