#include "gtb/policy.hpp"

#include <cmath>

#include "gtb/common.hpp"

namespace gtb::policy {

namespace {

void validate(const PolicyConfig& c) {
  if (c.flat_dim < 1) throw ContractViolation("policy: flat_dim < 1");
  if (c.fc_width < 1 || c.lstm_width < 1) {
    throw ContractViolation("policy: zero torso width");
  }
  if (c.head_sizes.empty()) throw ContractViolation("policy: no heads");
  for (int h : c.head_sizes) {
    if (h < 1) throw ContractViolation("policy: empty head");
  }
  if (c.has_conv()) {
    if ((c.spatial_h - c.conv_kernel) % c.conv_stride != 0 ||
        (c.conv1_out_hw() - c.conv_kernel) % c.conv_stride != 0) {
      throw ContractViolation("policy: conv stages do not tile the window");
    }
  }
}

std::string head_w(int k) { return "head" + std::to_string(k) + ".w"; }
std::string head_b(int k) { return "head" + std::to_string(k) + ".b"; }

}  // namespace

nn::Params init_params(const PolicyConfig& config, Rng& rng) {
  validate(config);
  nn::Params p;
  if (config.has_conv()) {
    const int k2 = config.conv_kernel * config.conv_kernel;
    p["conv1.w"] =
        nn::glorot_uniform(config.conv1_channels, config.spatial_channels * k2, rng);
    p["conv1.b"] = nn::Mat::Zero(config.conv1_channels, 1);
    p["conv2.w"] =
        nn::glorot_uniform(config.conv2_channels, config.conv1_channels * k2, rng);
    p["conv2.b"] = nn::Mat::Zero(config.conv2_channels, 1);
  }
  p["fc1.w"] = nn::glorot_uniform(config.fc_width, config.torso_in_dim(), rng);
  p["fc1.b"] = nn::Mat::Zero(config.fc_width, 1);
  p["fc2.w"] = nn::glorot_uniform(config.fc_width, config.fc_width, rng);
  p["fc2.b"] = nn::Mat::Zero(config.fc_width, 1);
  p["lstm.w"] = nn::glorot_uniform(
      4 * config.lstm_width, config.fc_width + config.lstm_width, rng);
  p["lstm.b"] = nn::Mat::Zero(4 * config.lstm_width, 1);
  // Forget-gate bias starts at 1 so early memories survive.
  p["lstm.b"].block(config.lstm_width, 0, config.lstm_width, 1).setOnes();
  for (std::size_t k = 0; k < config.head_sizes.size(); ++k) {
    p[head_w(static_cast<int>(k))] =
        nn::glorot_uniform(config.head_sizes[k], config.lstm_width, rng);
    p[head_b(static_cast<int>(k))] = nn::Mat::Zero(config.head_sizes[k], 1);
  }
  p["value.w"] = nn::glorot_uniform(1, config.lstm_width, rng);
  p["value.b"] = nn::Mat::Zero(1, 1);
  return p;
}

Hidden zero_hidden(const PolicyConfig& config) {
  return Hidden{Eigen::VectorXd::Zero(config.lstm_width),
                Eigen::VectorXd::Zero(config.lstm_width)};
}

namespace {

// Plain-Eigen torso shared by act() and state_value(). Advances h/c.
Eigen::VectorXd torso_forward(const nn::Params& p, const PolicyConfig& c,
                              const Eigen::VectorXd& spatial,
                              const Eigen::VectorXd& flat, Eigen::VectorXd& h,
                              Eigen::VectorXd& cell) {
  Eigen::VectorXd torso_in;
  if (c.has_conv()) {
    if (spatial.size() !=
        static_cast<Eigen::Index>(c.spatial_channels) * c.spatial_h * c.spatial_w) {
      throw ContractViolation("policy: spatial size mismatch");
    }
    // Two valid strided conv + relu stages, matching Tape::conv2d layout.
    const auto conv = [&](const Eigen::VectorXd& x, const nn::Mat& w,
                          const nn::Mat& b, int in_ch, int hw) {
      const int k = c.conv_kernel, s = c.conv_stride;
      const int ohw = (hw - k) / s + 1;
      const int out_ch = static_cast<int>(w.rows());
      nn::Mat patches(in_ch * k * k, ohw * ohw);
      for (int oy = 0; oy < ohw; ++oy) {
        for (int ox = 0; ox < ohw; ++ox) {
          for (int ci = 0; ci < in_ch; ++ci) {
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                patches(ci * k * k + ky * k + kx, oy * ohw + ox) =
                    x(ci * hw * hw + (oy * s + ky) * hw + (ox * s + kx));
              }
            }
          }
        }
      }
      nn::Mat out = w * patches;
      out.colwise() += Eigen::VectorXd(b.col(0));
      Eigen::VectorXd y(out_ch * ohw * ohw);
      for (int ch = 0; ch < out_ch; ++ch) {
        for (int pp = 0; pp < ohw * ohw; ++pp) {
          y(ch * ohw * ohw + pp) = std::max(0.0, out(ch, pp));
        }
      }
      return y;
    };
    const Eigen::VectorXd c1 = conv(spatial, p.at("conv1.w"), p.at("conv1.b"),
                                    c.spatial_channels, c.spatial_h);
    const Eigen::VectorXd c2 = conv(c1, p.at("conv2.w"), p.at("conv2.b"),
                                    c.conv1_channels, c.conv1_out_hw());
    torso_in.resize(c2.size() + flat.size());
    torso_in << c2, flat;
  } else {
    torso_in = flat;
  }
  if (torso_in.size() != c.torso_in_dim()) {
    throw ContractViolation("policy: flat size mismatch");
  }

  const Eigen::VectorXd f1 =
      ((p.at("fc1.w") * torso_in + p.at("fc1.b")).array().tanh()).matrix();
  const Eigen::VectorXd f2 =
      ((p.at("fc2.w") * f1 + p.at("fc2.b")).array().tanh()).matrix();

  Eigen::VectorXd xh(f2.size() + h.size());
  xh << f2, h;
  const Eigen::VectorXd gates = p.at("lstm.w") * xh + p.at("lstm.b");
  const int L = c.lstm_width;
  const auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  Eigen::VectorXd nc(L), nh(L);
  for (int i = 0; i < L; ++i) {
    const double gi = sig(gates(i));
    const double gf = sig(gates(L + i));
    const double go = sig(gates(2 * L + i));
    const double gg = std::tanh(gates(3 * L + i));
    nc(i) = gf * cell(i) + gi * gg;
    nh(i) = go * std::tanh(nc(i));
  }
  cell = nc;
  h = nh;
  return nh;
}

}  // namespace

ActResult act(const nn::Params& params, const PolicyConfig& config,
              const Eigen::VectorXd& spatial, const Eigen::VectorXd& flat,
              const std::vector<Eigen::VectorXd>& masks, Hidden& hidden,
              Rng& rng) {
  validate(config);
  if (masks.size() != config.head_sizes.size()) {
    throw ContractViolation("policy: one mask per head required");
  }
  const Eigen::VectorXd h =
      torso_forward(params, config, spatial, flat, hidden.h, hidden.c);
  ActResult r;
  for (std::size_t k = 0; k < config.head_sizes.size(); ++k) {
    const Eigen::VectorXd logits =
        params.at(head_w(static_cast<int>(k))) * h +
        params.at(head_b(static_cast<int>(k))).col(0);
    const Eigen::VectorXd probs = nn::masked_softmax(logits, masks[k]);
    const int a = nn::sample_index(probs, rng);
    r.actions.push_back(a);
    r.logp += std::log(probs(a));
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
      if (probs(i) > 0.0) r.entropy -= probs(i) * std::log(probs(i));
    }
  }
  r.value =
      (params.at("value.w") * h + params.at("value.b").col(0))(0);
  return r;
}

double state_value(const nn::Params& params, const PolicyConfig& config,
                   const Eigen::VectorXd& spatial, const Eigen::VectorXd& flat,
                   const Hidden& hidden) {
  Eigen::VectorXd h = hidden.h, c = hidden.c;
  const Eigen::VectorXd out = torso_forward(params, config, spatial, flat, h, c);
  return (params.at("value.w") * out + params.at("value.b").col(0))(0);
}

SeqForward forward_seq(nn::Tape& tape, TapedParams& taped,
                       const nn::Params& params, const PolicyConfig& config,
                       const SeqBatch& batch) {
  validate(config);
  if (batch.seq_len < 1 || batch.batch < 1) {
    throw ContractViolation("forward_seq: empty batch");
  }

  std::map<std::string, nn::Var> leaf;
  for (const auto& [name, m] : params) {
    leaf[name] = tape.param(m);
    taped.leaves.emplace_back(name, leaf[name]);
  }

  nn::Var h = tape.constant(batch.h0);
  nn::Var c = tape.constant(batch.c0);
  const int L = config.lstm_width;

  std::vector<nn::Var> logp_steps, ent_steps, value_steps;
  for (int t = 0; t < batch.seq_len; ++t) {
    nn::Var torso_in;
    if (config.has_conv()) {
      nn::Var x = tape.constant(batch.spatial[t]);
      nn::Var c1 = tape.relu(tape.conv2d(
          x, leaf["conv1.w"], leaf["conv1.b"], config.spatial_channels,
          config.spatial_h, config.spatial_w, config.conv_kernel,
          config.conv_stride));
      nn::Var c2 = tape.relu(tape.conv2d(
          c1, leaf["conv2.w"], leaf["conv2.b"], config.conv1_channels,
          config.conv1_out_hw(), config.conv1_out_hw(), config.conv_kernel,
          config.conv_stride));
      torso_in = tape.concat_rows(c2, tape.constant(batch.flat[t]));
    } else {
      torso_in = tape.constant(batch.flat[t]);
    }
    nn::Var f1 = tape.tanh(
        tape.add_colwise(tape.matmul(leaf["fc1.w"], torso_in), leaf["fc1.b"]));
    nn::Var f2 = tape.tanh(
        tape.add_colwise(tape.matmul(leaf["fc2.w"], f1), leaf["fc2.b"]));

    nn::Var gates = tape.add_colwise(
        tape.matmul(leaf["lstm.w"], tape.concat_rows(f2, h)), leaf["lstm.b"]);
    nn::Var gi = tape.sigmoid(tape.slice_rows(gates, 0, L));
    nn::Var gf = tape.sigmoid(tape.slice_rows(gates, L, L));
    nn::Var go = tape.sigmoid(tape.slice_rows(gates, 2 * L, L));
    nn::Var gg = tape.tanh(tape.slice_rows(gates, 3 * L, L));
    c = tape.add(tape.mul(gf, c), tape.mul(gi, gg));
    h = tape.mul(go, tape.tanh(c));

    nn::Var logp_sum, ent_sum;
    for (std::size_t k = 0; k < config.head_sizes.size(); ++k) {
      nn::Var logits = tape.add_colwise(
          tape.matmul(leaf[head_w(static_cast<int>(k))], h),
          leaf[head_b(static_cast<int>(k))]);
      const nn::Mat& mask = batch.masks[t][k];
      nn::Var logp = tape.masked_log_softmax(logits, mask);
      nn::Var picked = tape.pick_rows(logp, batch.actions[t][k]);
      nn::Var ent = tape.masked_entropy(logp, mask);
      logp_sum = k == 0 ? picked : tape.add(logp_sum, picked);
      ent_sum = k == 0 ? ent : tape.add(ent_sum, ent);
    }
    logp_steps.push_back(logp_sum);
    ent_steps.push_back(ent_sum);
    value_steps.push_back(tape.add_colwise(
        tape.matmul(leaf["value.w"], h), leaf["value.b"]));
  }

  SeqForward out;
  out.logp = tape.hcat(logp_steps);
  out.entropy = tape.hcat(ent_steps);
  out.value = tape.hcat(value_steps);
  return out;
}

}  // namespace gtb::policy
