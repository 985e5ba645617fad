#pragma once

#include <cstdint>
#include <vector>

#include "gtb/nn.hpp"
#include "gtb/rng.hpp"

namespace gtb::policy {

// One recurrent actor network. Agents and the planner share this shape:
// optional conv stack over an egocentric spatial window, two fully
// connected stages, an LSTM cell, then one logits head per action subspace
// plus a scalar value head. Agents use a single subspace; the planner uses
// one subspace per tax bracket.
struct PolicyConfig {
  int spatial_channels = 0;  // 0 disables the conv branch
  int spatial_h = 0;
  int spatial_w = 0;
  int conv1_channels = 4;
  int conv2_channels = 8;
  int conv_kernel = 3;
  int conv_stride = 2;
  int flat_dim = 0;
  int fc_width = 32;
  int lstm_width = 32;
  std::vector<int> head_sizes;

  bool has_conv() const { return spatial_channels > 0; }
  int conv1_out_hw() const {
    return (spatial_h - conv_kernel) / conv_stride + 1;
  }
  int conv2_out_hw() const {
    return (conv1_out_hw() - conv_kernel) / conv_stride + 1;
  }
  int conv_flat_dim() const {
    return has_conv() ? conv2_channels * conv2_out_hw() * conv2_out_hw() : 0;
  }
  int torso_in_dim() const { return conv_flat_dim() + flat_dim; }
};

nn::Params init_params(const PolicyConfig& config, Rng& rng);

struct Hidden {
  Eigen::VectorXd h, c;
};

Hidden zero_hidden(const PolicyConfig& config);

struct ActResult {
  std::vector<int> actions;  // one per head
  double logp = 0.0;         // summed over heads
  double value = 0.0;
  double entropy = 0.0;      // summed over heads
};

// Samples one step and advances the hidden state in place. masks[k] has
// head_sizes[k] entries of 0/1; masked actions have probability exactly 0.
// spatial may be empty when the config has no conv branch.
ActResult act(const nn::Params& params, const PolicyConfig& config,
              const Eigen::VectorXd& spatial, const Eigen::VectorXd& flat,
              const std::vector<Eigen::VectorXd>& masks, Hidden& hidden,
              Rng& rng);

// Value of a state without sampling (bootstrap values at rollout ends).
double state_value(const nn::Params& params, const PolicyConfig& config,
                   const Eigen::VectorXd& spatial, const Eigen::VectorXd& flat,
                   const Hidden& hidden);

// One minibatch of sequences in lockstep for truncated-BPTT training.
// Step t of sequence s corresponds to column s of the step-t matrices;
// flattened outputs use column t*batch + s.
struct SeqBatch {
  int seq_len = 0;
  int batch = 0;
  std::vector<nn::Mat> spatial;                    // per step; empty if no conv
  std::vector<nn::Mat> flat;                       // per step
  std::vector<std::vector<nn::Mat>> masks;         // per step, per head
  std::vector<std::vector<std::vector<int>>> actions;  // per step, per head
  nn::Mat h0, c0;                                  // lstm_width x batch
};

struct SeqForward {
  nn::Var logp;     // 1 x (seq_len*batch), taken-action log-prob per step
  nn::Var entropy;  // 1 x (seq_len*batch)
  nn::Var value;    // 1 x (seq_len*batch)
};

// Tape forward over a sequence batch; param leaves are created on the tape
// and returned through leaf_of for gradient readout.
struct TapedParams {
  std::vector<std::pair<std::string, nn::Var>> leaves;
};

SeqForward forward_seq(nn::Tape& tape, TapedParams& taped,
                       const nn::Params& params, const PolicyConfig& config,
                       const SeqBatch& batch);

}  // namespace gtb::policy
