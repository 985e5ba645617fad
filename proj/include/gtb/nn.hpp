#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gtb/rng.hpp"

namespace gtb::nn {

using Mat = Eigen::MatrixXd;

// Named parameter tensors. std::map keeps iteration order deterministic,
// which matters for the global gradient norm and optimizer updates.
using Params = std::map<std::string, Mat>;
using Grads = std::map<std::string, Mat>;

// Reverse-mode tape over dense matrices; columns are batch entries
// throughout. Nodes are appended in topological order, so the backward pass
// is a reverse walk over the node list. A tape lives for one loss
// evaluation: build the graph, call backward, read leaf gradients.
class Tape {
 public:
  class Var {
   public:
    Var() = default;
    int index() const { return idx_; }
    bool valid() const { return idx_ >= 0; }

   private:
    friend class Tape;
    explicit Var(int i) : idx_(i) {}
    int idx_ = -1;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  const Mat& value(Var v) const { return nodes_[v.index()].value; }
  const Mat& grad(Var v) const { return nodes_[v.index()].grad; }

  // Leaf whose gradient the caller reads after backward (a parameter).
  Var param(const Mat& m);
  // Leaf treated as data; gradient is computed but normally ignored.
  Var constant(const Mat& m);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                 // elementwise
  Var mul_const(Var a, const Mat& c);    // elementwise by a constant
  Var scale(Var a, double s);
  Var add_colwise(Var a, Var bias);      // bias is rows x 1, broadcast over columns
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var exp(Var a);
  Var square(Var a);
  Var clamp(Var a, double lo, double hi);  // zero gradient outside (lo, hi)
  Var min_elem(Var a, Var b);              // ties take a's gradient
  Var concat_rows(Var a, Var b);
  Var slice_rows(Var a, int first_row, int num_rows);
  Var hcat(const std::vector<Var>& parts);
  // out(0, j) = a(rows[j], j); used to pull the taken action's log-prob.
  Var pick_rows(Var a, const std::vector<int>& rows);
  Var mean_all(Var a);                   // 1x1
  Var sum_all(Var a);                    // 1x1

  // Log-softmax per column over entries where mask != 0. Masked entries get
  // a large negative constant and receive exactly zero gradient. Each
  // column of the mask must allow at least one entry.
  Var masked_log_softmax(Var logits, const Mat& mask);
  // Entropy per column of a masked log-softmax output: 1 x batch.
  Var masked_entropy(Var logp, const Mat& mask);

  // Valid (no padding) strided 2D convolution via an internal patch matrix.
  // input:  (in_ch*h*w) x batch, channel-major rows.
  // weight: out_ch x (in_ch*k*k); bias: out_ch x 1.
  // output: (out_ch*oh*ow) x batch with oh = (h-k)/stride+1.
  Var conv2d(Var input, Var weight, Var bias, int in_ch, int h, int w, int k,
             int stride);

  // Seeds d(loss)/d(loss)=1 and propagates to every node. loss must be 1x1.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  Var make(Mat value, std::function<void(Tape&)> back);
  Mat& grad_ref(Var v) { return nodes_[v.index()].grad; }

  std::vector<Node> nodes_;
};

using Var = Tape::Var;

// Masked softmax probabilities for inference (no tape). Masked entries are
// exactly 0; the allowed entries sum to 1.
Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits,
                               const Eigen::VectorXd& mask);

// Samples an index from a probability vector using one uniform draw.
int sample_index(const Eigen::VectorXd& probs, Rng& rng);

// Uniform Glorot initialization, deterministic under the provided rng.
Mat glorot_uniform(int rows, int cols, Rng& rng);

double global_grad_norm(const Grads& grads);
// Scales all gradients so the global norm is at most max_norm.
void clip_global_norm(Grads& grads, double max_norm);

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Params& params, const Grads& grads);
  int updates() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::map<std::string, Mat> m_, v_;
};

// Versioned checkpoint blob: magic, config hash, then named tensors.
void save_params(const std::string& path, const Params& params,
                 std::uint64_t config_hash);
// Throws ConfigError on bad magic or hash mismatch (pass expected hash 0 to
// skip the hash check).
Params load_params(const std::string& path, std::uint64_t expected_hash);

}  // namespace gtb::nn
