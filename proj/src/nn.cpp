#include "gtb/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

#include "gtb/common.hpp"

namespace gtb::nn {

namespace {
// Finite stand-in for log(0) on masked entries: exp() underflows it to
// exactly 0, and anything that reads it by mistake shows up loudly.
constexpr double kMaskedLogProb = -1e30;
}  // namespace

Var Tape::make(Mat value, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(value), Mat(), std::move(back)});
  return Var(static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(const Mat& m) { return make(m, {}); }
Var Tape::constant(const Mat& m) { return make(m, {}); }

Var Tape::matmul(Var a, Var b) {
  const int ai = a.index(), bi = b.index();
  const int yi = static_cast<int>(nodes_.size());
  Mat y = nodes_[ai].value * nodes_[bi].value;
  return make(std::move(y), [ai, bi, yi](Tape& t) {
    const Mat& g = t.nodes_[yi].grad;
    t.nodes_[ai].grad.noalias() += g * t.nodes_[bi].value.transpose();
    t.nodes_[bi].grad.noalias() += t.nodes_[ai].value.transpose() * g;
  });
}

Var Tape::add(Var a, Var b) {
  const int ai = a.index(), bi = b.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value + nodes_[bi].value, [ai, bi, yi](Tape& t) {
    t.nodes_[ai].grad += t.nodes_[yi].grad;
    t.nodes_[bi].grad += t.nodes_[yi].grad;
  });
}

Var Tape::sub(Var a, Var b) {
  const int ai = a.index(), bi = b.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value - nodes_[bi].value, [ai, bi, yi](Tape& t) {
    t.nodes_[ai].grad += t.nodes_[yi].grad;
    t.nodes_[bi].grad -= t.nodes_[yi].grad;
  });
}

Var Tape::mul(Var a, Var b) {
  const int ai = a.index(), bi = b.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value.cwiseProduct(nodes_[bi].value),
              [ai, bi, yi](Tape& t) {
                const Mat& g = t.nodes_[yi].grad;
                t.nodes_[ai].grad += g.cwiseProduct(t.nodes_[bi].value);
                t.nodes_[bi].grad += g.cwiseProduct(t.nodes_[ai].value);
              });
}

Var Tape::mul_const(Var a, const Mat& c) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  auto cc = std::make_shared<Mat>(c);
  return make(nodes_[ai].value.cwiseProduct(*cc), [ai, yi, cc](Tape& t) {
    t.nodes_[ai].grad += t.nodes_[yi].grad.cwiseProduct(*cc);
  });
}

Var Tape::scale(Var a, double s) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value * s, [ai, yi, s](Tape& t) {
    t.nodes_[ai].grad += s * t.nodes_[yi].grad;
  });
}

Var Tape::add_colwise(Var a, Var bias) {
  const int ai = a.index(), bi = bias.index();
  if (nodes_[bi].value.cols() != 1 ||
      nodes_[bi].value.rows() != nodes_[ai].value.rows()) {
    throw ContractViolation("add_colwise: bias must be rows x 1");
  }
  const int yi = static_cast<int>(nodes_.size());
  Mat y = nodes_[ai].value;
  y.colwise() += Eigen::VectorXd(nodes_[bi].value.col(0));
  return make(std::move(y), [ai, bi, yi](Tape& t) {
    const Mat& g = t.nodes_[yi].grad;
    t.nodes_[ai].grad += g;
    t.nodes_[bi].grad += g.rowwise().sum();
  });
}

Var Tape::tanh(Var a) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value.array().tanh().matrix(), [ai, yi](Tape& t) {
    const Mat& y = t.nodes_[yi].value;
    t.nodes_[ai].grad.array() +=
        t.nodes_[yi].grad.array() * (1.0 - y.array().square());
  });
}

Var Tape::sigmoid(Var a) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  Mat y = (1.0 / (1.0 + (-nodes_[ai].value.array()).exp())).matrix();
  return make(std::move(y), [ai, yi](Tape& t) {
    const Mat& y = t.nodes_[yi].value;
    t.nodes_[ai].grad.array() +=
        t.nodes_[yi].grad.array() * y.array() * (1.0 - y.array());
  });
}

Var Tape::relu(Var a) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value.cwiseMax(0.0), [ai, yi](Tape& t) {
    t.nodes_[ai].grad.array() +=
        t.nodes_[yi].grad.array() *
        (t.nodes_[ai].value.array() > 0.0).cast<double>();
  });
}

Var Tape::exp(Var a) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value.array().exp().matrix(), [ai, yi](Tape& t) {
    t.nodes_[ai].grad.array() +=
        t.nodes_[yi].grad.array() * t.nodes_[yi].value.array();
  });
}

Var Tape::square(Var a) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value.array().square().matrix(), [ai, yi](Tape& t) {
    t.nodes_[ai].grad.array() +=
        2.0 * t.nodes_[yi].grad.array() * t.nodes_[ai].value.array();
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value.cwiseMax(lo).cwiseMin(hi),
              [ai, yi, lo, hi](Tape& t) {
                const auto& x = t.nodes_[ai].value.array();
                t.nodes_[ai].grad.array() +=
                    t.nodes_[yi].grad.array() *
                    ((x > lo) && (x < hi)).cast<double>();
              });
}

Var Tape::min_elem(Var a, Var b) {
  const int ai = a.index(), bi = b.index();
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value.cwiseMin(nodes_[bi].value),
              [ai, bi, yi](Tape& t) {
                const auto pick_a = (t.nodes_[ai].value.array() <=
                                     t.nodes_[bi].value.array())
                                        .cast<double>();
                t.nodes_[ai].grad.array() +=
                    t.nodes_[yi].grad.array() * pick_a;
                t.nodes_[bi].grad.array() +=
                    t.nodes_[yi].grad.array() * (1.0 - pick_a);
              });
}

Var Tape::concat_rows(Var a, Var b) {
  const int ai = a.index(), bi = b.index();
  const Mat& va = nodes_[ai].value;
  const Mat& vb = nodes_[bi].value;
  if (va.cols() != vb.cols()) {
    throw ContractViolation("concat_rows: column mismatch");
  }
  const int yi = static_cast<int>(nodes_.size());
  Mat y(va.rows() + vb.rows(), va.cols());
  y.topRows(va.rows()) = va;
  y.bottomRows(vb.rows()) = vb;
  return make(std::move(y), [ai, bi, yi](Tape& t) {
    const Mat& g = t.nodes_[yi].grad;
    const auto ra = t.nodes_[ai].value.rows();
    t.nodes_[ai].grad += g.topRows(ra);
    t.nodes_[bi].grad += g.bottomRows(t.nodes_[bi].value.rows());
  });
}

Var Tape::slice_rows(Var a, int first_row, int num_rows) {
  const int ai = a.index();
  if (first_row < 0 || num_rows < 1 ||
      first_row + num_rows > nodes_[ai].value.rows()) {
    throw ContractViolation("slice_rows: out of range");
  }
  const int yi = static_cast<int>(nodes_.size());
  return make(nodes_[ai].value.middleRows(first_row, num_rows),
              [ai, yi, first_row, num_rows](Tape& t) {
                t.nodes_[ai].grad.middleRows(first_row, num_rows) +=
                    t.nodes_[yi].grad;
              });
}

Var Tape::hcat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractViolation("hcat: empty");
  std::vector<int> idx;
  idx.reserve(parts.size());
  Eigen::Index rows = nodes_[parts[0].index()].value.rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (nodes_[p.index()].value.rows() != rows) {
      throw ContractViolation("hcat: row mismatch");
    }
    cols += nodes_[p.index()].value.cols();
    idx.push_back(p.index());
  }
  const int yi = static_cast<int>(nodes_.size());
  Mat y(rows, cols);
  Eigen::Index at = 0;
  for (int i : idx) {
    y.middleCols(at, nodes_[i].value.cols()) = nodes_[i].value;
    at += nodes_[i].value.cols();
  }
  return make(std::move(y), [idx, yi](Tape& t) {
    Eigen::Index at = 0;
    for (int i : idx) {
      const auto c = t.nodes_[i].value.cols();
      t.nodes_[i].grad += t.nodes_[yi].grad.middleCols(at, c);
      at += c;
    }
  });
}

Var Tape::pick_rows(Var a, const std::vector<int>& rows) {
  const int ai = a.index();
  const Mat& va = nodes_[ai].value;
  if (static_cast<Eigen::Index>(rows.size()) != va.cols()) {
    throw ContractViolation("pick_rows: one row index per column required");
  }
  const int yi = static_cast<int>(nodes_.size());
  Mat y(1, va.cols());
  for (Eigen::Index j = 0; j < va.cols(); ++j) {
    if (rows[j] < 0 || rows[j] >= va.rows()) {
      throw ContractViolation("pick_rows: index out of range");
    }
    y(0, j) = va(rows[j], j);
  }
  auto rr = std::make_shared<std::vector<int>>(rows);
  return make(std::move(y), [ai, yi, rr](Tape& t) {
    const Mat& g = t.nodes_[yi].grad;
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      t.nodes_[ai].grad((*rr)[j], j) += g(0, j);
    }
  });
}

Var Tape::mean_all(Var a) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  Mat y(1, 1);
  y(0, 0) = nodes_[ai].value.mean();
  return make(std::move(y), [ai, yi](Tape& t) {
    const double g = t.nodes_[yi].grad(0, 0);
    t.nodes_[ai].grad.array() += g / t.nodes_[ai].value.size();
  });
}

Var Tape::sum_all(Var a) {
  const int ai = a.index();
  const int yi = static_cast<int>(nodes_.size());
  Mat y(1, 1);
  y(0, 0) = nodes_[ai].value.sum();
  return make(std::move(y), [ai, yi](Tape& t) {
    t.nodes_[ai].grad.array() += t.nodes_[yi].grad(0, 0);
  });
}

Var Tape::masked_log_softmax(Var logits, const Mat& mask) {
  const int ai = logits.index();
  const Mat& x = nodes_[ai].value;
  if (mask.rows() != x.rows() || mask.cols() != x.cols()) {
    throw ContractViolation("masked_log_softmax: mask shape mismatch");
  }
  Mat y(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (mask(i, j) != 0.0) mx = std::max(mx, x(i, j));
    }
    if (!std::isfinite(mx)) {
      throw ContractViolation("masked_log_softmax: all actions masked");
    }
    double lse = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (mask(i, j) != 0.0) lse += std::exp(x(i, j) - mx);
    }
    lse = std::log(lse) + mx;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      y(i, j) = mask(i, j) != 0.0 ? x(i, j) - lse : kMaskedLogProb;
    }
  }
  const int yi = static_cast<int>(nodes_.size());
  auto mm = std::make_shared<Mat>(mask);
  return make(std::move(y), [ai, yi, mm](Tape& t) {
    const Mat& g = t.nodes_[yi].grad;
    const Mat& y = t.nodes_[yi].value;
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      double gsum = 0.0;
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        if ((*mm)(i, j) != 0.0) gsum += g(i, j);
      }
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        if ((*mm)(i, j) != 0.0) {
          t.nodes_[ai].grad(i, j) += g(i, j) - std::exp(y(i, j)) * gsum;
        }
      }
    }
  });
}

Var Tape::masked_entropy(Var logp, const Mat& mask) {
  const int ai = logp.index();
  const Mat& lp = nodes_[ai].value;
  if (mask.rows() != lp.rows() || mask.cols() != lp.cols()) {
    throw ContractViolation("masked_entropy: mask shape mismatch");
  }
  Mat y(1, lp.cols());
  for (Eigen::Index j = 0; j < lp.cols(); ++j) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < lp.rows(); ++i) {
      if (mask(i, j) != 0.0) h -= std::exp(lp(i, j)) * lp(i, j);
    }
    y(0, j) = h;
  }
  const int yi = static_cast<int>(nodes_.size());
  auto mm = std::make_shared<Mat>(mask);
  return make(std::move(y), [ai, yi, mm](Tape& t) {
    const Mat& g = t.nodes_[yi].grad;
    const Mat& lp = t.nodes_[ai].value;
    for (Eigen::Index j = 0; j < lp.cols(); ++j) {
      for (Eigen::Index i = 0; i < lp.rows(); ++i) {
        if ((*mm)(i, j) != 0.0) {
          const double p = std::exp(lp(i, j));
          t.nodes_[ai].grad(i, j) += g(0, j) * (-p * (lp(i, j) + 1.0));
        }
      }
    }
  });
}

Var Tape::conv2d(Var input, Var weight, Var bias, int in_ch, int h, int w,
                 int k, int stride) {
  const int xi = input.index(), wi = weight.index(), bi = bias.index();
  const Mat& x = nodes_[xi].value;
  const int oh = (h - k) / stride + 1;
  const int ow = (w - k) / stride + 1;
  const int out_ch = static_cast<int>(nodes_[wi].value.rows());
  if (x.rows() != static_cast<Eigen::Index>(in_ch) * h * w) {
    throw ContractViolation("conv2d: input rows mismatch");
  }
  if (nodes_[wi].value.cols() != static_cast<Eigen::Index>(in_ch) * k * k) {
    throw ContractViolation("conv2d: weight cols mismatch");
  }
  if ((h - k) % stride != 0 || (w - k) % stride != 0) {
    throw ContractViolation("conv2d: size/stride mismatch");
  }
  const auto batch = x.cols();

  // Patch matrix: one column per (batch, output position).
  auto patches =
      std::make_shared<Mat>(in_ch * k * k, static_cast<Eigen::Index>(oh) * ow * batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const Eigen::Index col = b * oh * ow + oy * ow + ox;
        for (int ci = 0; ci < in_ch; ++ci) {
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
              (*patches)(ci * k * k + ky * k + kx, col) =
                  x(ci * h * w + (oy * stride + ky) * w + (ox * stride + kx), b);
            }
          }
        }
      }
    }
  }

  Mat flat = nodes_[wi].value * (*patches);  // out_ch x (oh*ow*batch)
  flat.colwise() += Eigen::VectorXd(nodes_[bi].value.col(0));
  Mat y(static_cast<Eigen::Index>(out_ch) * oh * ow, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int c = 0; c < out_ch; ++c) {
      for (int p = 0; p < oh * ow; ++p) {
        y(static_cast<Eigen::Index>(c) * oh * ow + p, b) =
            flat(c, b * oh * ow + p);
      }
    }
  }

  const int yi = static_cast<int>(nodes_.size());
  return make(std::move(y), [xi, wi, bi, yi, patches, in_ch, h, w, k, stride,
                             oh, ow, out_ch](Tape& t) {
    const Mat& g = t.nodes_[yi].grad;
    const auto batch = g.cols();
    Mat gflat(out_ch, static_cast<Eigen::Index>(oh) * ow * batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (int c = 0; c < out_ch; ++c) {
        for (int p = 0; p < oh * ow; ++p) {
          gflat(c, b * oh * ow + p) =
              g(static_cast<Eigen::Index>(c) * oh * ow + p, b);
        }
      }
    }
    t.nodes_[wi].grad.noalias() += gflat * patches->transpose();
    t.nodes_[bi].grad += gflat.rowwise().sum();
    const Mat gpatches = t.nodes_[wi].value.transpose() * gflat;
    Mat& gx = t.nodes_[xi].grad;
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const Eigen::Index col = b * oh * ow + oy * ow + ox;
          for (int ci = 0; ci < in_ch; ++ci) {
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                gx(ci * h * w + (oy * stride + ky) * w + (ox * stride + kx),
                   b) += gpatches(ci * k * k + ky * k + kx, col);
              }
            }
          }
        }
      }
    }
  });
}

void Tape::backward(Var loss) {
  if (nodes_[loss.index()].value.size() != 1) {
    throw ContractViolation("backward: loss must be 1x1");
  }
  for (Node& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  nodes_[loss.index()].grad(0, 0) = 1.0;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

Eigen::VectorXd masked_softmax(const Eigen::VectorXd& logits,
                               const Eigen::VectorXd& mask) {
  if (logits.size() != mask.size()) {
    throw ContractViolation("masked_softmax: size mismatch");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask(i) != 0.0) mx = std::max(mx, logits(i));
  }
  if (!std::isfinite(mx)) {
    throw ContractViolation("masked_softmax: all actions masked");
  }
  Eigen::VectorXd p = Eigen::VectorXd::Zero(logits.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (mask(i) != 0.0) {
      p(i) = std::exp(logits(i) - mx);
      total += p(i);
    }
  }
  p /= total;
  return p;
}

int sample_index(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last_positive = -1;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    last_positive = static_cast<int>(i);
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  if (last_positive < 0) throw ContractViolation("sample_index: no mass");
  return last_positive;  // rounding left acc slightly below 1
}

Mat glorot_uniform(int rows, int cols, Rng& rng) {
  const double a = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, j) = uniform_real(rng, -a, a);
    }
  }
  return m;
}

double global_grad_norm(const Grads& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

void clip_global_norm(Grads& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& [name, g] : grads) g *= s;
  }
}

void Adam::step(Params& params, const Grads& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (auto& [name, p] : params) {
    const auto it = grads.find(name);
    if (it == grads.end()) throw ContractViolation("Adam: missing grad " + name);
    const Mat& g = it->second;
    Mat& m = m_.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
    Mat& v = v_.try_emplace(name, Mat::Zero(p.rows(), p.cols())).first->second;
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    p.array() -= lr_ * (m.array() / bc1) /
                 ((v.array() / bc2).sqrt() + eps_);
  }
}

void save_params(const std::string& path, const Params& params,
                 std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
  const char magic[8] = {'G', 'T', 'B', 'C', 'K', 'P', 'T', '1'};
  out.write(magic, 8);
  out.write(reinterpret_cast<const char*>(&config_hash), 8);
  const std::uint64_t count = params.size();
  out.write(reinterpret_cast<const char*>(&count), 8);
  for (const auto& [name, m] : params) {
    const std::uint64_t len = name.size();
    const std::int64_t rows = m.rows(), cols = m.cols();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(name.data(), static_cast<std::streamsize>(len));
    out.write(reinterpret_cast<const char*>(&rows), 8);
    out.write(reinterpret_cast<const char*>(&cols), 8);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double)) * m.size());
  }
  if (!out) throw ConfigError("checkpoint write failed: " + path);
}

Params load_params(const std::string& path, std::uint64_t expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "GTBCKPT1", 8) != 0) {
    throw ConfigError("bad checkpoint magic: " + path);
  }
  std::uint64_t hash = 0, count = 0;
  in.read(reinterpret_cast<char*>(&hash), 8);
  if (expected_hash != 0 && hash != expected_hash) {
    throw ConfigError("checkpoint config hash mismatch: " + path);
  }
  in.read(reinterpret_cast<char*>(&count), 8);
  Params params;
  for (std::uint64_t i = 0; i < count && in; ++i) {
    std::uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    if (len > 4096) throw ConfigError("checkpoint name too long: " + path);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    std::int64_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), 8);
    in.read(reinterpret_cast<char*>(&cols), 8);
    if (rows < 0 || cols < 0 || rows * cols > (1ll << 28)) {
      throw ConfigError("checkpoint tensor too large: " + path);
    }
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double)) * m.size());
    params.emplace(std::move(name), std::move(m));
  }
  if (!in) throw ConfigError("truncated checkpoint: " + path);
  return params;
}

}  // namespace gtb::nn
