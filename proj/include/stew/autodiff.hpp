// Copyright 2026 The Stew Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Graph is a tape: nodes are appended in evaluation order, so a
// reverse sweep over node ids is a valid topological order for backward.
//
// Everything is rank 2. Sequences are (time x features); per-head attention
// uses column slices; the transducer lattice is flattened to
// (T * (U + 1)) x vocab.

#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "stew/error.hpp"
#include "stew/rng.hpp"

namespace stew {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <typename T>
class Graph {
 public:
  using Backward = std::function<void(Graph&, const Mat<T>&)>;

  Graph() = default;
  // With tracking off, leaves carry no gradient and no backward closures
  // are recorded (inference).
  explicit Graph(bool track_gradients) : track_(track_gradients) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Mat<T> value) { return push(std::move(value), nullptr, false, {}); }

  // Leaf whose gradient is collected. `value` must outlive the graph.
  Var leaf(const Mat<T>& value, std::string name = {}) {
    Var v = push(Mat<T>(), &value, track_, {});
    nodes_[v.id].name = std::move(name);
    return v;
  }

  // Leaf that owns its value (used by tests and for perturbed parameters).
  Var owned_leaf(Mat<T> value, std::string name = {}) {
    Var v = push(std::move(value), nullptr, track_, {});
    nodes_[v.id].name = std::move(name);
    return v;
  }

  Var make(Mat<T> value, bool needs_grad, Backward backward) {
    return push(std::move(value), nullptr, needs_grad, needs_grad ? std::move(backward) : Backward{});
  }

  const Mat<T>& value(Var v) const {
    const Node& n = nodes_[v.id];
    return n.ref ? *n.ref : n.value;
  }

  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  Mat<T>& grad(Var v) {
    Node& n = nodes_[v.id];
    if (!n.has_grad) {
      const Mat<T>& val = n.ref ? *n.ref : n.value;
      n.grad = Mat<T>::Zero(val.rows(), val.cols());
      n.has_grad = true;
    }
    return n.grad;
  }

  bool has_grad(Var v) const { return nodes_[v.id].has_grad; }

  // Seeds d(root)/d(root) = 1 for a 1x1 root and sweeps the tape backward.
  void backward(Var root) {
    require(value(root).size() == 1, Errc::kShapeMismatch, "backward root must be a scalar");
    grad(root).setOnes();
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.has_grad && n.backward) n.backward(*this, n.grad);
    }
  }

  // Gradients of all named leaves that received one.
  std::map<std::string, Mat<T>> named_gradients() const {
    std::map<std::string, Mat<T>> out;
    for (const Node& n : nodes_) {
      if (n.name.empty() || !n.needs_grad) continue;
      if (n.has_grad) {
        out[n.name] = n.grad;
      } else {
        const Mat<T>& val = n.ref ? *n.ref : n.value;
        out[n.name] = Mat<T>::Zero(val.rows(), val.cols());
      }
    }
    return out;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat<T> value;
    const Mat<T>* ref = nullptr;
    Mat<T> grad;
    bool has_grad = false;
    bool needs_grad = false;
    Backward backward;
    std::string name;
  };

  Var push(Mat<T> value, const Mat<T>* ref, bool needs_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.ref = ref;
    n.needs_grad = needs_grad;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  std::vector<Node> nodes_;
  bool track_ = true;
};

namespace ad {

namespace detail {

inline void check_same_shape(Eigen::Index r1, Eigen::Index c1, Eigen::Index r2, Eigen::Index c2,
                             const char* op) {
  if (r1 != r2 || c1 != c2) {
    fail(Errc::kShapeMismatch, std::string(op) + ": " + std::to_string(r1) + "x" +
                                   std::to_string(c1) + " vs " + std::to_string(r2) + "x" +
                                   std::to_string(c2));
  }
}

}  // namespace detail

template <typename T>
Var matmul(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  if (A.cols() != B.rows()) detail::check_same_shape(A.cols(), 0, B.rows(), 0, "matmul");
  Mat<T> out = A * B;
  return g.make(std::move(out), g.needs_grad(a) || g.needs_grad(b),
                [a, b](Graph<T>& g, const Mat<T>& gout) {
                  if (g.needs_grad(a)) g.grad(a).noalias() += gout * g.value(b).transpose();
                  if (g.needs_grad(b)) g.grad(b).noalias() += g.value(a).transpose() * gout;
                });
}

// a * b^T
template <typename T>
Var matmul_nt(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  if (A.cols() != B.cols()) detail::check_same_shape(A.cols(), 0, B.cols(), 0, "matmul_nt");
  Mat<T> out = A * B.transpose();
  return g.make(std::move(out), g.needs_grad(a) || g.needs_grad(b),
                [a, b](Graph<T>& g, const Mat<T>& gout) {
                  if (g.needs_grad(a)) g.grad(a).noalias() += gout * g.value(b);
                  if (g.needs_grad(b)) g.grad(b).noalias() += gout.transpose() * g.value(a);
                });
}

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  detail::check_same_shape(A.rows(), A.cols(), B.rows(), B.cols(), "add");
  return g.make(A + B, g.needs_grad(a) || g.needs_grad(b), [a, b](Graph<T>& g, const Mat<T>& gout) {
    if (g.needs_grad(a)) g.grad(a) += gout;
    if (g.needs_grad(b)) g.grad(b) += gout;
  });
}

// a + s * b
template <typename T>
Var add_scaled(Graph<T>& g, Var a, Var b, T s) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  detail::check_same_shape(A.rows(), A.cols(), B.rows(), B.cols(), "add_scaled");
  return g.make(A + s * B, g.needs_grad(a) || g.needs_grad(b),
                [a, b, s](Graph<T>& g, const Mat<T>& gout) {
                  if (g.needs_grad(a)) g.grad(a) += gout;
                  if (g.needs_grad(b)) g.grad(b) += s * gout;
                });
}

// Adds a 1 x n row to every row of a.
template <typename T>
Var add_row(Graph<T>& g, Var a, Var row) {
  const auto& A = g.value(a);
  const auto& R = g.value(row);
  detail::check_same_shape(1, A.cols(), R.rows(), R.cols(), "add_row");
  Mat<T> out = A.rowwise() + R.row(0);
  return g.make(std::move(out), g.needs_grad(a) || g.needs_grad(row),
                [a, row](Graph<T>& g, const Mat<T>& gout) {
                  if (g.needs_grad(a)) g.grad(a) += gout;
                  if (g.needs_grad(row)) g.grad(row) += gout.colwise().sum();
                });
}

template <typename T>
Var scale(Graph<T>& g, Var a, T s) {
  return g.make(g.value(a) * s, g.needs_grad(a), [a, s](Graph<T>& g, const Mat<T>& gout) {
    g.grad(a) += s * gout;
  });
}

template <typename T>
Var mul(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  detail::check_same_shape(A.rows(), A.cols(), B.rows(), B.cols(), "mul");
  Mat<T> out = A.cwiseProduct(B);
  return g.make(std::move(out), g.needs_grad(a) || g.needs_grad(b),
                [a, b](Graph<T>& g, const Mat<T>& gout) {
                  if (g.needs_grad(a)) g.grad(a) += gout.cwiseProduct(g.value(b));
                  if (g.needs_grad(b)) g.grad(b) += gout.cwiseProduct(g.value(a));
                });
}

template <typename T>
Var relu(Graph<T>& g, Var a) {
  Mat<T> out = g.value(a).cwiseMax(T(0));
  return g.make(std::move(out), g.needs_grad(a), [a](Graph<T>& g, const Mat<T>& gout) {
    g.grad(a) += (g.value(a).array() > T(0)).select(gout, T(0));
  });
}

template <typename T>
Var sigmoid(Graph<T>& g, Var a) {
  Mat<T> out = (T(1) + (-g.value(a).array()).exp()).inverse().matrix();
  Mat<T> y = out;
  return g.make(std::move(out), g.needs_grad(a), [a, y = std::move(y)](Graph<T>& g, const Mat<T>& gout) {
    g.grad(a).array() += gout.array() * y.array() * (T(1) - y.array());
  });
}

template <typename T>
Var tanh(Graph<T>& g, Var a) {
  Mat<T> out = g.value(a).array().tanh().matrix();
  Mat<T> y = out;
  return g.make(std::move(out), g.needs_grad(a), [a, y = std::move(y)](Graph<T>& g, const Mat<T>& gout) {
    g.grad(a).array() += gout.array() * (T(1) - y.array().square());
  });
}

// x * sigmoid(x)
template <typename T>
Var swish(Graph<T>& g, Var a) {
  const auto& X = g.value(a);
  Mat<T> s = (T(1) + (-X.array()).exp()).inverse().matrix();
  Mat<T> out = X.cwiseProduct(s);
  return g.make(std::move(out), g.needs_grad(a), [a, s = std::move(s)](Graph<T>& g, const Mat<T>& gout) {
    const auto& X = g.value(a);
    g.grad(a).array() +=
        gout.array() * (s.array() + X.array() * s.array() * (T(1) - s.array()));
  });
}

// Gated linear unit over columns: first half * sigmoid(second half).
template <typename T>
Var glu(Graph<T>& g, Var a) {
  const auto& X = g.value(a);
  require(X.cols() % 2 == 0, Errc::kShapeMismatch, "glu needs an even column count");
  const Eigen::Index h = X.cols() / 2;
  Mat<T> s = (T(1) + (-X.rightCols(h).array()).exp()).inverse().matrix();
  Mat<T> out = X.leftCols(h).cwiseProduct(s);
  return g.make(std::move(out), g.needs_grad(a),
                [a, h, s = std::move(s)](Graph<T>& g, const Mat<T>& gout) {
                  const auto& X = g.value(a);
                  auto& G = g.grad(a);
                  G.leftCols(h).array() += gout.array() * s.array();
                  G.rightCols(h).array() +=
                      gout.array() * X.leftCols(h).array() * s.array() * (T(1) - s.array());
                });
}

// Per-row normalization with learned 1 x d scale and shift.
template <typename T>
Var layer_norm(Graph<T>& g, Var x, Var gamma, Var beta, T eps = T(1e-5)) {
  const auto& X = g.value(x);
  const Eigen::Index n = X.rows(), d = X.cols();
  Mat<T> xhat(n, d);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = X.row(i).mean();
    const T var = (X.row(i).array() - mean).square().mean();
    inv_std(i) = T(1) / std::sqrt(var + eps);
    xhat.row(i) = (X.row(i).array() - mean) * inv_std(i);
  }
  Mat<T> out = (xhat.array().rowwise() * g.value(gamma).row(0).array()).matrix();
  out.rowwise() += g.value(beta).row(0);
  const bool ng = g.needs_grad(x) || g.needs_grad(gamma) || g.needs_grad(beta);
  return g.make(std::move(out), ng,
                [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                    Graph<T>& g, const Mat<T>& gout) {
                  if (g.needs_grad(gamma)) g.grad(gamma) += gout.cwiseProduct(xhat).colwise().sum();
                  if (g.needs_grad(beta)) g.grad(beta) += gout.colwise().sum();
                  if (!g.needs_grad(x)) return;
                  Mat<T> dxhat = (gout.array().rowwise() * g.value(gamma).row(0).array()).matrix();
                  auto& G = g.grad(x);
                  for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
                    const T m1 = dxhat.row(i).mean();
                    const T m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
                    G.row(i).array() +=
                        inv_std(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
                  }
                });
}

template <typename T>
Var softmax_rows(Graph<T>& g, Var a) {
  const auto& X = g.value(a);
  Mat<T> out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const T m = X.row(i).maxCoeff();
    out.row(i) = (X.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  Mat<T> y = out;
  return g.make(std::move(out), g.needs_grad(a), [a, y = std::move(y)](Graph<T>& g, const Mat<T>& gout) {
    auto& G = g.grad(a);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const T dot = gout.row(i).dot(y.row(i));
      G.row(i).array() += y.row(i).array() * (gout.row(i).array() - dot);
    }
  });
}

// Inverted dropout; identity when rate is 0 or no rng is supplied.
template <typename T>
Var dropout(Graph<T>& g, Var a, double rate, Rng* rng) {
  if (rate <= 0.0 || rng == nullptr) return a;
  const auto& X = g.value(a);
  std::bernoulli_distribution keep(1.0 - rate);
  const T scale = T(1.0 / (1.0 - rate));
  Mat<T> mask(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(*rng) ? scale : T(0);
  Mat<T> out = X.cwiseProduct(mask);
  return g.make(std::move(out), g.needs_grad(a), [a, mask = std::move(mask)](Graph<T>& g, const Mat<T>& gout) {
    g.grad(a) += gout.cwiseProduct(mask);
  });
}

template <typename T>
Var slice_cols(Graph<T>& g, Var a, Eigen::Index start, Eigen::Index count) {
  Mat<T> out = g.value(a).middleCols(start, count);
  return g.make(std::move(out), g.needs_grad(a), [a, start, count](Graph<T>& g, const Mat<T>& gout) {
    g.grad(a).middleCols(start, count) += gout;
  });
}

template <typename T>
Var slice_rows(Graph<T>& g, Var a, Eigen::Index start, Eigen::Index count) {
  Mat<T> out = g.value(a).middleRows(start, count);
  return g.make(std::move(out), g.needs_grad(a), [a, start, count](Graph<T>& g, const Mat<T>& gout) {
    g.grad(a).middleRows(start, count) += gout;
  });
}

template <typename T>
Var concat_cols(Graph<T>& g, const std::vector<Var>& parts) {
  Eigen::Index rows = g.value(parts.at(0)).rows(), cols = 0;
  bool ng = false;
  for (Var p : parts) {
    require(g.value(p).rows() == rows, Errc::kShapeMismatch, "concat_cols: row mismatch");
    cols += g.value(p).cols();
    ng = ng || g.needs_grad(p);
  }
  Mat<T> out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, g.value(p).cols()) = g.value(p);
    c += g.value(p).cols();
  }
  return g.make(std::move(out), ng, [parts](Graph<T>& g, const Mat<T>& gout) {
    Eigen::Index c = 0;
    for (Var p : parts) {
      const Eigen::Index w = g.value(p).cols();
      if (g.needs_grad(p)) g.grad(p) += gout.middleCols(c, w);
      c += w;
    }
  });
}

template <typename T>
Var concat_rows(Graph<T>& g, const std::vector<Var>& parts) {
  Eigen::Index cols = g.value(parts.at(0)).cols(), rows = 0;
  bool ng = false;
  for (Var p : parts) {
    require(g.value(p).cols() == cols, Errc::kShapeMismatch, "concat_rows: column mismatch");
    rows += g.value(p).rows();
    ng = ng || g.needs_grad(p);
  }
  Mat<T> out(rows, cols);
  Eigen::Index r = 0;
  for (Var p : parts) {
    out.middleRows(r, g.value(p).rows()) = g.value(p);
    r += g.value(p).rows();
  }
  return g.make(std::move(out), ng, [parts](Graph<T>& g, const Mat<T>& gout) {
    Eigen::Index r = 0;
    for (Var p : parts) {
      const Eigen::Index h = g.value(p).rows();
      if (g.needs_grad(p)) g.grad(p) += gout.middleRows(r, h);
      r += h;
    }
  });
}

// Embedding lookup: row i of the output is row ids[i] of the table.
template <typename T>
Var gather_rows(Graph<T>& g, Var table, std::vector<int> ids) {
  const auto& W = g.value(table);
  Mat<T> out(static_cast<Eigen::Index>(ids.size()), W.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < W.rows(), Errc::kInvalidArgument, "gather_rows: id out of range");
    out.row(static_cast<Eigen::Index>(i)) = W.row(ids[i]);
  }
  return g.make(std::move(out), g.needs_grad(table), [table, ids = std::move(ids)](Graph<T>& g, const Mat<T>& gout) {
    auto& G = g.grad(table);
    for (std::size_t i = 0; i < ids.size(); ++i) G.row(ids[i]) += gout.row(static_cast<Eigen::Index>(i));
  });
}

inline Eigen::Index conv_output_length(Eigen::Index length, int kernel, int stride, int pad) {
  if (length + 2 * pad < kernel) return 0;
  return (length + 2 * pad - kernel) / stride + 1;
}

// Unfolds a (time x channels) sequence into (out_time x kernel*channels)
// patches so a strided 1-D convolution becomes a single matmul.
template <typename T>
Var im2col(Graph<T>& g, Var x, int kernel, int stride, int pad) {
  const auto& X = g.value(x);
  const Eigen::Index t_in = X.rows(), c = X.cols();
  const Eigen::Index t_out = conv_output_length(t_in, kernel, stride, pad);
  Mat<T> out = Mat<T>::Zero(t_out, kernel * c);
  for (Eigen::Index i = 0; i < t_out; ++i) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = i * stride + k - pad;
      if (src >= 0 && src < t_in) out.row(i).segment(k * c, c) = X.row(src);
    }
  }
  return g.make(std::move(out), g.needs_grad(x),
                [x, kernel, stride, pad](Graph<T>& g, const Mat<T>& gout) {
                  auto& G = g.grad(x);
                  const Eigen::Index t_in = G.rows(), c = G.cols();
                  for (Eigen::Index i = 0; i < gout.rows(); ++i) {
                    for (int k = 0; k < kernel; ++k) {
                      const Eigen::Index src = i * stride + k - pad;
                      if (src >= 0 && src < t_in) G.row(src) += gout.row(i).segment(k * c, c);
                    }
                  }
                });
}

// Per-channel convolution over time with "same" zero padding.
// weight: kernel x channels, kernel odd.
template <typename T>
Var depthwise_conv1d(Graph<T>& g, Var x, Var weight) {
  const auto& X = g.value(x);
  const auto& W = g.value(weight);
  require(W.cols() == X.cols(), Errc::kShapeMismatch, "depthwise_conv1d: channel mismatch");
  const Eigen::Index t_len = X.rows();
  const int kernel = static_cast<int>(W.rows());
  const int pad = kernel / 2;
  Mat<T> out = Mat<T>::Zero(t_len, X.cols());
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = t + k - pad;
      if (src >= 0 && src < t_len) out.row(t).array() += W.row(k).array() * X.row(src).array();
    }
  }
  return g.make(std::move(out), g.needs_grad(x) || g.needs_grad(weight),
                [x, weight, kernel, pad](Graph<T>& g, const Mat<T>& gout) {
                  const auto& X = g.value(x);
                  const auto& W = g.value(weight);
                  const Eigen::Index t_len = X.rows();
                  for (Eigen::Index t = 0; t < t_len; ++t) {
                    for (int k = 0; k < kernel; ++k) {
                      const Eigen::Index src = t + k - pad;
                      if (src < 0 || src >= t_len) continue;
                      if (g.needs_grad(x)) g.grad(x).row(src).array() += W.row(k).array() * gout.row(t).array();
                      if (g.needs_grad(weight)) g.grad(weight).row(k).array() += X.row(src).array() * gout.row(t).array();
                    }
                  }
                });
}

// Pairwise sum of every row of a (n x d) with every row of b (m x d):
// output row i*m + j is a[i] + b[j].
template <typename T>
Var pairwise_add(Graph<T>& g, Var a, Var b) {
  const auto& A = g.value(a);
  const auto& B = g.value(b);
  require(A.cols() == B.cols(), Errc::kShapeMismatch, "pairwise_add: width mismatch");
  const Eigen::Index n = A.rows(), m = B.rows();
  Mat<T> out(n * m, A.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) out.row(i * m + j) = A.row(i) + B.row(j);
  }
  return g.make(std::move(out), g.needs_grad(a) || g.needs_grad(b),
                [a, b, n, m](Graph<T>& g, const Mat<T>& gout) {
                  for (Eigen::Index i = 0; i < n; ++i) {
                    for (Eigen::Index j = 0; j < m; ++j) {
                      if (g.needs_grad(a)) g.grad(a).row(i) += gout.row(i * m + j);
                      if (g.needs_grad(b)) g.grad(b).row(j) += gout.row(i * m + j);
                    }
                  }
                });
}

template <typename T>
Var sum_all(Graph<T>& g, Var a) {
  Mat<T> out(1, 1);
  out(0, 0) = g.value(a).sum();
  return g.make(std::move(out), g.needs_grad(a), [a](Graph<T>& g, const Mat<T>& gout) {
    g.grad(a).array() += gout(0, 0);
  });
}

// Sum of elementwise product with a constant; handy for reducing a tensor
// to a scalar with a fixed random projection.
template <typename T>
Var dot_const(Graph<T>& g, Var a, Mat<T> weights) {
  const auto& A = g.value(a);
  detail::check_same_shape(A.rows(), A.cols(), weights.rows(), weights.cols(), "dot_const");
  Mat<T> out(1, 1);
  out(0, 0) = A.cwiseProduct(weights).sum();
  return g.make(std::move(out), g.needs_grad(a), [a, w = std::move(weights)](Graph<T>& g, const Mat<T>& gout) {
    g.grad(a) += gout(0, 0) * w;
  });
}

template <typename T>
Var add_scalars(Graph<T>& g, const std::vector<Var>& parts, T scale_by) {
  Mat<T> out = Mat<T>::Zero(1, 1);
  bool ng = false;
  for (Var p : parts) {
    out(0, 0) += g.value(p)(0, 0);
    ng = ng || g.needs_grad(p);
  }
  out(0, 0) *= scale_by;
  return g.make(std::move(out), ng, [parts, scale_by](Graph<T>& g, const Mat<T>& gout) {
    for (Var p : parts) {
      if (g.needs_grad(p)) g.grad(p).array() += scale_by * gout(0, 0);
    }
  });
}

}  // namespace ad
}  // namespace stew
