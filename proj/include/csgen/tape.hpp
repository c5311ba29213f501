#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "csgen/tensor.hpp"

namespace csgen::nn {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Tensor& grad() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records forward ops and their backward rules. Nodes are appended in
// topological order, so one reverse sweep visits each exactly once.
// A tape is single-owner for the duration of one forward/backward pass.
class Tape {
 public:
  struct Node {
    Tensor value;
    Tensor grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  Var constant(Tensor v, const char* op = "constant") { return emplace(std::move(v), op); }

  Var scalar(double v) { return constant(Tensor::scalar(v), "scalar"); }

  Var zeros(std::size_t rows, std::size_t cols) { return constant(Tensor(rows, cols), "zeros"); }

  // Leaf bound to a persistent parameter; backward accumulates into p.grad.
  Var param(Parameter& p) {
    Var out = emplace(p.value, "param");
    node(out.id()).back = [id = out.id(), pp = &p](Tape& t) {
      const Tensor& g = t.node(id).grad;
      for (std::size_t i = 0; i < g.size(); ++i) pp->grad.data[i] += g.data[i];
    };
    return out;
  }

  void backward(Var root) {
    Node& r = node(root.id());
    if (r.value.size() != 1) throw ShapeError("backward root must be scalar");
    r.grad.data[0] = 1.0;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = node(i);
      if (n.back) n.back(*this);
    }
  }

  Node& node(std::size_t id) { return nodes_[id]; }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  Var emplace(Tensor value, const char* op) {
    if (!value.all_finite()) throw NumericError(std::string("non-finite value in op: ") + op);
    Node n;
    n.grad = Tensor(value.rows, value.cols);
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
  }

  Var op(Tensor value, const char* name, std::function<void(Tape&, std::size_t)> back) {
    Var out = emplace(std::move(value), name);
    node(out.id()).back = [f = std::move(back), id = out.id()](Tape& t) { f(t, id); };
    return out;
  }

 private:
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->node(id_).value; }
inline const Tensor& Var::grad() const { return tape_->node(id_).grad; }

namespace detail {

// C += A * B
inline void gemm_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      double* crow = &c.data[i * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
}

// C += A * B^T
inline void gemm_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* arow = &a.data[i * a.cols];
      const double* brow = &b.data[j * b.cols];
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      c(i, j) += acc;
    }
}

// C += A^T * B
inline void gemm_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  for (std::size_t k = 0; k < a.rows; ++k)
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      double* crow = &c.data[i * c.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
    }
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + " shape mismatch: " + a.shape_str() + " vs " +
                     b.shape_str());
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols != bv.rows)
    throw ShapeError("matmul shape mismatch: " + av.shape_str() + " x " + bv.shape_str());
  Tensor out(av.rows, bv.cols);
  detail::gemm_acc(av, bv, out);
  return a.tape().op(std::move(out), "matmul", [ia = a.id(), ib = b.id()](Tape& t, std::size_t ic) {
    const Tensor& dc = t.node(ic).grad;
    detail::gemm_nt_acc(dc, t.node(ib).value, t.node(ia).grad);  // dA += dC * B^T
    detail::gemm_tn_acc(t.node(ia).value, dc, t.node(ib).grad);  // dB += A^T * dC
  });
}

inline Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
  return a.tape().op(std::move(out), "add", [ia = a.id(), ib = b.id()](Tape& t, std::size_t ic) {
    const Tensor& dc = t.node(ic).grad;
    Tensor& da = t.node(ia).grad;
    Tensor& db = t.node(ib).grad;
    for (std::size_t i = 0; i < dc.size(); ++i) {
      da.data[i] += dc.data[i];
      db.data[i] += dc.data[i];
    }
  });
}

inline Var sub(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_same_shape(av, bv, "sub");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= bv.data[i];
  return a.tape().op(std::move(out), "sub", [ia = a.id(), ib = b.id()](Tape& t, std::size_t ic) {
    const Tensor& dc = t.node(ic).grad;
    Tensor& da = t.node(ia).grad;
    Tensor& db = t.node(ib).grad;
    for (std::size_t i = 0; i < dc.size(); ++i) {
      da.data[i] += dc.data[i];
      db.data[i] -= dc.data[i];
    }
  });
}

// Elementwise product.
inline Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_same_shape(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
  return a.tape().op(std::move(out), "mul", [ia = a.id(), ib = b.id()](Tape& t, std::size_t ic) {
    const Tensor& dc = t.node(ic).grad;
    const Tensor& av = t.node(ia).value;
    const Tensor& bv = t.node(ib).value;
    Tensor& da = t.node(ia).grad;
    Tensor& db = t.node(ib).grad;
    for (std::size_t i = 0; i < dc.size(); ++i) {
      da.data[i] += dc.data[i] * bv.data[i];
      db.data[i] += dc.data[i] * av.data[i];
    }
  });
}

inline Var scale(Var a, double k) {
  Tensor out = a.value();
  for (double& x : out.data) x *= k;
  return a.tape().op(std::move(out), "scale", [ia = a.id(), k](Tape& t, std::size_t ic) {
    const Tensor& dc = t.node(ic).grad;
    Tensor& da = t.node(ia).grad;
    for (std::size_t i = 0; i < dc.size(); ++i) da.data[i] += k * dc.data[i];
  });
}

// Adds a [1,n] row vector to every row of a [m,n] matrix.
inline Var add_rowvec(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (bv.rows != 1 || bv.cols != av.cols)
    throw ShapeError("add_rowvec shape mismatch: " + av.shape_str() + " + " + bv.shape_str());
  Tensor out = av;
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += bv.data[j];
  return a.tape().op(std::move(out), "add_rowvec",
                     [ia = a.id(), ib = b.id()](Tape& t, std::size_t ic) {
                       const Tensor& dc = t.node(ic).grad;
                       Tensor& da = t.node(ia).grad;
                       Tensor& db = t.node(ib).grad;
                       for (std::size_t i = 0; i < dc.rows; ++i)
                         for (std::size_t j = 0; j < dc.cols; ++j) {
                           da(i, j) += dc(i, j);
                           db.data[j] += dc(i, j);
                         }
                     });
}

// Multiplies row i by the constant mask[i]; used to freeze recurrent state
// past a padded sequence end.
inline Var scale_rows(Var a, std::vector<double> mask) {
  const Tensor& av = a.value();
  if (mask.size() != av.rows) throw ShapeError("scale_rows mask size mismatch");
  Tensor out = av;
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) *= mask[i];
  return a.tape().op(std::move(out), "scale_rows",
                     [ia = a.id(), mask = std::move(mask)](Tape& t, std::size_t ic) {
                       const Tensor& dc = t.node(ic).grad;
                       Tensor& da = t.node(ia).grad;
                       for (std::size_t i = 0; i < dc.rows; ++i)
                         for (std::size_t j = 0; j < dc.cols; ++j)
                           da(i, j) += dc(i, j) * mask[i];
                     });
}

inline Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
  return a.tape().op(std::move(out), "sigmoid", [ia = a.id()](Tape& t, std::size_t ic) {
    const Tensor& y = t.node(ic).value;
    const Tensor& dy = t.node(ic).grad;
    Tensor& da = t.node(ia).grad;
    for (std::size_t i = 0; i < dy.size(); ++i)
      da.data[i] += dy.data[i] * y.data[i] * (1.0 - y.data[i]);
  });
}

inline Var tanh(Var a) {
  Tensor out = a.value();
  for (double& x : out.data) x = std::tanh(x);
  return a.tape().op(std::move(out), "tanh", [ia = a.id()](Tape& t, std::size_t ic) {
    const Tensor& y = t.node(ic).value;
    const Tensor& dy = t.node(ic).grad;
    Tensor& da = t.node(ia).grad;
    for (std::size_t i = 0; i < dy.size(); ++i)
      da.data[i] += dy.data[i] * (1.0 - y.data[i] * y.data[i]);
  });
}

// Row-wise softmax with the usual max-shift for stability.
inline Var softmax_rows(Var a) {
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.rows; ++i) {
    double* row = &out.data[i * out.cols];
    double mx = row[0];
    for (std::size_t j = 1; j < out.cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < out.cols; ++j) sum += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < out.cols; ++j) row[j] /= sum;
  }
  return a.tape().op(std::move(out), "softmax", [ia = a.id()](Tape& t, std::size_t ic) {
    const Tensor& y = t.node(ic).value;
    const Tensor& dy = t.node(ic).grad;
    Tensor& da = t.node(ia).grad;
    for (std::size_t i = 0; i < y.rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols; ++j) dot += dy(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols; ++j) da(i, j) += y(i, j) * (dy(i, j) - dot);
    }
  });
}

inline Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data) s += x;
  return a.tape().op(Tensor::scalar(s), "sum", [ia = a.id()](Tape& t, std::size_t ic) {
    const double d = t.node(ic).grad.data[0];
    for (double& g : t.node(ia).grad.data) g += d;
  });
}

inline Var mean(Var a) {
  const std::size_t n = a.value().size();
  double s = 0.0;
  for (double x : a.value().data) s += x;
  return a.tape().op(Tensor::scalar(s / static_cast<double>(n)), "mean",
                     [ia = a.id(), n](Tape& t, std::size_t ic) {
                       const double d = t.node(ic).grad.data[0] / static_cast<double>(n);
                       for (double& g : t.node(ia).grad.data) g += d;
                     });
}

inline Var concat_cols(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows != bv.rows)
    throw ShapeError("concat_cols row mismatch: " + av.shape_str() + " | " + bv.shape_str());
  Tensor out(av.rows, av.cols + bv.cols);
  for (std::size_t i = 0; i < av.rows; ++i) {
    for (std::size_t j = 0; j < av.cols; ++j) out(i, j) = av(i, j);
    for (std::size_t j = 0; j < bv.cols; ++j) out(i, av.cols + j) = bv(i, j);
  }
  return a.tape().op(std::move(out), "concat_cols",
                     [ia = a.id(), ib = b.id()](Tape& t, std::size_t ic) {
                       const Tensor& dc = t.node(ic).grad;
                       Tensor& da = t.node(ia).grad;
                       Tensor& db = t.node(ib).grad;
                       for (std::size_t i = 0; i < dc.rows; ++i) {
                         for (std::size_t j = 0; j < da.cols; ++j) da(i, j) += dc(i, j);
                         for (std::size_t j = 0; j < db.cols; ++j) db(i, j) += dc(i, da.cols + j);
                       }
                     });
}

// Columns [from, to) of a.
inline Var slice_cols(Var a, std::size_t from, std::size_t to) {
  const Tensor& av = a.value();
  if (from >= to || to > av.cols)
    throw ShapeError("slice_cols range [" + std::to_string(from) + "," + std::to_string(to) +
                     ") out of " + av.shape_str());
  Tensor out(av.rows, to - from);
  for (std::size_t i = 0; i < av.rows; ++i)
    for (std::size_t j = from; j < to; ++j) out(i, j - from) = av(i, j);
  return a.tape().op(std::move(out), "slice_cols",
                     [ia = a.id(), from](Tape& t, std::size_t ic) {
                       const Tensor& dc = t.node(ic).grad;
                       Tensor& da = t.node(ia).grad;
                       for (std::size_t i = 0; i < dc.rows; ++i)
                         for (std::size_t j = 0; j < dc.cols; ++j) da(i, from + j) += dc(i, j);
                     });
}

// Gathers rows of an embedding table: table [V,E], ids length T -> [T,E].
inline Var embedding_rows(Var table, std::vector<std::uint32_t> ids) {
  const Tensor& tv = table.value();
  Tensor out(ids.size(), tv.cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= tv.rows)
      throw ShapeError("embedding id " + std::to_string(ids[i]) + " out of " + tv.shape_str());
    for (std::size_t j = 0; j < tv.cols; ++j) out(i, j) = tv(ids[i], j);
  }
  return table.tape().op(std::move(out), "embedding_rows",
                         [it = table.id(), ids = std::move(ids)](Tape& t, std::size_t ic) {
                           const Tensor& dc = t.node(ic).grad;
                           Tensor& dt = t.node(it).grad;
                           for (std::size_t i = 0; i < ids.size(); ++i)
                             for (std::size_t j = 0; j < dc.cols; ++j)
                               dt(ids[i], j) += dc(i, j);
                         });
}

// Token-level cross entropy over logits [T,V]. Positions whose target
// equals ignore_id contribute nothing. mean_reduce averages over counted
// positions, otherwise the sum is returned. Returns 0 when every position
// is ignored.
inline Var cross_entropy(Var logits, std::vector<std::uint32_t> targets,
                         std::uint32_t ignore_id = ~std::uint32_t{0}, bool mean_reduce = true) {
  const Tensor& lv = logits.value();
  if (targets.size() != lv.rows) throw ShapeError("cross_entropy target count mismatch");
  Tensor probs(lv.rows, lv.cols);
  double loss = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < lv.rows; ++i) {
    if (targets[i] != ignore_id && targets[i] >= lv.cols)
      throw ShapeError("cross_entropy target " + std::to_string(targets[i]) + " out of range");
    const double* row = &lv.data[i * lv.cols];
    double mx = row[0];
    for (std::size_t j = 1; j < lv.cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < lv.cols; ++j) sum += (probs(i, j) = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < lv.cols; ++j) probs(i, j) /= sum;
    if (targets[i] == ignore_id) continue;
    loss -= (row[targets[i]] - mx) - std::log(sum);
    ++counted;
  }
  const double denom = mean_reduce ? std::max<std::size_t>(counted, 1) : 1;
  return logits.tape().op(
      Tensor::scalar(loss / denom), "cross_entropy",
      [il = logits.id(), targets = std::move(targets), probs = std::move(probs), ignore_id,
       denom](Tape& t, std::size_t ic) {
        const double d = t.node(ic).grad.data[0] / denom;
        Tensor& dl = t.node(il).grad;
        for (std::size_t i = 0; i < probs.rows; ++i) {
          if (targets[i] == ignore_id) continue;
          for (std::size_t j = 0; j < probs.cols; ++j) dl(i, j) += d * probs(i, j);
          dl(i, targets[i]) -= d;
        }
      });
}

// Mean binary cross entropy with logits; label is 1.0 for "real", 0.0 for
// "fake". Stable softplus form.
inline Var bce_with_logits(Var logits, double label) {
  const Tensor& lv = logits.value();
  double loss = 0.0;
  for (double x : lv.data)
    loss += std::max(x, 0.0) - x * label + std::log1p(std::exp(-std::abs(x)));
  const double n = static_cast<double>(lv.size());
  return logits.tape().op(Tensor::scalar(loss / n), "bce_with_logits",
                          [il = logits.id(), label, n](Tape& t, std::size_t ic) {
                            const double d = t.node(ic).grad.data[0] / n;
                            const Tensor& x = t.node(il).value;
                            Tensor& dl = t.node(il).grad;
                            for (std::size_t i = 0; i < x.size(); ++i) {
                              const double s = 1.0 / (1.0 + std::exp(-x.data[i]));
                              dl.data[i] += d * (s - label);
                            }
                          });
}

// Mean absolute difference. Subgradient 0 at ties.
inline Var l1_loss(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_same_shape(av, bv, "l1_loss");
  double loss = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) loss += std::abs(av.data[i] - bv.data[i]);
  const double n = static_cast<double>(av.size());
  return a.tape().op(Tensor::scalar(loss / n), "l1_loss",
                     [ia = a.id(), ib = b.id(), n](Tape& t, std::size_t ic) {
                       const double d = t.node(ic).grad.data[0] / n;
                       const Tensor& av = t.node(ia).value;
                       const Tensor& bv = t.node(ib).value;
                       Tensor& da = t.node(ia).grad;
                       Tensor& db = t.node(ib).grad;
                       for (std::size_t i = 0; i < av.size(); ++i) {
                         const double s =
                             av.data[i] > bv.data[i] ? 1.0 : (av.data[i] < bv.data[i] ? -1.0 : 0.0);
                         da.data[i] += d * s;
                         db.data[i] -= d * s;
                       }
                     });
}

}  // namespace csgen::nn
