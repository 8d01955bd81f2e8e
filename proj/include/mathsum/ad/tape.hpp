#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mathsum/errors.hpp"

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Tape records every operation of one forward pass; backward()
// replays them in reverse and accumulates gradients. Parameter leaves write
// their gradients straight into caller-owned buffers.
namespace mathsum::ad {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
class Tape;

template <class T>
struct Var {
  Tape<T>* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr; }
  const Matrix<T>& value() const { return tape->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  T scalar() const { return value()(0, 0); }
};

template <class T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix<T>&)>;

  // With record == false no backward closures are kept (inference mode).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var<T> constant(Matrix<T> value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
  }

  // Leaf that reads `value` in place. When `grad_sink` is non-null and the
  // tape records, gradients are added into it (same shape as value).
  Var<T> parameter(const Matrix<T>& value, Matrix<T>* grad_sink) {
    Node n;
    n.ref = &value;
    n.sink = record_ ? grad_sink : nullptr;
    n.needs_grad = n.sink != nullptr;
    return push(std::move(n));
  }

  // Records an operation. `inputs` decide whether the result needs a gradient.
  Var<T> record(Matrix<T> value, std::initializer_list<Var<T>> inputs, BackwardFn fn) {
    return record(std::move(value), std::span<const Var<T>>(inputs.begin(), inputs.size()), std::move(fn));
  }

  Var<T> record(Matrix<T> value, std::span<const Var<T>> inputs, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    if (record_) {
      for (const auto& in : inputs) n.needs_grad = n.needs_grad || nodes_[static_cast<std::size_t>(in.id)].needs_grad;
      if (n.needs_grad) n.backward = std::move(fn);
    }
    return push(std::move(n));
  }

  const Matrix<T>& value(Var<T> v) const { return nodes_[static_cast<std::size_t>(v.id)].get(); }

  bool needs_grad(Var<T> v) const { return nodes_[static_cast<std::size_t>(v.id)].needs_grad; }

  // Gradient buffer of v, zero-initialised on first access.
  Matrix<T>& grad(Var<T> v) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.sink) return *n.sink;
    if (n.grad.size() == 0) n.grad = Matrix<T>::Zero(n.get().rows(), n.get().cols());
    return n.grad;
  }

  void backward(Var<T> root, T seed = T(1)) {
    if (!record_) throw ValidationError("backward on a non-recording tape");
    const Matrix<T>& rv = value(root);
    if (rv.rows() != 1 || rv.cols() != 1) throw ShapeMismatchError("backward root must be a scalar");
    if (!needs_grad(root)) return;
    grad(root)(0, 0) += seed;
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (!n.backward || n.grad.size() == 0) continue;
      n.backward(*this, n.grad);
    }
  }

 private:
  struct Node {
    Matrix<T> value;
    const Matrix<T>* ref = nullptr;
    Matrix<T> grad;
    Matrix<T>* sink = nullptr;
    BackwardFn backward;
    bool needs_grad = false;

    const Matrix<T>& get() const { return ref ? *ref : value; }
  };

  Var<T> push(Node n) {
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size() - 1)};
  }

  bool record_;
  std::deque<Node> nodes_;
};

// ---- operations -----------------------------------------------------------

namespace detail {

template <class T>
void check_same_tape(Var<T> a, Var<T> b) {
  if (a.tape != b.tape) throw ValidationError("vars from different tapes");
}

template <class T>
void require_shape(bool ok, const char* what) {
  if (!ok) throw ShapeMismatchError(what);
}

}  // namespace detail

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  detail::require_shape<T>(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix<T> out = a.value() * b.value();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    if (t.needs_grad(a)) t.grad(a).noalias() += g * t.value(b).transpose();
    if (t.needs_grad(b)) t.grad(b).noalias() += t.value(a).transpose() * g;
  });
}

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  detail::require_shape<T>(a.rows() == b.rows() && a.cols() == b.cols(), "add: shapes differ");
  Matrix<T> out = a.value() + b.value();
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    if (t.needs_grad(a)) t.grad(a) += g;
    if (t.needs_grad(b)) t.grad(b) += g;
  });
}

// a (m x n) plus row vector b (1 x n) broadcast over rows.
template <class T>
Var<T> add_row(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  detail::require_shape<T>(b.rows() == 1 && a.cols() == b.cols(), "add_row: shapes differ");
  Matrix<T> out = a.value().rowwise() + b.value().row(0);
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    if (t.needs_grad(a)) t.grad(a) += g;
    if (t.needs_grad(b)) t.grad(b) += g.colwise().sum();
  });
}

template <class T>
Var<T> hadamard(Var<T> a, Var<T> b) {
  detail::check_same_tape(a, b);
  detail::require_shape<T>(a.rows() == b.rows() && a.cols() == b.cols(), "hadamard: shapes differ");
  Matrix<T> out = a.value().cwiseProduct(b.value());
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Matrix<T>& g) {
    if (t.needs_grad(a)) t.grad(a) += g.cwiseProduct(t.value(b));
    if (t.needs_grad(b)) t.grad(b) += g.cwiseProduct(t.value(a));
  });
}

template <class T>
Var<T> scale(Var<T> a, T c) {
  Matrix<T> out = a.value() * c;
  return a.tape->record(std::move(out), {a}, [a, c](Tape<T>& t, const Matrix<T>& g) { t.grad(a) += g * c; });
}

// a scaled by the 1x1 variable s.
template <class T>
Var<T> scale_by(Var<T> a, Var<T> s) {
  detail::check_same_tape(a, s);
  detail::require_shape<T>(s.rows() == 1 && s.cols() == 1, "scale_by: scale must be 1x1");
  Matrix<T> out = a.value() * s.scalar();
  return a.tape->record(std::move(out), {a, s}, [a, s](Tape<T>& t, const Matrix<T>& g) {
    if (t.needs_grad(a)) t.grad(a) += g * t.value(s)(0, 0);
    if (t.needs_grad(s)) t.grad(s)(0, 0) += g.cwiseProduct(t.value(a)).sum();
  });
}

template <class T>
Var<T> one_minus(Var<T> a) {
  Matrix<T> out = (T(1) - a.value().array()).matrix();
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Matrix<T>& g) { t.grad(a) -= g; });
}

template <class T>
Var<T> tanh(Var<T> a) {
  Matrix<T> out = a.value().array().tanh().matrix();
  Matrix<T> y = out;
  return a.tape->record(std::move(out), {a}, [a, y = std::move(y)](Tape<T>& t, const Matrix<T>& g) {
    t.grad(a) += g.cwiseProduct((T(1) - y.array().square()).matrix());
  });
}

template <class T>
Var<T> sigmoid(Var<T> a) {
  Matrix<T> out = (T(1) / (T(1) + (-a.value().array()).exp())).matrix();
  Matrix<T> y = out;
  return a.tape->record(std::move(out), {a}, [a, y = std::move(y)](Tape<T>& t, const Matrix<T>& g) {
    t.grad(a) += (g.array() * y.array() * (T(1) - y.array())).matrix();
  });
}

template <class T>
Var<T> relu(Var<T> a) {
  Matrix<T> out = a.value().cwiseMax(T(0));
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Matrix<T>& g) {
    t.grad(a) += (t.value(a).array() > T(0)).select(g, T(0)).matrix();
  });
}

template <class T>
Var<T> transpose(Var<T> a) {
  Matrix<T> out = a.value().transpose();
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Matrix<T>& g) { t.grad(a) += g.transpose(); });
}

// Row-wise softmax. Columns with mask[c] == true get probability 0 in every row.
template <class T>
Var<T> softmax_rows(Var<T> a, std::span<const bool> mask = {}) {
  const Matrix<T>& x = a.value();
  if (!mask.empty()) detail::require_shape<T>(static_cast<Eigen::Index>(mask.size()) == x.cols(), "softmax mask size");
  Matrix<T> out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    T mx = -std::numeric_limits<T>::infinity();
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (mask.empty() || !mask[static_cast<std::size_t>(c)]) mx = std::max(mx, x(r, c));
    }
    T sum = 0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const bool off = !mask.empty() && mask[static_cast<std::size_t>(c)];
      out(r, c) = off ? T(0) : std::exp(x(r, c) - mx);
      sum += out(r, c);
    }
    out.row(r) /= sum;
  }
  Matrix<T> y = out;
  return a.tape->record(std::move(out), {a}, [a, y = std::move(y)](Tape<T>& t, const Matrix<T>& g) {
    const Eigen::Matrix<T, Eigen::Dynamic, 1> dot = g.cwiseProduct(y).rowwise().sum();
    Matrix<T> d = y.cwiseProduct(g.colwise() - dot);
    t.grad(a) += d;
  });
}

// Layer normalisation of each row: gamma * (x - mean) / sqrt(var + eps) + beta.
template <class T>
Var<T> layer_norm_rows(Var<T> x, Var<T> gamma, Var<T> beta, T eps = T(1e-5)) {
  detail::check_same_tape(x, gamma);
  detail::check_same_tape(x, beta);
  const Matrix<T>& xv = x.value();
  const Eigen::Index n = xv.cols();
  detail::require_shape<T>(gamma.cols() == n && beta.cols() == n && gamma.rows() == 1 && beta.rows() == 1,
                           "layer_norm: parameter shape");
  Matrix<T> xhat(xv.rows(), n);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const T mean = xv.row(r).mean();
    const T var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = T(1) / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix<T> out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  return x.tape->record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& t, const Matrix<T>& g) {
        if (t.needs_grad(gamma)) t.grad(gamma) += g.cwiseProduct(xhat).colwise().sum();
        if (t.needs_grad(beta)) t.grad(beta) += g.colwise().sum();
        if (t.needs_grad(x)) {
          const T n_cols = static_cast<T>(xhat.cols());
          Matrix<T> dxhat = (g.array().rowwise() * t.value(gamma).row(0).array()).matrix();
          Matrix<T>& gx = t.grad(x);
          for (Eigen::Index r = 0; r < xhat.rows(); ++r) {
            const T m1 = dxhat.row(r).sum() / n_cols;
            const T m2 = dxhat.row(r).dot(xhat.row(r)) / n_cols;
            gx.row(r).array() += inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
          }
        }
      });
}

template <class T>
Var<T> concat_cols(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeMismatchError("concat_cols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    detail::check_same_tape(parts[0], p);
    detail::require_shape<T>(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  std::vector<Var<T>> ins(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [ins](Tape<T>& t, const Matrix<T>& g) {
    Eigen::Index c = 0;
    for (const auto& p : ins) {
      const Eigen::Index w = t.value(p).cols();
      if (t.needs_grad(p)) t.grad(p) += g.middleCols(c, w);
      c += w;
    }
  });
}

template <class T>
Var<T> concat_cols(std::initializer_list<Var<T>> parts) {
  return concat_cols(std::span<const Var<T>>(parts.begin(), parts.size()));
}

template <class T>
Var<T> concat_rows(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeMismatchError("concat_rows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    detail::check_same_tape(parts[0], p);
    detail::require_shape<T>(p.cols() == cols, "concat_rows: column counts differ");
    rows += p.rows();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var<T>> ins(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [ins](Tape<T>& t, const Matrix<T>& g) {
    Eigen::Index r = 0;
    for (const auto& p : ins) {
      const Eigen::Index h = t.value(p).rows();
      if (t.needs_grad(p)) t.grad(p) += g.middleRows(r, h);
      r += h;
    }
  });
}

template <class T>
Var<T> slice_rows(Var<T> a, Eigen::Index start, Eigen::Index count) {
  detail::require_shape<T>(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: out of range");
  Matrix<T> out = a.value().middleRows(start, count);
  return a.tape->record(std::move(out), {a}, [a, start, count](Tape<T>& t, const Matrix<T>& g) {
    t.grad(a).middleRows(start, count) += g;
  });
}

template <class T>
Var<T> slice_cols(Var<T> a, Eigen::Index start, Eigen::Index count) {
  detail::require_shape<T>(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  Matrix<T> out = a.value().middleCols(start, count);
  return a.tape->record(std::move(out), {a}, [a, start, count](Tape<T>& t, const Matrix<T>& g) {
    t.grad(a).middleCols(start, count) += g;
  });
}

// Row lookup: out.row(k) = table.row(ids[k]).
template <class T>
Var<T> gather_rows(Var<T> table, std::vector<int> ids) {
  const Matrix<T>& tv = table.value();
  Matrix<T> out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    detail::require_shape<T>(ids[k] >= 0 && ids[k] < tv.rows(), "gather_rows: id out of range");
    out.row(static_cast<Eigen::Index>(k)) = tv.row(ids[k]);
  }
  return table.tape->record(std::move(out), {table}, [table, ids = std::move(ids)](Tape<T>& t, const Matrix<T>& g) {
    Matrix<T>& gt = t.grad(table);
    for (std::size_t k = 0; k < ids.size(); ++k) gt.row(ids[k]) += g.row(static_cast<Eigen::Index>(k));
  });
}

// Elementwise product with a fixed mask (dropout with pre-scaled mask).
template <class T>
Var<T> mask_multiply(Var<T> a, Matrix<T> mask) {
  detail::require_shape<T>(mask.rows() == a.rows() && mask.cols() == a.cols(), "mask_multiply: shapes differ");
  Matrix<T> out = a.value().cwiseProduct(mask);
  return a.tape->record(std::move(out), {a}, [a, mask = std::move(mask)](Tape<T>& t, const Matrix<T>& g) {
    t.grad(a) += g.cwiseProduct(mask);
  });
}

// Row vector a (1 x n) widened to (1 x width) with zeros.
template <class T>
Var<T> pad_cols(Var<T> a, Eigen::Index width) {
  detail::require_shape<T>(a.rows() == 1 && width >= a.cols(), "pad_cols: bad width");
  Matrix<T> out = Matrix<T>::Zero(1, width);
  out.leftCols(a.cols()) = a.value();
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Matrix<T>& g) {
    t.grad(a) += g.leftCols(t.value(a).cols());
  });
}

// Row vector w (1 x n) summed into a (1 x width) row at columns index[i].
template <class T>
Var<T> scatter_cols(Var<T> w, std::vector<int> index, Eigen::Index width) {
  detail::require_shape<T>(w.rows() == 1 && static_cast<Eigen::Index>(index.size()) == w.cols(),
                           "scatter_cols: index size");
  Matrix<T> out = Matrix<T>::Zero(1, width);
  for (std::size_t i = 0; i < index.size(); ++i) {
    detail::require_shape<T>(index[i] >= 0 && index[i] < width, "scatter_cols: index out of range");
    out(0, index[i]) += w.value()(0, static_cast<Eigen::Index>(i));
  }
  return w.tape->record(std::move(out), {w}, [w, index = std::move(index)](Tape<T>& t, const Matrix<T>& g) {
    Matrix<T>& gw = t.grad(w);
    for (std::size_t i = 0; i < index.size(); ++i) gw(0, static_cast<Eigen::Index>(i)) += g(0, index[i]);
  });
}

template <class T>
Var<T> pick(Var<T> a, Eigen::Index r, Eigen::Index c) {
  detail::require_shape<T>(r >= 0 && r < a.rows() && c >= 0 && c < a.cols(), "pick: out of range");
  Matrix<T> out(1, 1);
  out(0, 0) = a.value()(r, c);
  return a.tape->record(std::move(out), {a}, [a, r, c](Tape<T>& t, const Matrix<T>& g) { t.grad(a)(r, c) += g(0, 0); });
}

// -log(max(p, floor)) of a 1x1 probability; zero gradient below the floor.
template <class T>
Var<T> neg_log(Var<T> p, T floor) {
  const T v = p.scalar();
  Matrix<T> out(1, 1);
  out(0, 0) = -std::log(std::max(v, floor));
  return p.tape->record(std::move(out), {p}, [p, floor](Tape<T>& t, const Matrix<T>& g) {
    const T v = t.value(p)(0, 0);
    if (v > floor) t.grad(p)(0, 0) -= g(0, 0) / v;
  });
}

template <class T>
Var<T> sum_all(std::span<const Var<T>> parts) {
  if (parts.empty()) throw ShapeMismatchError("sum_all: no inputs");
  Matrix<T> out = Matrix<T>::Zero(1, 1);
  for (const auto& p : parts) out(0, 0) += p.value().sum();
  std::vector<Var<T>> ins(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), parts, [ins](Tape<T>& t, const Matrix<T>& g) {
    for (const auto& p : ins) {
      if (t.needs_grad(p)) t.grad(p).array() += g(0, 0);
    }
  });
}

// Fused LSTM cell. xg holds the input projection plus bias (1 x 4H, gate
// order i, f, g, o); returns [h', c'] as one 1 x 2H row.
template <class T>
Var<T> lstm_cell(Var<T> xg, Var<T> h, Var<T> c, Var<T> wh) {
  detail::check_same_tape(xg, h);
  detail::check_same_tape(xg, c);
  detail::check_same_tape(xg, wh);
  const Eigen::Index H = h.cols();
  if (h.rows() != 1 || c.rows() != 1 || c.cols() != H || xg.rows() != 1 || xg.cols() != 4 * H ||
      wh.rows() != H || wh.cols() != 4 * H) {
    throw StateDimMismatchError("lstm_cell: state or weight dimensions do not match");
  }
  Matrix<T> z = xg.value();
  z.noalias() += h.value() * wh.value();
  Matrix<T> act(1, 4 * H);
  for (Eigen::Index k = 0; k < 4 * H; ++k) {
    const bool cand = k >= 2 * H && k < 3 * H;
    act(0, k) = cand ? std::tanh(z(0, k)) : T(1) / (T(1) + std::exp(-z(0, k)));
  }
  Matrix<T> out(1, 2 * H);
  Matrix<T> tc(1, H);
  for (Eigen::Index k = 0; k < H; ++k) {
    const T cn = act(0, H + k) * c.value()(0, k) + act(0, k) * act(0, 2 * H + k);
    tc(0, k) = std::tanh(cn);
    out(0, k) = act(0, 3 * H + k) * tc(0, k);
    out(0, H + k) = cn;
  }
  return xg.tape->record(
      std::move(out), {xg, h, c, wh},
      [xg, h, c, wh, act = std::move(act), tc = std::move(tc)](Tape<T>& t, const Matrix<T>& g) {
        const Eigen::Index H = tc.cols();
        const Matrix<T>& cv = t.value(c);
        Matrix<T> dz(1, 4 * H);
        Matrix<T> dc_prev(1, H);
        for (Eigen::Index k = 0; k < H; ++k) {
          const T i = act(0, k), f = act(0, H + k), gg = act(0, 2 * H + k), o = act(0, 3 * H + k);
          const T dh = g(0, k);
          const T dc = g(0, H + k) + dh * o * (T(1) - tc(0, k) * tc(0, k));
          dz(0, k) = dc * gg * i * (T(1) - i);
          dz(0, H + k) = dc * cv(0, k) * f * (T(1) - f);
          dz(0, 2 * H + k) = dc * i * (T(1) - gg * gg);
          dz(0, 3 * H + k) = dh * tc(0, k) * o * (T(1) - o);
          dc_prev(0, k) = dc * f;
        }
        if (t.needs_grad(xg)) t.grad(xg) += dz;
        if (t.needs_grad(h)) t.grad(h).noalias() += dz * t.value(wh).transpose();
        if (t.needs_grad(c)) t.grad(c) += dc_prev;
        if (t.needs_grad(wh)) t.grad(wh).noalias() += t.value(h).transpose() * dz;
      });
}

}  // namespace mathsum::ad
