#pragma once

#include <cmath>
#include <vector>

#include "mathsum/ad/tape.hpp"
#include "mathsum/errors.hpp"

namespace mathsum::training {

using ad::Matrix;

inline constexpr double kAdagradEpsilon = 1e-10;

// accum += grad^2; param -= lr * grad / sqrt(accum + eps), elementwise.
template <class T>
void adagrad_update(Matrix<T>& param, const Matrix<T>& grad, Matrix<T>& accum, T lr,
                    T eps = static_cast<T>(kAdagradEpsilon)) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() || param.rows() != accum.rows() ||
      param.cols() != accum.cols()) {
    throw ShapeMismatchError("adagrad_update: parameter, gradient and accumulator shapes differ");
  }
  accum.array() += grad.array().square();
  param.array() -= lr * grad.array() / (accum.array() + eps).sqrt();
}

template <class T>
class Adagrad {
 public:
  Adagrad(const std::vector<Matrix<T>>& shapes_like, T lr, T init_accum) : lr_(lr) {
    accum_.reserve(shapes_like.size());
    for (const auto& m : shapes_like) accum_.push_back(Matrix<T>::Constant(m.rows(), m.cols(), init_accum));
  }

  template <class Params>
  void step(Params& params, const std::vector<Matrix<T>>& grads) {
    if (grads.size() != accum_.size()) throw ShapeMismatchError("Adagrad: gradient count differs");
    for (std::size_t i = 0; i < grads.size(); ++i) {
      adagrad_update(params.value(static_cast<int>(i)), grads[i], accum_[i], lr_);
    }
  }

 private:
  T lr_;
  std::vector<Matrix<T>> accum_;
};

template <class T>
T global_norm(const std::vector<Matrix<T>>& grads) {
  T sq = 0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

// Rescales grads so their global norm is at most max_norm. Returns the norm
// before clipping.
template <class T>
T clip_global_norm(std::vector<Matrix<T>>& grads, T max_norm) {
  const T norm = global_norm(grads);
  if (norm > max_norm) {
    const T s = max_norm / norm;
    for (auto& g : grads) g *= s;
  }
  return norm;
}

}  // namespace mathsum::training
