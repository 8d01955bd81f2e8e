#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mathsum/ad/tape.hpp"
#include "mathsum/errors.hpp"
#include "mathsum/rng.hpp"

namespace mathsum::model {

using ad::Matrix;

enum class Init { xavier, embedding, zeros, ones };

// Named, ordered parameter tensors.
template <class T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Matrix<T> value;
  };

  // Each tensor draws from its own stream seeded by (seed, name), so adding
  // or removing a tensor leaves the initial values of the others unchanged.
  int add(const std::string& name, int rows, int cols, Init init, std::uint64_t seed) {
    if (index_.contains(name)) throw ValidationError("duplicate parameter " + name);
    Matrix<T> m(rows, cols);
    Rng rng(mix_seed(seed, fnv1a(name)));
    switch (init) {
      case Init::zeros: m.setZero(); break;
      case Init::ones: m.setOnes(); break;
      case Init::xavier: {
        const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-a, a));
        break;
      }
      case Init::embedding:
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(rng.uniform(-0.1, 0.1));
        break;
    }
    return add(name, std::move(m));
  }

  int add(const std::string& name, Matrix<T> value) {
    if (index_.contains(name)) throw ValidationError("duplicate parameter " + name);
    const int id = static_cast<int>(entries_.size());
    index_.emplace(name, id);
    entries_.push_back({name, std::move(value)});
    return id;
  }

  int size() const { return static_cast<int>(entries_.size()); }
  const Entry& entry(int id) const { return entries_[static_cast<std::size_t>(id)]; }
  Matrix<T>& value(int id) { return entries_[static_cast<std::size_t>(id)].value; }
  const Matrix<T>& value(int id) const { return entries_[static_cast<std::size_t>(id)].value; }

  int find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("no parameter named " + name);
    return it->second;
  }
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
    return n;
  }

  // Zero-filled tensors matching every parameter shape.
  std::vector<Matrix<T>> zeros_like() const {
    std::vector<Matrix<T>> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(Matrix<T>::Zero(e.value.rows(), e.value.cols()));
    return out;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, int> index_;
};

template <class T>
using Gradients = std::vector<Matrix<T>>;

}  // namespace mathsum::model
