#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "mathsum/corpus/token.hpp"
#include "mathsum/errors.hpp"
#include "mathsum/rng.hpp"

namespace mathsum::corpus {

struct SplitSpec {
  double train_frac = 0.9;
  double val_frac = 0.05;
  double test_frac = 0.05;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train_frac > 0 && val_frac > 0 && test_frac > 0)) {
      throw ValidationError("split fractions must be positive");
    }
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
      throw ValidationError("split fractions must sum to 1");
    }
  }
};

template <class T>
struct Partition {
  std::vector<T> train, val, test;
};

// Deterministic shuffle under spec.seed. Validation and test sizes are
// floor(n * frac); the remainder goes to training.
template <class T>
Partition<T> split_corpus(const std::vector<T>& items, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = items.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));

  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val_frac));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.test_frac));
  const std::size_t n_train = n - n_val - n_test;

  Partition<T> out;
  for (std::size_t k = 0; k < n; ++k) {
    const T& item = items[order[k]];
    if (k < n_train) {
      out.train.push_back(item);
    } else if (k < n_train + n_val) {
      out.val.push_back(item);
    } else {
      out.test.push_back(item);
    }
  }
  return out;
}

}  // namespace mathsum::corpus
