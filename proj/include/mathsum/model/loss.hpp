#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "mathsum/ad/tape.hpp"
#include "mathsum/errors.hpp"
#include "mathsum/model/network.hpp"
#include "mathsum/vocab/vocabulary.hpp"

namespace mathsum::model {

inline constexpr double kProbabilityFloor = 1e-12;

// Mean of -log dist[t][gold[t]] over non-PAD positions, with probabilities
// clamped at kProbabilityFloor. In strict mode a gold probability below the
// floor raises ZeroProbabilityError instead of being clamped.
template <class T>
T nll_loss(std::span<const Matrix<T>> dists, std::span<const int> gold, bool strict = false) {
  if (dists.size() != gold.size()) throw ShapeMismatchError("one distribution per target position required");
  T total = 0;
  int count = 0;
  for (std::size_t t = 0; t < gold.size(); ++t) {
    if (gold[t] == vocab::kPad) continue;
    if (gold[t] < 0 || gold[t] >= dists[t].cols()) throw IdOutOfRangeError("gold id outside distribution");
    const T p = dists[t](0, gold[t]);
    if (strict && !(p >= static_cast<T>(kProbabilityFloor))) {
      throw ZeroProbabilityError("gold probability underflow at position " + std::to_string(t));
    }
    total -= std::log(std::max(p, static_cast<T>(kProbabilityFloor)));
    ++count;
  }
  return count == 0 ? T(0) : total / static_cast<T>(count);
}

template <class T>
struct ForwardResult {
  Var<T> loss;                    // 1 x 1, mean over non-PAD target positions
  std::vector<DecoderStep<T>> steps;
};

inline int unpadded_length(std::span<const int> ids) {
  int n = 0;
  while (n < static_cast<int>(ids.size()) && ids[static_cast<std::size_t>(n)] != vocab::kPad) ++n;
  return n;
}

// Teacher-forced pass over one (possibly padded) example.
template <class T>
ForwardResult<T> forward_example(Graph<T>& g, const vocab::EncodedExample& ex, const StepOptions& opts = {}) {
  const int src_len = unpadded_length(ex.src_ids);
  if (src_len == 0) throw ValidationError("empty source");
  Var<T> emb = g.dropout(g.embed(ex.src_ids));
  if (g.network().hyperparams().enable_math_block) emb = g.equation_enrich(emb, ex.src_spans);
  EncoderOutput<T> enc = g.encode(emb, src_len);
  DecoderState<T> state = enc.bridge;
  ForwardResult<T> out;
  std::vector<Var<T>> terms;
  for (std::size_t t = 0; t + 1 < ex.tgt_ids.size(); ++t) {
    const int gold = ex.tgt_ext_ids[t + 1];
    if (gold == vocab::kPad) break;
    DecoderStep<T> step = g.decoder_step(ex.tgt_ids[t], state, enc, ex.src_ext_ids, ex.num_oov(), opts);
    if (gold >= step.dist.cols()) throw IdOutOfRangeError("gold id outside extended vocabulary");
    terms.push_back(ad::neg_log(ad::pick(step.dist, 0, gold), static_cast<T>(kProbabilityFloor)));
    state = step.state;
    out.steps.push_back(step);
  }
  if (terms.empty()) throw ValidationError("target has no positions to predict");
  out.loss = ad::scale(ad::sum_all<T>(terms), T(1) / static_cast<T>(terms.size()));
  return out;
}

}  // namespace mathsum::model
