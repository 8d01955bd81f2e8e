#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mathsum/corpus/pair.hpp"
#include "mathsum/corpus/token.hpp"
#include "mathsum/errors.hpp"
#include "mathsum/rng.hpp"

namespace mathsum::eval {

enum class BaselineMethod { random, lead, tail, textrank };

inline BaselineMethod baseline_method_from_string(std::string_view s) {
  if (s == "random") return BaselineMethod::random;
  if (s == "lead") return BaselineMethod::lead;
  if (s == "tail") return BaselineMethod::tail;
  if (s == "textrank") return BaselineMethod::textrank;
  throw ConfigError("unknown baseline method: " + std::string(s));
}

inline constexpr double kTextRankDamping = 0.85;
inline constexpr double kTextRankTolerance = 1e-6;
inline constexpr int kTextRankMaxIter = 100;

// Number of distinct surfaces shared by two sentences over the log-length
// normaliser. A length-1 sentence makes the normaliser 1.
inline double sentence_similarity(const corpus::TokenSeq& a, const corpus::TokenSeq& b) {
  std::set<std::string> sa, sb;
  for (const auto& t : a) sa.insert(t.surface);
  for (const auto& t : b) sb.insert(t.surface);
  std::size_t overlap = 0;
  for (const auto& s : sa) overlap += sb.count(s);
  if (overlap == 0) return 0.0;
  const double denom = (a.size() <= 1 || b.size() <= 1)
                           ? 1.0
                           : std::log(static_cast<double>(a.size())) + std::log(static_cast<double>(b.size()));
  return static_cast<double>(overlap) / denom;
}

struct TextRankResult {
  std::vector<double> scores;
  int iterations = 0;
  bool converged = false;
};

// Damped power iteration on a symmetric weight matrix with zero diagonal:
// s_i <- (1-d) + d * sum_j w_ji / (sum_k w_jk) * s_j.
inline TextRankResult textrank_scores(const std::vector<std::vector<double>>& w) {
  const std::size_t n = w.size();
  std::vector<double> out_sum(n, 0.0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) out_sum[j] += w[j][k];
  TextRankResult r;
  r.scores.assign(n, 1.0);
  std::vector<double> next(n);
  for (r.iterations = 1; r.iterations <= kTextRankMaxIter; ++r.iterations) {
    double delta = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && out_sum[j] > 0) acc += w[j][i] / out_sum[j] * r.scores[j];
      }
      next[i] = (1 - kTextRankDamping) + kTextRankDamping * acc;
      delta = std::max(delta, std::abs(next[i] - r.scores[i]));
    }
    r.scores.swap(next);
    if (delta < kTextRankTolerance) {
      r.converged = true;
      break;
    }
  }
  r.iterations = std::min(r.iterations, kTextRankMaxIter);
  return r;
}

inline std::vector<std::vector<double>> similarity_matrix(const std::vector<corpus::TokenSeq>& sentences) {
  const std::size_t n = sentences.size();
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) w[i][j] = w[j][i] = sentence_similarity(sentences[i], sentences[j]);
  return w;
}

// Picks one sentence of the question. Ties in TextRank go to the earliest.
inline corpus::TokenSeq baseline_select(const corpus::TokenizedPair& pair, BaselineMethod method, std::uint64_t seed) {
  const auto sentences = corpus::split_sentences(pair.source);
  if (sentences.empty()) throw NoSentenceError("question " + pair.id + " has no sentence");
  switch (method) {
    case BaselineMethod::lead:
      return sentences.front();
    case BaselineMethod::tail:
      return sentences.back();
    case BaselineMethod::random: {
      Rng rng(mix_seed(seed, fnv1a(pair.id)));
      return sentences[rng.below(sentences.size())];
    }
    case BaselineMethod::textrank: {
      const auto r = textrank_scores(similarity_matrix(sentences));
      const auto best = std::max_element(r.scores.begin(), r.scores.end());
      return sentences[static_cast<std::size_t>(best - r.scores.begin())];
    }
  }
  return sentences.front();
}

}  // namespace mathsum::eval
