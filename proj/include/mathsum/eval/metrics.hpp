#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mathsum::eval {

using Tokens = std::vector<std::string>;

namespace detail {

inline std::map<std::span<const std::string>, std::size_t, bool (*)(std::span<const std::string>,
                                                                    std::span<const std::string>)>
make_ngram_map() {
  return std::map<std::span<const std::string>, std::size_t,
                  bool (*)(std::span<const std::string>, std::span<const std::string>)>(
      [](std::span<const std::string> a, std::span<const std::string> b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
      });
}

inline auto ngram_counts(std::span<const std::string> seq, std::size_t n) {
  auto counts = make_ngram_map();
  for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[seq.subspan(i, n)];
  return counts;
}

// Sum over n-grams of min(count in cand, count in ref).
inline std::size_t clipped_overlap(std::span<const std::string> cand, std::span<const std::string> ref, std::size_t n) {
  const auto c = ngram_counts(cand, n);
  const auto r = ngram_counts(ref, n);
  std::size_t o = 0;
  for (const auto& [g, k] : c) {
    if (auto it = r.find(g); it != r.end()) o += std::min(k, it->second);
  }
  return o;
}

inline std::size_t ngram_total(std::size_t len, std::size_t n) { return len >= n ? len - n + 1 : 0; }

inline double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

}  // namespace detail

inline double rouge_n_f1(std::span<const std::string> cand, std::span<const std::string> ref, std::size_t n) {
  const std::size_t tc = detail::ngram_total(cand.size(), n), tr = detail::ngram_total(ref.size(), n);
  if (n == 0 || tc == 0 || tr == 0) return 0.0;
  const auto o = static_cast<double>(detail::clipped_overlap(cand, ref, n));
  return detail::f1(o / static_cast<double>(tc), o / static_cast<double>(tr));
}

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline double rouge_l_f1(std::span<const std::string> cand, std::span<const std::string> ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  const auto l = static_cast<double>(lcs_length(cand, ref));
  return detail::f1(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
}

// Pooled BLEU statistics; sentence BLEU is the single-sample case.
struct BleuStats {
  std::size_t matches[4] = {0, 0, 0, 0};
  std::size_t totals[4] = {0, 0, 0, 0};
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;

  void add(std::span<const std::string> cand, std::span<const std::string> ref) {
    for (std::size_t n = 1; n <= 4; ++n) {
      matches[n - 1] += detail::clipped_overlap(cand, ref, n);
      totals[n - 1] += detail::ngram_total(cand.size(), n);
    }
    cand_len += cand.size();
    ref_len += ref.size();
  }

  // Geometric mean of the four clipped precisions times the brevity penalty.
  // A precision with zero matches is replaced by 1 / (total + 1).
  double score() const {
    if (cand_len == 0) return 0.0;
    double log_sum = 0;
    for (std::size_t n = 0; n < 4; ++n) {
      const double p = matches[n] > 0 ? static_cast<double>(matches[n]) / static_cast<double>(totals[n])
                                      : 1.0 / static_cast<double>(totals[n] + 1);
      log_sum += std::log(p);
    }
    const double bp = cand_len < ref_len
                          ? std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len))
                          : 1.0;
    return bp * std::exp(log_sum / 4.0);
  }
};

inline double bleu4(std::span<const std::string> cand, std::span<const std::string> ref) {
  BleuStats s;
  s.add(cand, ref);
  return s.score();
}

// Token-level edit distance with unit costs.
inline std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace mathsum::eval
