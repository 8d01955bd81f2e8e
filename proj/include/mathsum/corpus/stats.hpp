#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mathsum/corpus/pair.hpp"
#include "mathsum/corpus/token.hpp"
#include "mathsum/errors.hpp"

namespace mathsum::corpus {

struct SideStats {
  double avg_math_num = 0;
  double avg_text_tokens = 0;
  double avg_math_tokens = 0;
  double avg_sent_num = 0;
  std::size_t text_vocab_size = 0;
  std::size_t math_vocab_size = 0;

  friend bool operator==(const SideStats&, const SideStats&) = default;
};

struct CorpusStats {
  std::size_t num_pairs = 0;
  SideStats source;
  SideStats target;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

namespace detail {

struct SideAccumulator {
  double spans = 0, text = 0, math = 0, sents = 0;
  std::set<std::string> text_vocab, math_vocab;

  void add(const TokenSeq& seq, const std::vector<EquationSpan>& spans_in) {
    spans += static_cast<double>(spans_in.size());
    for (const auto& t : seq) {
      if (t.kind == TokenKind::text) {
        text += 1;
        text_vocab.insert(t.surface);
      } else if (t.kind == TokenKind::math) {
        math += 1;
        math_vocab.insert(t.surface);
      }
    }
    sents += static_cast<double>(split_sentences(seq).size());
  }

  SideStats finish(std::size_t n) const {
    const double d = static_cast<double>(n);
    return {spans / d, text / d, math / d, sents / d, text_vocab.size(), math_vocab.size()};
  }
};

}  // namespace detail

inline CorpusStats corpus_stats(std::span<const TokenizedPair> pairs) {
  if (pairs.empty()) throw EmptyCorpusError("corpus_stats on empty corpus");
  detail::SideAccumulator src, tgt;
  for (const auto& p : pairs) {
    src.add(p.source, p.source_spans);
    tgt.add(p.target, p.target_spans);
  }
  return {pairs.size(), src.finish(pairs.size()), tgt.finish(pairs.size())};
}

// Fraction of target n-gram occurrences that never occur in the paired
// source; computed per pair, then averaged. Targets shorter than n count 0.
inline double novel_ngram_proportion(std::span<const TokenizedPair> pairs, std::size_t n) {
  if (n < 1) throw ValidationError("n-gram order must be >= 1");
  if (pairs.empty()) throw EmptyCorpusError("novel_ngram_proportion on empty corpus");
  double total = 0;
  for (const auto& p : pairs) {
    if (p.target.size() < n) continue;
    const auto src = surfaces(p.source);
    const auto tgt = surfaces(p.target);
    std::set<std::vector<std::string>> seen;
    for (std::size_t i = 0; i + n <= src.size(); ++i) {
      seen.emplace(src.begin() + i, src.begin() + i + n);
    }
    std::size_t novel = 0, count = 0;
    for (std::size_t i = 0; i + n <= tgt.size(); ++i, ++count) {
      if (!seen.contains(std::vector<std::string>(tgt.begin() + i, tgt.begin() + i + n))) ++novel;
    }
    total += static_cast<double>(novel) / static_cast<double>(count);
  }
  return total / static_cast<double>(pairs.size());
}

}  // namespace mathsum::corpus
