#pragma once

// Synthetic corpora shared by the unit and acceptance tests.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "mathsum/corpus/token.hpp"
#include "mathsum/model/hyperparams.hpp"
#include "mathsum/rng.hpp"
#include "mathsum/vocab/vocabulary.hpp"

namespace mathsum::testing {

using corpus::Token;
using corpus::TokenKind;
using corpus::TokenizedPair;
using corpus::TokenSeq;

inline const std::vector<std::string>& text_pool() {
  static const std::vector<std::string> p = {"find", "solve", "prove", "show", "the", "value", "of", "for",
                                             "all",  "real",  "roots", "when", "is",  "a",     "why", "how"};
  return p;
}

inline const std::vector<std::string>& math_pool() {
  static const std::vector<std::string> p = {"x", "y", "z", "n", "k", "+", "-", "=", "^", "{", "}",
                                             "2", "3", "(", ")", "\\frac", "\\sqrt", "<", ">", "1"};
  return p;
}

// Rare commands that never enter the shared vocabulary; they can only be
// produced by copying.
inline const std::vector<std::string>& rare_pool() {
  static const std::vector<std::string> p = {"\\aleph", "\\beth",  "\\gimel", "\\daleth", "\\wp",
                                             "\\hbar",  "\\ell",   "\\mho",   "\\eth",    "\\Finv",
                                             "\\Game",  "\\Bbbk",  "\\imath", "\\jmath",  "\\partial"};
  return p;
}

// Appends "<m> tokens </m>" and records the span.
inline void append_equation(TokenSeq& seq, std::vector<corpus::EquationSpan>& spans, const std::vector<std::string>& eq) {
  seq.push_back({TokenKind::marker, std::string(corpus::kMathOpen)});
  const std::size_t start = seq.size();
  for (const auto& s : eq) seq.push_back({TokenKind::math, s});
  spans.push_back({start, seq.size()});
  seq.push_back({TokenKind::marker, std::string(corpus::kMathClose)});
}

inline void append_text(TokenSeq& seq, const std::vector<std::string>& words) {
  for (const auto& w : words) seq.push_back({TokenKind::text, w});
}

template <class Pool>
std::vector<std::string> draw(Rng& rng, const Pool& pool, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[rng.below(pool.size())]);
  return out;
}

// Vocabulary over the text and math pools only.
inline vocab::Vocabulary pool_vocabulary() {
  vocab::Vocabulary v;
  v.push(std::string(corpus::kMathOpen));
  v.push(std::string(corpus::kMathClose));
  for (const auto& s : text_pool()) v.push(s);
  for (const auto& s : math_pool()) v.push(s);
  return v;
}

// Copy-task pairs: a question of at most 20 tokens with one or two
// equations; the headline is a verb followed by the first equation. Every
// fourth pair carries a rare (vocabulary-external) command in that equation.
inline std::vector<TokenizedPair> copy_task_pairs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenizedPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    TokenizedPair p;
    p.id = "c" + std::to_string(i);
    auto eq1 = draw(rng, math_pool(), 3 + rng.below(3));
    if (i % 4 == 0) eq1[rng.below(eq1.size())] = rare_pool()[(i / 4) % rare_pool().size()];
    const auto verb = text_pool()[rng.below(4)];
    append_text(p.source, {verb, "the"});
    append_equation(p.source, p.source_spans, eq1);
    append_text(p.source, draw(rng, text_pool(), 2 + rng.below(3)));
    if (rng.below(2) == 1) append_equation(p.source, p.source_spans, draw(rng, math_pool(), 2));
    append_text(p.target, {verb});
    append_equation(p.target, p.target_spans, eq1);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mathsum::testing

namespace mathsum::testing {

inline std::vector<std::string> wide_math_pool() {
  std::vector<std::string> p;
  for (char c = 'a'; c <= 'z'; ++c) p.emplace_back(1, c);
  for (char c = 'A'; c <= 'Z'; ++c) p.emplace_back(1, c);
  for (char c = '0'; c <= '9'; ++c) p.emplace_back(1, c);
  for (const char* s : {"\\alpha", "\\beta", "\\gamma", "\\delta", "\\theta", "\\lambda", "\\mu", "\\pi", "\\sigma",
                        "\\phi", "\\omega", "\\sum", "\\int", "\\infty", "\\cdot", "\\times"}) {
    p.emplace_back(s);
  }
  return p;
}

// Planted copy structure: every question holds two equations, one with "="
// and one with "<"; the headline is a verb chosen by the question's first
// word followed by the "=" equation, copied verbatim.
inline std::vector<TokenizedPair> planted_pairs(std::size_t n, std::uint64_t seed, std::size_t side_min = 1,
                                                std::size_t side_span = 3) {
  Rng rng(seed);
  const auto pool = wide_math_pool();
  static const std::vector<std::string> cues = {"find", "solve", "prove", "show"};
  static const std::vector<std::string> verbs = {"value", "roots", "why", "how"};
  std::vector<TokenizedPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    TokenizedPair p;
    p.id = "p" + std::to_string(i);
    const auto cue = rng.below(cues.size());
    auto side = [&] { return draw(rng, pool, side_min + rng.below(side_span)); };
    std::vector<std::string> eq = side();
    eq.emplace_back("=");
    for (auto& s : side()) eq.push_back(s);
    std::vector<std::string> other = side();
    other.emplace_back("<");
    for (auto& s : side()) other.push_back(s);
    append_text(p.source, {cues[cue], "the"});
    const bool eq_first = rng.below(2) == 0;
    append_equation(p.source, p.source_spans, eq_first ? eq : other);
    append_text(p.source, draw(rng, text_pool(), 1 + rng.below(3)));
    append_equation(p.source, p.source_spans, eq_first ? other : eq);
    append_text(p.source, {"."});
    append_text(p.target, {verbs[cue]});
    append_equation(p.target, p.target_spans, eq);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace mathsum::testing

namespace mathsum::testing {

// Non-overlapping spans over [0, n), each of length >= 1.
inline std::vector<corpus::EquationSpan> random_spans(Rng& rng, std::size_t n, std::size_t max_spans) {
  std::vector<corpus::EquationSpan> spans;
  std::size_t pos = 0;
  const std::size_t want = rng.below(max_spans + 1);
  for (std::size_t k = 0; k < want && pos < n; ++k) {
    const std::size_t start = pos + rng.below(std::min<std::size_t>(3, n - pos));
    if (start >= n) break;
    const std::size_t len = 1 + rng.below(std::min<std::size_t>(5, n - start));
    spans.push_back({start, start + len});
    pos = start + len;
  }
  return spans;
}

// An encoded example over a vocabulary of size v: source ids drawn from the
// regular range, with roughly one in five positions replaced by one of up to
// three example OOVs. Trailing PAD is added on request.
inline vocab::EncodedExample random_example(Rng& rng, int v, std::size_t src_len, std::size_t tgt_len,
                                            std::size_t pad = 0, std::size_t max_spans = 2) {
  vocab::EncodedExample ex;
  const int num_oov = static_cast<int>(rng.below(4));
  for (int k = 0; k < num_oov; ++k) ex.oov_list.push_back("oov" + std::to_string(k));
  for (std::size_t i = 0; i < src_len; ++i) {
    if (num_oov > 0 && rng.below(5) == 0) {
      ex.src_ids.push_back(vocab::kUnk);
      ex.src_ext_ids.push_back(v + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_oov))));
    } else {
      const int id = vocab::kNumSpecials + static_cast<int>(rng.below(static_cast<std::uint64_t>(v - vocab::kNumSpecials)));
      ex.src_ids.push_back(id);
      ex.src_ext_ids.push_back(id);
    }
  }
  ex.tgt_ids.push_back(vocab::kBos);
  ex.tgt_ext_ids.push_back(vocab::kBos);
  for (std::size_t i = 0; i < tgt_len; ++i) {
    if (rng.below(3) == 0) {
      const std::size_t j = rng.below(src_len);
      ex.tgt_ids.push_back(ex.src_ids[j]);
      ex.tgt_ext_ids.push_back(ex.src_ext_ids[j]);
    } else {
      const int id = vocab::kNumSpecials + static_cast<int>(rng.below(static_cast<std::uint64_t>(v - vocab::kNumSpecials)));
      ex.tgt_ids.push_back(id);
      ex.tgt_ext_ids.push_back(id);
    }
  }
  ex.tgt_ids.push_back(vocab::kEos);
  ex.tgt_ext_ids.push_back(vocab::kEos);
  ex.src_spans = random_spans(rng, src_len, max_spans);
  ex.src_ids.resize(src_len + pad, vocab::kPad);
  ex.src_ext_ids.resize(src_len + pad, vocab::kPad);
  return ex;
}

inline model::Hyperparams tiny_hyperparams(int emb = 8, int hidden = 8, int heads = 2, int ffn = 16) {
  model::Hyperparams hp;
  hp.emb_dim = emb;
  hp.enc_hidden = hidden;
  hp.dec_hidden = hidden;
  hp.num_heads = heads;
  hp.ffn_dim = ffn;
  hp.dropout = 0.0;
  return hp;
}

}  // namespace mathsum::testing
