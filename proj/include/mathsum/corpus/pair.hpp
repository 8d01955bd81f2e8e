#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mathsum/corpus/token.hpp"
#include "mathsum/corpus/tokenizer.hpp"
#include "mathsum/errors.hpp"

namespace mathsum::corpus {

struct TokenizedField {
  TokenSeq tokens;
  std::vector<EquationSpan> spans;
};

// Tokenizes one field. Math regions are "$$...$$" or "<m>...</m>"; each
// becomes <m>, its math tokens, </m>. Regions that lex to nothing are dropped.
inline TokenizedField tokenize_field(std::string_view s) {
  TokenizedField out;
  std::string text;

  auto flush_text = [&] {
    for (auto& t : tokenize_text(text)) out.tokens.push_back(std::move(t));
    text.clear();
  };
  auto emit_math = [&](std::string_view interior) {
    TokenSeq math = tokenize_math(interior);
    if (math.empty()) return;
    out.tokens.push_back({TokenKind::marker, std::string(kMathOpen)});
    const std::size_t start = out.tokens.size();
    for (auto& t : math) out.tokens.push_back(std::move(t));
    out.spans.push_back({start, out.tokens.size()});
    out.tokens.push_back({TokenKind::marker, std::string(kMathClose)});
  };

  std::size_t i = 0;
  while (i < s.size()) {
    const std::string_view rest = s.substr(i);
    if (rest.starts_with("$$")) {
      const std::size_t close = s.find("$$", i + 2);
      if (close == std::string_view::npos) throw UnbalancedDelimiterError("unmatched \"$$\"");
      flush_text();
      emit_math(s.substr(i + 2, close - i - 2));
      i = close + 2;
    } else if (rest.starts_with(kMathOpen)) {
      const std::size_t close = s.find(kMathClose, i + kMathOpen.size());
      if (close == std::string_view::npos) throw UnbalancedDelimiterError("unmatched \"<m>\"");
      flush_text();
      emit_math(s.substr(i + kMathOpen.size(), close - i - kMathOpen.size()));
      i = close + kMathClose.size();
    } else if (rest.starts_with(kMathClose)) {
      throw UnbalancedDelimiterError("\"</m>\" without opener");
    } else if (s[i] == '$' && !(i > 0 && s[i - 1] == '\\')) {
      throw UnsupportedDelimiterError("single-dollar inline math is not supported");
    } else {
      text += s[i];
      ++i;
    }
  }
  flush_text();
  return out;
}

inline bool is_blank(std::string_view s) {
  for (char c : s) {
    if (!detail::is_space(c)) return false;
  }
  return true;
}

inline TokenizedPair build_pair(const RawPair& raw) {
  if (is_blank(raw.question)) throw InvalidPairError("empty question");
  if (is_blank(raw.headline)) throw InvalidPairError("empty headline");
  TokenizedField q = tokenize_field(raw.question);
  TokenizedField h = tokenize_field(raw.headline);
  if (q.tokens.empty() || h.tokens.empty()) throw InvalidPairError("field has no tokens");
  return {raw.id, std::move(q.tokens), std::move(h.tokens), std::move(q.spans), std::move(h.spans)};
}

// Sentence boundaries fall after text tokens ".", "?" and "!". Trailing
// tokens without a terminator form the last sentence.
inline std::vector<TokenSeq> split_sentences(const TokenSeq& tokens) {
  std::vector<TokenSeq> out;
  TokenSeq cur;
  for (const auto& t : tokens) {
    cur.push_back(t);
    if (t.kind == TokenKind::text && (t.surface == "." || t.surface == "?" || t.surface == "!")) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace mathsum::corpus
