#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mathsum/errors.hpp"

namespace mathsum::corpus {

inline constexpr std::string_view kMathOpen = "<m>";
inline constexpr std::string_view kMathClose = "</m>";

enum class TokenKind { text, math, marker };

inline std::string_view to_string(TokenKind k) {
  switch (k) {
    case TokenKind::text: return "text";
    case TokenKind::math: return "math";
    case TokenKind::marker: return "marker";
  }
  return "text";
}

inline TokenKind kind_from_string(std::string_view s) {
  if (s == "text") return TokenKind::text;
  if (s == "math") return TokenKind::math;
  if (s == "marker") return TokenKind::marker;
  throw FormatError("unknown token kind '" + std::string(s) + "'");
}

struct Token {
  TokenKind kind = TokenKind::text;
  std::string surface;

  friend bool operator==(const Token&, const Token&) = default;
};

using TokenSeq = std::vector<Token>;

// Half-open range [start, end) of math tokens belonging to one equation.
struct EquationSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  friend bool operator==(const EquationSpan&, const EquationSpan&) = default;
};

struct RawPair {
  std::string id;
  std::string question;
  std::string headline;
};

struct TokenizedPair {
  std::string id;
  TokenSeq source;
  TokenSeq target;
  std::vector<EquationSpan> source_spans;
  std::vector<EquationSpan> target_spans;

  friend bool operator==(const TokenizedPair&, const TokenizedPair&) = default;
};

inline std::vector<std::string> surfaces(const TokenSeq& seq) {
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (const auto& t : seq) out.push_back(t.surface);
  return out;
}

inline std::string join_surfaces(const TokenSeq& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += seq[i].surface;
  }
  return out;
}

// Recomputes the equation spans of a marker-delimited sequence.
inline std::vector<EquationSpan> spans_of(const TokenSeq& seq) {
  std::vector<EquationSpan> spans;
  std::size_t i = 0;
  while (i < seq.size()) {
    if (seq[i].kind != TokenKind::math) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < seq.size() && seq[i].kind == TokenKind::math) ++i;
    spans.push_back({start, i});
  }
  return spans;
}

// Checks the sequence-level invariants: markers alternate, math tokens only
// inside markers, spans exactly cover math tokens. Throws FormatError.
inline void validate_sequence(const TokenSeq& seq, const std::vector<EquationSpan>& spans) {
  bool open = false;
  for (const auto& t : seq) {
    if (t.surface.empty()) throw FormatError("empty token surface");
    for (char c : t.surface) {
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        throw FormatError("token surface contains whitespace");
      }
    }
    if (t.kind == TokenKind::marker) {
      if (t.surface == kMathOpen) {
        if (open) throw FormatError("nested <m> marker");
        open = true;
      } else if (t.surface == kMathClose) {
        if (!open) throw FormatError("</m> without opener");
        open = false;
      } else {
        throw FormatError("marker token with surface '" + t.surface + "'");
      }
    } else if (t.kind == TokenKind::math && !open) {
      throw FormatError("math token outside markers");
    } else if (t.kind == TokenKind::text && open) {
      throw FormatError("text token inside markers");
    }
  }
  if (open) throw FormatError("unclosed <m> marker");
  if (spans != spans_of(seq)) throw FormatError("equation spans do not match math tokens");
}

}  // namespace mathsum::corpus
