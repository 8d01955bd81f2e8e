#pragma once

#include <string>
#include <string_view>

#include "mathsum/corpus/token.hpp"
#include "mathsum/errors.hpp"

namespace mathsum::corpus {

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

inline bool is_detached_punct(char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '(': case ')': case '[': case ']':
      return true;
    default:
      return false;
  }
}

}  // namespace detail

// Rule-based text tokenizer: whitespace split, then every character of
// . , ; : ! ? ( ) [ ] becomes a token of its own. Case is preserved.
inline TokenSeq tokenize_text(std::string_view s) {
  TokenSeq out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back({TokenKind::text, std::move(cur)});
    cur.clear();
  };
  for (char c : s) {
    if (detail::is_space(c)) {
      flush();
    } else if (detail::is_detached_punct(c)) {
      flush();
      out.push_back({TokenKind::text, std::string(1, c)});
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

// LaTeX lexer for the interior of one math region.
//
//   \name      one token (backslash followed by the longest run of letters)
//   \c         one token for a single printable non-letter c
//   \<space>   spacing command, discarded like whitespace
//   { } [ ] ^ _, digits, letters, operators: one token per character
//
// Control bytes, non-ASCII bytes, a bare '$' and unbalanced braces are
// rejected with MathTokenizeError.
inline TokenSeq tokenize_math(std::string_view latex) {
  TokenSeq out;
  int depth = 0;
  auto fail = [&](std::size_t at, const char* why) {
    throw MathTokenizeError("cannot tokenize math at byte " + std::to_string(at) + ": " + why);
  };
  std::size_t i = 0;
  while (i < latex.size()) {
    const char c = latex[i];
    const auto uc = static_cast<unsigned char>(c);
    if (detail::is_space(c)) {
      ++i;
      continue;
    }
    if (uc < 0x20 || uc >= 0x7f) fail(i, "unlexable byte");
    if (c == '\\') {
      if (i + 1 >= latex.size()) fail(i, "dangling backslash");
      const char n = latex[i + 1];
      const auto un = static_cast<unsigned char>(n);
      if (detail::is_ascii_letter(n)) {
        std::size_t j = i + 1;
        while (j < latex.size() && detail::is_ascii_letter(latex[j])) ++j;
        out.push_back({TokenKind::math, std::string(latex.substr(i, j - i))});
        i = j;
      } else if (detail::is_space(n)) {
        i += 2;
      } else if (un < 0x20 || un >= 0x7f) {
        fail(i + 1, "unlexable byte after backslash");
      } else {
        out.push_back({TokenKind::math, std::string(latex.substr(i, 2))});
        i += 2;
      }
      continue;
    }
    if (c == '$') fail(i, "stray '$' inside math");
    if (c == '{') ++depth;
    if (c == '}' && --depth < 0) fail(i, "unbalanced '}'");
    out.push_back({TokenKind::math, std::string(1, c)});
    ++i;
  }
  if (depth != 0) fail(latex.size(), "unbalanced '{'");
  return out;
}

}  // namespace mathsum::corpus
