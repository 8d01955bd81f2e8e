#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mathsum/corpus/token.hpp"
#include "mathsum/errors.hpp"
#include "mathsum/eval/metrics.hpp"

namespace mathsum::eval {

using EquationList = std::vector<Tokens>;

struct RepairResult {
  Tokens tokens;
  int repairs = 0;
};

// Makes a headline marker-balanced. An opener inside an open region closes the
// region first, a closer without an opener is dropped, and an unclosed region
// is closed at the end. Each fix counts as one repair.
inline RepairResult repair_markers(const Tokens& in) {
  RepairResult r;
  bool open = false;
  for (const auto& t : in) {
    if (t == corpus::kMathOpen) {
      if (open) {
        r.tokens.emplace_back(corpus::kMathClose);
        ++r.repairs;
      }
      open = true;
      r.tokens.push_back(t);
    } else if (t == corpus::kMathClose) {
      if (!open) {
        ++r.repairs;
        continue;
      }
      open = false;
      r.tokens.push_back(t);
    } else {
      r.tokens.push_back(t);
    }
  }
  if (open) {
    r.tokens.emplace_back(corpus::kMathClose);
    ++r.repairs;
  }
  return r;
}

inline EquationList extract_equations(const Tokens& headline) {
  EquationList out;
  bool open = false;
  Tokens cur;
  for (const auto& t : headline) {
    if (t == corpus::kMathOpen) {
      if (open) throw UnbalancedMarkerError("nested <m>");
      open = true;
      cur.clear();
    } else if (t == corpus::kMathClose) {
      if (!open) throw UnbalancedMarkerError("</m> without <m>");
      open = false;
      if (!cur.empty()) out.push_back(cur);
    } else if (open) {
      cur.push_back(t);
    }
  }
  if (open) throw UnbalancedMarkerError("unclosed <m>");
  return out;
}

// Tokens inside marker regions, in order.
inline Tokens math_tokens(const Tokens& headline) {
  Tokens out;
  for (const auto& eq : extract_equations(headline)) out.insert(out.end(), eq.begin(), eq.end());
  return out;
}

// Smallest equation distance over all cross pairs. With one side empty it is
// the length of the shortest equation on the other side.
inline std::size_t min_equation_distance(const EquationList& p, const EquationList& g) {
  if (p.empty() && g.empty()) return 0;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  if (p.empty() || g.empty()) {
    for (const auto& e : p.empty() ? g : p) best = std::min(best, e.size());
    return best;
  }
  for (const auto& a : p)
    for (const auto& b : g) best = std::min(best, levenshtein(a, b));
  return best;
}

inline void check_paired(std::size_t a, std::size_t b) {
  if (a == 0) throw EmptyCorpusError("no samples");
  if (a != b) throw ShapeMismatchError("generated and gold sample counts differ");
}

inline double edit_distance_m(std::span<const EquationList> gen, std::span<const EquationList> gold) {
  check_paired(gen.size(), gold.size());
  double total = 0;
  for (std::size_t i = 0; i < gen.size(); ++i) {
    const auto denom = std::max<std::size_t>({gen[i].size(), gold[i].size(), 1});
    total += static_cast<double>(min_equation_distance(gen[i], gold[i])) / static_cast<double>(denom);
  }
  return total / static_cast<double>(gen.size());
}

inline double edit_distance_s(std::span<const EquationList> gen, std::span<const EquationList> gold) {
  check_paired(gen.size(), gold.size());
  double total = 0;
  for (std::size_t i = 0; i < gen.size(); ++i) total += static_cast<double>(min_equation_distance(gen[i], gold[i]));
  return total / static_cast<double>(gen.size());
}

inline std::size_t multiset_intersection(const Tokens& a, const Tokens& b) {
  std::map<std::string, std::size_t> ca;
  for (const auto& t : a) ++ca[t];
  std::size_t n = 0;
  for (const auto& t : b) {
    if (auto it = ca.find(t); it != ca.end() && it->second > 0) {
      --it->second;
      ++n;
    }
  }
  return n;
}

// Inputs are the math-token multisets of each headline.
inline double exact_match(std::span<const Tokens> gen_math, std::span<const Tokens> gold_math) {
  check_paired(gen_math.size(), gold_math.size());
  double total = 0;
  for (std::size_t i = 0; i < gen_math.size(); ++i) {
    total += static_cast<double>(multiset_intersection(gen_math[i], gold_math[i]));
  }
  return total / static_cast<double>(gen_math.size());
}

}  // namespace mathsum::eval
