#pragma once

#include <cmath>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mathsum/errors.hpp"
#include "mathsum/eval/math_metrics.hpp"
#include "mathsum/eval/metrics.hpp"

namespace mathsum::eval {

// ROUGE and BLEU are stored in [0,1] and reported x100.
struct MetricsReport {
  double rouge1_f1 = 0;
  double rouge2_f1 = 0;
  double rougeL_f1 = 0;
  double bleu4 = 0;
  double edit_distance_m = 0;
  double edit_distance_s = 0;
  double exact_match = 0;
  std::size_t n = 0;
  int marker_repairs = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["n"] = n;
    j["rouge1_f1"] = rouge1_f1 * 100;
    j["rouge2_f1"] = rouge2_f1 * 100;
    j["rougeL_f1"] = rougeL_f1 * 100;
    j["bleu4"] = bleu4 * 100;
    j["edit_distance_m"] = edit_distance_m;
    j["edit_distance_s"] = edit_distance_s;
    j["exact_match"] = exact_match;
    j["marker_repairs"] = marker_repairs;
    return j;
  }

  std::string to_table() const {
    std::string s;
    char buf[96];
    auto row = [&](const char* name, double v) {
      std::snprintf(buf, sizeof buf, "%-16s %10.2f\n", name, v);
      s += buf;
    };
    row("R1", rouge1_f1 * 100);
    row("R2", rouge2_f1 * 100);
    row("RL", rougeL_f1 * 100);
    row("BLEU-4", bleu4 * 100);
    row("Edit Dist (m)", edit_distance_m);
    row("Edit Dist (s)", edit_distance_s);
    row("Exact Match", exact_match);
    std::snprintf(buf, sizeof buf, "%-16s %10zu\n%-16s %10d\n", "samples", n, "marker repairs", marker_repairs);
    s += buf;
    return s;
  }
};

// Scores hypotheses against gold headlines (surface sequences with markers).
// Hypotheses are marker-repaired first; gold headlines must be balanced.
inline MetricsReport evaluate(std::span<const Tokens> hyps, std::span<const Tokens> golds) {
  check_paired(hyps.size(), golds.size());
  MetricsReport r;
  r.n = hyps.size();
  BleuStats bleu;
  std::vector<EquationList> gen_eq, gold_eq;
  std::vector<Tokens> gen_math, gold_math;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    auto fixed = repair_markers(hyps[i]);
    r.marker_repairs += fixed.repairs;
    const Tokens& h = fixed.tokens;
    const Tokens& g = golds[i];
    r.rouge1_f1 += rouge_n_f1(h, g, 1);
    r.rouge2_f1 += rouge_n_f1(h, g, 2);
    r.rougeL_f1 += rouge_l_f1(h, g);
    bleu.add(h, g);
    gen_eq.push_back(extract_equations(h));
    gold_eq.push_back(extract_equations(g));
    gen_math.push_back(math_tokens(h));
    gold_math.push_back(math_tokens(g));
  }
  const double n = static_cast<double>(r.n);
  r.rouge1_f1 /= n;
  r.rouge2_f1 /= n;
  r.rougeL_f1 /= n;
  r.bleu4 = bleu.score();
  r.edit_distance_m = edit_distance_m(gen_eq, gold_eq);
  r.edit_distance_s = edit_distance_s(gen_eq, gold_eq);
  r.exact_match = exact_match(gen_math, gold_math);
  return r;
}

}  // namespace mathsum::eval
