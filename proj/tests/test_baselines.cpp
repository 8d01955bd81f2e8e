#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "mathsum/corpus/pair.hpp"
#include "mathsum/eval/baselines.hpp"
#include "mathsum/rng.hpp"

using namespace mathsum;
using namespace mathsum::eval;
using corpus::build_pair;

namespace {

// Power iteration in matrix form: s <- (1-d) 1 + d M^T s with M row-normalised.
Eigen::VectorXd power_iteration(const Eigen::MatrixXd& w) {
  const auto n = w.rows();
  Eigen::MatrixXd m = w;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double s = m.row(j).sum();
    if (s > 0) m.row(j) /= s;
  }
  Eigen::VectorXd s = Eigen::VectorXd::Ones(n);
  for (int it = 0; it < 1000; ++it) s = Eigen::VectorXd::Constant(n, 0.15) + 0.85 * m.transpose() * s;
  return s;
}

}  // namespace

TEST(Similarity, OverlapOverLogLengths) {
  const auto a = corpus::tokenize_text("the cat sat .");
  const auto b = corpus::tokenize_text("the cat ran away .");
  EXPECT_NEAR(sentence_similarity(a, b), 3.0 / (std::log(4.0) + std::log(5.0)), 1e-15);
  const auto one = corpus::tokenize_text("cat");
  EXPECT_DOUBLE_EQ(sentence_similarity(one, a), 1.0);
  EXPECT_DOUBLE_EQ(sentence_similarity(a, corpus::tokenize_text("dogs bark")), 0.0);
}

TEST(TextRank, MatchesMatrixPowerIteration) {
  const auto pair = build_pair({"q", "The cat sat on the mat. The cat sat on a mat. Dogs bark at the cat!", "h"});
  const auto sentences = corpus::split_sentences(pair.source);
  ASSERT_EQ(sentences.size(), 3u);
  const auto w = similarity_matrix(sentences);
  Eigen::MatrixXd wm(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) wm(i, j) = w[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  const auto oracle = power_iteration(wm);
  const auto r = textrank_scores(w);
  EXPECT_TRUE(r.converged);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.scores[static_cast<std::size_t>(i)], oracle(i), 1e-5);
  // One of the near-duplicate pair wins.
  const auto chosen = baseline_select(pair, BaselineMethod::textrank, 0);
  EXPECT_TRUE(chosen == sentences[0] || chosen == sentences[1]);
  EXPECT_GT(std::max(oracle(0), oracle(1)), oracle(2));
}

TEST(TextRank, ConvergesOnFuzzedGraphs) {
  Rng rng(6);
  for (int c = 0; c < 100; ++c) {
    const auto n = 1 + rng.below(8);
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) w[i][j] = w[j][i] = rng.below(3) == 0 ? 0.0 : rng.uniform(0, 3);
    const auto r = textrank_scores(w);
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.iterations, kTextRankMaxIter);
    for (double s : r.scores) EXPECT_GE(s, 1 - kTextRankDamping - 1e-12);
  }
}

TEST(Baselines, SingleSentenceAllMethodsAgree) {
  const auto pair = build_pair({"q", "Prove that $$x>0$$ holds.", "h"});
  for (auto m : {BaselineMethod::random, BaselineMethod::lead, BaselineMethod::tail, BaselineMethod::textrank}) {
    EXPECT_EQ(baseline_select(pair, m, 3), pair.source);
  }
}

TEST(Baselines, LeadTailRandom) {
  const auto pair = build_pair({"q", "A. B. C.", "h"});
  EXPECT_EQ(corpus::surfaces(baseline_select(pair, BaselineMethod::lead, 0)), (std::vector<std::string>{"A", "."}));
  EXPECT_EQ(corpus::surfaces(baseline_select(pair, BaselineMethod::tail, 0)), (std::vector<std::string>{"C", "."}));
  EXPECT_EQ(baseline_select(pair, BaselineMethod::random, 9), baseline_select(pair, BaselineMethod::random, 9));
  std::set<std::string> picked;
  for (std::uint64_t s = 0; s < 40; ++s) picked.insert(corpus::surfaces(baseline_select(pair, BaselineMethod::random, s))[0]);
  EXPECT_EQ(picked.size(), 3u);
}

TEST(Baselines, ErrorsAndParsing) {
  corpus::TokenizedPair empty;
  empty.id = "e";
  EXPECT_THROW(baseline_select(empty, BaselineMethod::lead, 0), NoSentenceError);
  EXPECT_EQ(baseline_method_from_string("textrank"), BaselineMethod::textrank);
  EXPECT_THROW(baseline_method_from_string("best"), ConfigError);
}
