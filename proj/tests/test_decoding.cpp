#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "mathsum/decoding/attention_export.hpp"
#include "mathsum/decoding/beam_search.hpp"
#include "mathsum/training/trainer.hpp"
#include "support/synthetic.hpp"

using namespace mathsum;
using namespace mathsum::decoding;
using mathsum::testing::random_example;
using mathsum::testing::tiny_hyperparams;

namespace {

// Token-level toy over a fixed table: the next-token distribution is looked
// up by the prefix emitted so far. Unlisted prefixes end with certainty.
struct TableModel {
  using State = std::vector<int>;
  std::map<std::vector<int>, std::vector<double>> table;
  int width = 6;

  State initial_state() const { return {}; }
  StepOutput<State> step(const State& s, int token) const {
    State next = s;
    if (token != vocab::kBos) next.push_back(token);
    std::vector<double> p(static_cast<std::size_t>(width), 0.0);
    if (auto it = table.find(next); it != table.end()) {
      p = it->second;
    } else {
      p[vocab::kEos] = 1.0;
    }
    StepOutput<State> out;
    for (double x : p) out.log_probs.push_back(std::log(x));
    out.attention = {1.0};
    out.next = next;
    return out;
  }
};

TableModel two_step_toy() {
  TableModel m;
  m.table[{}] = {0, 0, 0, 0, 0.6, 0.4};
  m.table[{4}] = {0, 0, 0, 0.3, 0.7, 0};
  m.table[{5}] = {0, 0, 0, 0.9, 0.1, 0};
  return m;
}

// Every sequence of at most max_len steps, scored exhaustively.
void enumerate(const TableModel& m, std::vector<int>& prefix, double lp, int max_len, double& best,
               std::vector<int>& best_ids) {
  const auto out = m.step(prefix.empty() ? TableModel::State{} : TableModel::State(prefix.begin(), prefix.end() - 1),
                          prefix.empty() ? vocab::kBos : prefix.back());
  for (int t = 0; t < m.width; ++t) {
    const double s = lp + out.log_probs[static_cast<std::size_t>(t)];
    if (!std::isfinite(s)) continue;
    if (t == vocab::kEos) {
      if (s > best) best = s, best_ids = prefix;
    } else if (static_cast<int>(prefix.size()) + 1 < max_len) {
      prefix.push_back(t);
      enumerate(m, prefix, s, max_len, best, best_ids);
      prefix.pop_back();
    }
  }
}

TableModel random_toy(Rng& rng, int depth) {
  TableModel m;
  std::vector<std::vector<int>> frontier = {{}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::vector<int>> next;
    for (const auto& pre : frontier) {
      std::vector<double> p(6, 0.0);
      double z = 0;
      for (int t = 3; t < 6; ++t) z += (p[static_cast<std::size_t>(t)] = rng.uniform(0.05, 1.0));
      for (auto& x : p) x /= z;
      m.table[pre] = p;
      for (int t = 4; t < 6; ++t) {
        auto q = pre;
        q.push_back(t);
        next.push_back(q);
      }
    }
    frontier = std::move(next);
  }
  return m;
}

}  // namespace

TEST(BeamSearch, TwoStepToyPrefersLaterGain) {
  auto toy = two_step_toy();
  BeamConfig cfg;
  cfg.beam = 2;
  cfg.max_len = 2;
  const auto r = beam_search(toy, cfg);
  EXPECT_TRUE(r.finished);
  EXPECT_EQ(r.ids, std::vector<int>{5});
  EXPECT_NEAR(std::exp(r.log_prob), 0.36, 1e-12);
  // Greedy takes the locally better "a" twice and runs out of steps.
  cfg.beam = 1;
  const auto g = greedy_decode(toy, cfg);
  EXPECT_EQ(g.ids, (std::vector<int>{4, 4}));
  EXPECT_FALSE(g.finished);
  EXPECT_NEAR(std::exp(g.log_prob), 0.42, 1e-12);
}

TEST(BeamSearch, WiderBeamNeverWorseWhenOptimumReachable) {
  Rng rng(21);
  for (int c = 0; c < 50; ++c) {
    const auto toy = random_toy(rng, 3);
    BeamConfig cfg;
    cfg.max_len = 4;
    cfg.beam = 1;
    const auto b1 = beam_search(toy, cfg);
    cfg.beam = 3;
    const auto b3 = beam_search(toy, cfg);
    EXPECT_GE(b3.log_prob, b1.log_prob - 1e-12);
    double best = -INFINITY;
    std::vector<int> prefix, best_ids;
    enumerate(toy, prefix, 0.0, 4, best, best_ids);
    EXPECT_LE(b3.log_prob, best + 1e-12);
    // A beam covering the whole tree finds the optimum.
    cfg.beam = 64;
    const auto full = beam_search(toy, cfg);
    EXPECT_NEAR(full.log_prob, best, 1e-12);
    EXPECT_EQ(full.ids, best_ids);
  }
}

TEST(BeamSearch, ConfigValidation) {
  auto toy = two_step_toy();
  BeamConfig cfg;
  cfg.beam = 0;
  EXPECT_THROW(beam_search(toy, cfg), ValidationError);
  cfg = {};
  cfg.min_len = 5;
  cfg.max_len = 5;
  EXPECT_THROW(beam_search(toy, cfg), ValidationError);
}

class NetworkDecoding : public ::testing::Test {
 protected:
  static constexpr int kV = 15;
};

TEST_F(NetworkDecoding, BeamOneEqualsGreedy) {
  Rng rng(3);
  for (int c = 0; c < 30; ++c) {
    const model::Network<double> net(tiny_hyperparams(), kV, rng.next_u64());
    const auto ex = random_example(rng, kV, 2 + rng.below(6), 1);
    BeamConfig cfg;
    cfg.beam = 1;
    cfg.max_len = 8;
    cfg.min_len = static_cast<int>(rng.below(4));
    NetworkStepper<double> a(net, ex), b(net, ex);
    const auto r1 = beam_search(a, cfg);
    const auto r2 = greedy_decode(b, cfg);
    EXPECT_EQ(r1.ids, r2.ids);
    EXPECT_EQ(r1.log_prob, r2.log_prob);
    EXPECT_EQ(r1.attention, r2.attention);
  }
}

TEST_F(NetworkDecoding, MinLengthAndRescoring) {
  Rng rng(4);
  for (int c = 0; c < 30; ++c) {
    const model::Network<double> net(tiny_hyperparams(), kV, rng.next_u64());
    const auto ex = random_example(rng, kV, 2 + rng.below(6), 1);
    BeamConfig cfg;
    cfg.beam = 3;
    cfg.max_len = 10;
    cfg.min_len = 3 + static_cast<int>(rng.below(4));
    NetworkStepper<double> s(net, ex);
    const auto r = beam_search(s, cfg);
    EXPECT_GE(static_cast<int>(r.ids.size()), cfg.min_len);
    EXPECT_LE(static_cast<int>(r.ids.size()) + (r.finished ? 1 : 0), cfg.max_len);
    EXPECT_EQ(r.attention.size(), r.ids.size());
    for (const auto& row : r.attention) {
      double sum = 0;
      for (double a : row) sum += a;
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
    for (int id : r.ids) EXPECT_NE(id, vocab::kEos);
    NetworkStepper<double> again(net, ex);
    EXPECT_NEAR(score_sequence(again, r.ids, r.finished, cfg), r.log_prob, 1e-5);
  }
}

TEST(AttentionExport, WritesHeaderAndRows) {
  std::ostringstream out;
  export_attention(out, {"a", "<m>", "x"}, {"x", "y"}, {{0.1, 0.2, 0.7}, {0.5, 0.25, 0.25}});
  EXPECT_EQ(out.str(),
            "token\ta\t<m>\tx\n"
            "x\t0.10000000\t0.20000000\t0.70000000\n"
            "y\t0.50000000\t0.25000000\t0.25000000\n");
  std::ostringstream bad;
  EXPECT_THROW(export_attention(bad, {"a"}, {"x"}, {}), ShapeMismatchError);
  EXPECT_THROW(export_attention(bad, {"a"}, {"x"}, {{0.5, 0.5}}), ShapeMismatchError);
}

TEST(AttentionExport, OverfitCopyModelAttendsToCopiedPosition) {
  const auto pairs = mathsum::testing::copy_task_pairs(32, 7);
  const auto v = mathsum::testing::pool_vocabulary();
  std::vector<vocab::EncodedExample> data;
  for (const auto& p : pairs) data.push_back(vocab::encode(p, v));
  model::Network<double> net(tiny_hyperparams(16, 32, 2, 32), v.size(), 1);
  training::TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.max_epochs = 300;
  cfg.patience = 300;
  cfg.stop_below_train_loss = 0.05;
  const auto result = training::train(net, data, data, cfg);

  int copied = 0, focused = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    NetworkStepper<double> s(result.best, ex);
    BeamConfig bc;
    bc.beam = 1;
    bc.max_len = 20;
    const auto r = greedy_decode(s, bc);
    const std::vector<int> gold(ex.tgt_ext_ids.begin() + 1, ex.tgt_ext_ids.end() - 1);
    if (r.ids != gold) continue;
    // Target equation tokens align with the first source equation.
    const auto& ts = pairs[i].target_spans[0];
    const auto& ss = pairs[i].source_spans[0];
    std::ostringstream tsv;
    std::vector<std::string> src = corpus::surfaces(pairs[i].source);
    export_attention(tsv, src, vocab::decode_ids(r.ids, v, ex.oov_list), r.attention);
    for (auto k = ts.start; k < ts.end; ++k) {
      ++copied;
      if (r.attention[k][ss.start + (k - ts.start)] > 0.5) ++focused;
    }
  }
  ASSERT_GT(copied, 0);
  EXPECT_GE(focused, static_cast<int>(std::ceil(0.8 * copied))) << focused << "/" << copied;
}
