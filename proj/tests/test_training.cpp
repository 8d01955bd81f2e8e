#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "mathsum/training/adagrad.hpp"
#include "mathsum/training/trainer.hpp"
#include "support/synthetic.hpp"

using namespace mathsum;
using namespace mathsum::training;
using mathsum::testing::random_example;
using mathsum::testing::tiny_hyperparams;

namespace {

using M = Matrix<double>;
constexpr int kV = 20;

std::vector<vocab::EncodedExample> random_set(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<vocab::EncodedExample> out;
  for (int i = 0; i < n; ++i) out.push_back(random_example(rng, kV, 3 + rng.below(5), 1 + rng.below(4)));
  return out;
}

}  // namespace

TEST(Adagrad, ScalarExample) {
  M p = M::Ones(1, 1), g = M::Ones(1, 1), acc = M::Constant(1, 1, 0.1);
  adagrad_update<double>(p, g, acc, 0.2);
  EXPECT_NEAR(acc(0, 0), 1.1, 1e-15);
  EXPECT_NEAR(p(0, 0), 1 - 0.2 / std::sqrt(1.1), 1e-9);
  EXPECT_NEAR(p(0, 0), 0.80931, 1e-5);
  M wrong = M::Ones(1, 2);
  EXPECT_THROW(adagrad_update<double>(p, wrong, acc, 0.2), ShapeMismatchError);
}

TEST(Adagrad, ZeroGradientLeavesParameter) {
  M p = M::Constant(2, 2, 0.7), g = M::Zero(2, 2), acc = M::Constant(2, 2, 0.1);
  adagrad_update<double>(p, g, acc, 0.2);
  EXPECT_EQ(p, M::Constant(2, 2, 0.7));
}

TEST(Clip, GlobalNorm) {
  std::vector<M> g = {(M(1, 2) << 3, 0).finished(), (M(1, 1) << 4).finished()};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 2.0), 5.0);
  EXPECT_NEAR(global_norm(g), 2.0, 1e-12);
  EXPECT_NEAR(g[0](0, 0), 1.2, 1e-12);
  std::vector<M> small = {(M(1, 1) << 0.5).finished()};
  clip_global_norm(small, 2.0);
  EXPECT_EQ(small[0](0, 0), 0.5);
}

TEST(TrainConfig, ValidationAndOverrides) {
  TrainConfig c;
  EXPECT_DOUBLE_EQ(c.lr, 0.2);
  EXPECT_DOUBLE_EQ(c.adagrad_init_accum, 0.1);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_DOUBLE_EQ(c.clip_norm, 2.0);
  EXPECT_EQ(c.patience, 3);
  c.apply({{"lr", "0.5"}, {"patience", "7"}, {"seed", "11"}});
  EXPECT_DOUBLE_EQ(c.lr, 0.5);
  EXPECT_EQ(c.patience, 7);
  EXPECT_EQ(c.seed, 11u);
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(c.apply({{"lr", "fast"}}), ConfigError);
}

TEST(Batches, CollatePadsToLongest) {
  const auto data = random_set(1, 3);
  const auto padded = collate({&data[0], &data[1], &data[2]});
  std::size_t s = 0, t = 0;
  for (const auto& ex : data) s = std::max(s, ex.src_ids.size()), t = std::max(t, ex.tgt_ids.size());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(padded[i].src_ids.size(), s);
    EXPECT_EQ(padded[i].tgt_ext_ids.size(), t);
    for (auto k = data[i].src_ids.size(); k < s; ++k) EXPECT_EQ(padded[i].src_ids[k], vocab::kPad);
  }
}

TEST(Batches, EveryExampleOnceAndDeterministic) {
  const auto data = random_set(2, 37);
  Rng a(5), b(5);
  const auto ba = make_batches(data, 8, 2, a);
  const auto bb = make_batches(data, 8, 2, b);
  EXPECT_EQ(ba, bb);
  std::vector<int> seen(37, 0);
  for (const auto& batch : ba) {
    EXPECT_LE(batch.size(), 8u);
    for (auto i : batch) ++seen[i];
  }
  for (int c : seen) EXPECT_EQ(c, 1);
}

TEST(Loss, PaddingNeutrality) {
  const model::Network<double> net(tiny_hyperparams(), kV, 4);
  Rng rng(3);
  for (int c = 0; c < 20; ++c) {
    const auto ex = random_example(rng, kV, 3 + rng.below(4), 1 + rng.below(3));
    auto padded = ex;
    padded.src_ids.resize(ex.src_ids.size() + 4, vocab::kPad);
    padded.src_ext_ids.resize(ex.src_ext_ids.size() + 4, vocab::kPad);
    padded.tgt_ids.resize(ex.tgt_ids.size() + 3, vocab::kPad);
    padded.tgt_ext_ids.resize(ex.tgt_ext_ids.size() + 3, vocab::kPad);
    EXPECT_NEAR(evaluate_loss(net, padded), evaluate_loss(net, ex), 1e-6);
  }
}

TEST(Loss, BatchGradientIsMeanOfExampleGradients) {
  const model::Network<double> net(tiny_hyperparams(), kV, 4);
  const auto data = random_set(4, 2);
  const auto batch = collate({&data[0], &data[1]});
  auto gb = net.params().zeros_like();
  batch_loss_and_grad(net, batch, gb, 0);
  auto g0 = net.params().zeros_like(), g1 = net.params().zeros_like();
  batch_loss_and_grad(net, {data[0]}, g0, 0);
  batch_loss_and_grad(net, {data[1]}, g1, 0);
  for (std::size_t i = 0; i < gb.size(); ++i) EXPECT_LT((gb[i] - (g0[i] + g1[i]) / 2).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Loss, OneSmallStepDecreasesLoss) {
  Rng rng(8);
  for (int c = 0; c < 5; ++c) {
    model::Network<double> net(tiny_hyperparams(), kV, static_cast<std::uint64_t>(c + 1));
    const auto ex = random_example(rng, kV, 5, 3);
    const double before = evaluate_loss(net, ex);
    auto g = net.params().zeros_like();
    batch_loss_and_grad(net, {ex}, g, 0);
    Adagrad<double> opt(g, 1e-3, 0.1);
    opt.step(net.params(), g);
    EXPECT_LT(evaluate_loss(net, ex), before);
  }
}

TEST(Train, PatienceOneStopsAfterTwoRounds) {
  // Validation asks for a different first token than training. Once the
  // shared structure is learnt in the first epoch, further training only
  // moves probability away from the validation target.
  std::vector<vocab::EncodedExample> train_set, val_set;
  for (int i = 0; i < 64; ++i) {
    vocab::EncodedExample ex;
    ex.src_ids = ex.src_ext_ids = {5 + i % 4, 9, 10};
    ex.tgt_ids = ex.tgt_ext_ids = {vocab::kBos, 11, vocab::kEos};
    train_set.push_back(ex);
    ex.tgt_ids = ex.tgt_ext_ids = {vocab::kBos, 12, vocab::kEos};
    if (i < 4) val_set.push_back(ex);
  }
  model::Network<double> net(tiny_hyperparams(), kV, 1);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 20;
  cfg.patience = 1;
  const auto r = train(net, train_set, val_set, cfg);
  EXPECT_TRUE(r.early_stopped);
  EXPECT_EQ(r.validation_rounds, 2);
  EXPECT_GT(r.epoch_val_loss[1], r.epoch_val_loss[0]);
  EXPECT_EQ(r.best_epoch, 1);
  EXPECT_DOUBLE_EQ(r.best_val_loss, r.epoch_val_loss[0]);
  EXPECT_DOUBLE_EQ(mean_loss(r.best, val_set), r.best_val_loss);
}

TEST(Train, DeterministicUnderSeedAndLogsEveryBatch) {
  const auto train_set = random_set(6, 10);
  const auto val_set = random_set(7, 3);
  auto hp = tiny_hyperparams();
  hp.dropout = 0.3;
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 2;
  cfg.seed = 3;
  std::ostringstream log_a, log_b;
  auto run = [&](std::ostringstream& log) {
    model::Network<double> net(hp, kV, 1);
    write_log_header(log);
    auto r = train(net, train_set, val_set, cfg, [&](const LogRow& row) { write_log_row(log, row); });
    return r;
  };
  const auto a = run(log_a);
  const auto b = run(log_b);
  EXPECT_EQ(log_a.str(), log_b.str());
  EXPECT_EQ(a.epoch_val_loss, b.epoch_val_loss);
  // 3 batches plus one summary row per epoch, after the header.
  const std::string text = log_a.str();
  const auto lines = std::count(text.begin(), text.end(), '\n');
  EXPECT_EQ(lines, 1 + 2 * (3 + 1));
  cfg.seed = 4;
  std::ostringstream log_c;
  run(log_c);
  EXPECT_NE(log_c.str(), log_a.str());
}

TEST(Train, LossDecreasesOnTrainingData) {
  const auto data = random_set(9, 12);
  model::Network<double> net(tiny_hyperparams(), kV, 2);
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.max_epochs = 15;
  cfg.patience = 15;
  const auto r = train(net, data, data, cfg);
  EXPECT_LT(r.epoch_val_loss.back(), r.epoch_val_loss.front());
  EXPECT_LT(r.best_val_loss, std::log(static_cast<double>(kV)));
}

TEST(Train, RejectsEmptySets) {
  model::Network<double> net(tiny_hyperparams(), kV, 1);
  const auto data = random_set(1, 2);
  EXPECT_THROW(train(net, {}, data, TrainConfig{}), EmptyCorpusError);
  EXPECT_THROW(train(net, data, {}, TrainConfig{}), EmptyCorpusError);
}
