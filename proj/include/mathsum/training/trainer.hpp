#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mathsum/errors.hpp"
#include "mathsum/model/loss.hpp"
#include "mathsum/model/network.hpp"
#include "mathsum/rng.hpp"
#include "mathsum/training/adagrad.hpp"
#include "mathsum/vocab/vocabulary.hpp"

namespace mathsum::training {

struct TrainConfig {
  double lr = 0.2;
  double adagrad_init_accum = 0.1;
  int batch_size = 16;
  int max_epochs = 10;
  double clip_norm = 2.0;
  int patience = 3;
  std::uint64_t seed = 1;
  // Stop once an epoch's mean training loss falls below this value (0 = off).
  double stop_below_train_loss = 0.0;
  // Batches are drawn from pools of this many batches sorted by source length.
  int bucket_pool_batches = 50;

  void validate() const {
    if (!(lr > 0)) throw ConfigError("lr must be positive");
    if (!(adagrad_init_accum >= 0)) throw ConfigError("adagrad_init_accum must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(clip_norm > 0)) throw ConfigError("clip_norm must be positive");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (bucket_pool_batches < 1) throw ConfigError("bucket_pool_batches must be >= 1");
  }

  void apply(const std::map<std::string, std::string>& m) {
    using model::Hyperparams;
    if (auto it = m.find("lr"); it != m.end()) lr = Hyperparams::parse_double("lr", it->second);
    if (auto it = m.find("adagrad_init_accum"); it != m.end()) {
      adagrad_init_accum = Hyperparams::parse_double("adagrad_init_accum", it->second);
    }
    if (auto it = m.find("batch_size"); it != m.end()) batch_size = Hyperparams::parse_int("batch_size", it->second);
    if (auto it = m.find("max_epochs"); it != m.end()) max_epochs = Hyperparams::parse_int("max_epochs", it->second);
    if (auto it = m.find("clip_norm"); it != m.end()) clip_norm = Hyperparams::parse_double("clip_norm", it->second);
    if (auto it = m.find("patience"); it != m.end()) patience = Hyperparams::parse_int("patience", it->second);
    if (auto it = m.find("seed"); it != m.end()) seed = static_cast<std::uint64_t>(std::stoull(it->second));
    if (auto it = m.find("stop_below_train_loss"); it != m.end()) {
      stop_below_train_loss = Hyperparams::parse_double("stop_below_train_loss", it->second);
    }
  }
};

// One CSV row: per-batch rows carry `loss`; per-epoch rows carry the mean
// training loss and `val_loss`, with batch = -1.
struct LogRow {
  int epoch = 0;
  int batch = 0;
  double loss = 0;
  std::optional<double> val_loss;
};

inline void write_log_header(std::ostream& out) { out << "epoch,batch,loss,val_loss\n"; }

inline void write_log_row(std::ostream& out, const LogRow& r) {
  char buf[128];
  if (r.val_loss) {
    std::snprintf(buf, sizeof buf, "%d,,%.9g,%.9g\n", r.epoch, r.loss, *r.val_loss);
  } else {
    std::snprintf(buf, sizeof buf, "%d,%d,%.9g,\n", r.epoch, r.batch, r.loss);
  }
  out << buf;
}

// Pads every example of a batch to the longest source and target with PAD.
inline std::vector<vocab::EncodedExample> collate(const std::vector<const vocab::EncodedExample*>& batch) {
  std::size_t src_len = 0, tgt_len = 0;
  for (const auto* ex : batch) {
    src_len = std::max(src_len, ex->src_ids.size());
    tgt_len = std::max(tgt_len, ex->tgt_ids.size());
  }
  std::vector<vocab::EncodedExample> out;
  out.reserve(batch.size());
  for (const auto* ex : batch) {
    vocab::EncodedExample p = *ex;
    p.src_ids.resize(src_len, vocab::kPad);
    p.src_ext_ids.resize(src_len, vocab::kPad);
    p.tgt_ids.resize(tgt_len, vocab::kPad);
    p.tgt_ext_ids.resize(tgt_len, vocab::kPad);
    out.push_back(std::move(p));
  }
  return out;
}

// Shuffles, sorts pools of batches by source length, cuts batches, and
// shuffles batch order. Deterministic for a given rng state.
inline std::vector<std::vector<std::size_t>> make_batches(const std::vector<vocab::EncodedExample>& data,
                                                          int batch_size, int pool_batches, Rng& rng) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t pool = static_cast<std::size_t>(batch_size) * static_cast<std::size_t>(pool_batches);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t p = 0; p < order.size(); p += pool) {
    const auto end = std::min(order.size(), p + pool);
    std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(p), order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return data[a].src_ids.size() < data[b].src_ids.size(); });
    for (std::size_t b = p; b < end; b += static_cast<std::size_t>(batch_size)) {
      const auto be = std::min(end, b + static_cast<std::size_t>(batch_size));
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b), order.begin() + static_cast<std::ptrdiff_t>(be));
    }
  }
  rng.shuffle(std::span<std::vector<std::size_t>>(batches));
  return batches;
}

// Loss of one example without dropout or gradient recording.
template <class T>
T evaluate_loss(const model::Network<T>& net, const vocab::EncodedExample& ex) {
  ad::Tape<T> tape(false);
  model::Graph<T> g(net, tape);
  return model::forward_example(g, ex).loss.scalar();
}

template <class T>
T mean_loss(const model::Network<T>& net, const std::vector<vocab::EncodedExample>& data) {
  if (data.empty()) throw EmptyCorpusError("mean_loss on empty data");
  T total = 0;
  for (const auto& ex : data) total += evaluate_loss(net, ex);
  return total / static_cast<T>(data.size());
}

// Mean loss over a padded batch; gradients (scaled by 1/batch) accumulate
// into `grads`. Each example draws dropout from its own seeded stream.
template <class T>
T batch_loss_and_grad(const model::Network<T>& net, const std::vector<vocab::EncodedExample>& batch,
                      model::Gradients<T>& grads, std::uint64_t dropout_seed) {
  T total = 0;
  const T inv = T(1) / static_cast<T>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng rng(mix_seed(dropout_seed, i));
    ad::Tape<T> tape(true);
    model::Graph<T> g(net, tape, &grads, &rng);
    auto fr = model::forward_example(g, batch[i]);
    total += fr.loss.scalar();
    tape.backward(fr.loss, inv);
  }
  return total * inv;
}

template <class T>
struct TrainResult {
  model::Network<T> best;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_run = 0;
  int validation_rounds = 0;
  bool early_stopped = false;
  std::vector<double> epoch_train_loss;
  std::vector<double> epoch_val_loss;
};

// Trains `net` in place with AdaGrad and global-norm clipping. After every
// epoch the validation loss decides the retained best parameters and early
// stopping.
template <class T>
TrainResult<T> train(model::Network<T>& net, const std::vector<vocab::EncodedExample>& train_set,
                     const std::vector<vocab::EncodedExample>& val_set, const TrainConfig& cfg,
                     const std::function<void(const LogRow&)>& on_log = {}) {
  cfg.validate();
  if (train_set.empty()) throw EmptyCorpusError("empty training set");
  if (val_set.empty()) throw EmptyCorpusError("empty validation set");
  Adagrad<T> opt(net.params().zeros_like(), static_cast<T>(cfg.lr), static_cast<T>(cfg.adagrad_init_accum));
  TrainResult<T> result{net};
  int bad_rounds = 0;
  Rng order_rng(mix_seed(cfg.seed, 0x6f72646572ULL));
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto batches = make_batches(train_set, cfg.batch_size, cfg.bucket_pool_batches, order_rng);
    double epoch_loss = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      std::vector<const vocab::EncodedExample*> members;
      for (auto i : batches[b]) members.push_back(&train_set[i]);
      auto padded = collate(members);
      auto grads = net.params().zeros_like();
      const std::uint64_t dseed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)), b);
      const T loss = batch_loss_and_grad(net, padded, grads, dseed);
      if (!std::isfinite(static_cast<double>(loss))) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      clip_global_norm(grads, static_cast<T>(cfg.clip_norm));
      opt.step(net.params(), grads);
      epoch_loss += static_cast<double>(loss) * static_cast<double>(members.size());
      if (on_log) on_log({epoch, static_cast<int>(b), static_cast<double>(loss), std::nullopt});
    }
    epoch_loss /= static_cast<double>(train_set.size());
    const double val = static_cast<double>(mean_loss(net, val_set));
    if (!std::isfinite(val)) throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    result.epochs_run = epoch;
    ++result.validation_rounds;
    result.epoch_train_loss.push_back(epoch_loss);
    result.epoch_val_loss.push_back(val);
    if (on_log) on_log({epoch, -1, epoch_loss, val});
    if (val < result.best_val_loss) {
      result.best_val_loss = val;
      result.best_epoch = epoch;
      result.best = net;
      bad_rounds = 0;
    } else if (++bad_rounds >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
    if (cfg.stop_below_train_loss > 0 && epoch_loss < cfg.stop_below_train_loss) break;
  }
  return result;
}

}  // namespace mathsum::training
