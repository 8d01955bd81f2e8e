#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mathsum/ad/tape.hpp"
#include "mathsum/corpus/token.hpp"
#include "mathsum/errors.hpp"
#include "mathsum/model/hyperparams.hpp"
#include "mathsum/model/parameters.hpp"
#include "mathsum/rng.hpp"
#include "mathsum/vocab/vocabulary.hpp"

namespace mathsum::model {

using ad::Var;
using corpus::EquationSpan;

struct ParamSpec {
  std::string name;
  int rows;
  int cols;
  Init init;
};

// Full parameter layout for a configuration. The order here is the
// checkpoint order.
inline std::vector<ParamSpec> parameter_layout(const Hyperparams& hp, int vocab_size) {
  const int E = hp.emb_dim, F = hp.ffn_dim, D = hp.dec_hidden, h = hp.enc_hidden_per_direction();
  const int H2 = hp.enc_hidden;
  std::vector<ParamSpec> specs;
  specs.push_back({"embedding", vocab_size, E, Init::embedding});
  if (hp.enable_math_block) {
    for (const char* p : {"q", "k", "v", "o"}) {
      specs.push_back({std::string("eq.w") + p, E, E, Init::xavier});
      specs.push_back({std::string("eq.b") + p, 1, E, Init::zeros});
    }
    specs.push_back({"eq.ln1.gamma", 1, E, Init::ones});
    specs.push_back({"eq.ln1.beta", 1, E, Init::zeros});
    specs.push_back({"eq.ffn.w1", E, F, Init::xavier});
    specs.push_back({"eq.ffn.b1", 1, F, Init::zeros});
    specs.push_back({"eq.ffn.w2", F, E, Init::xavier});
    specs.push_back({"eq.ffn.b2", 1, E, Init::zeros});
    specs.push_back({"eq.ln2.gamma", 1, E, Init::ones});
    specs.push_back({"eq.ln2.beta", 1, E, Init::zeros});
  }
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string p = std::string("enc.") + dir;
    specs.push_back({p + ".wx", E, 4 * h, Init::xavier});
    specs.push_back({p + ".wh", h, 4 * h, Init::xavier});
    specs.push_back({p + ".b", 1, 4 * h, Init::zeros});
  }
  specs.push_back({"bridge.h.w", H2, D, Init::xavier});
  specs.push_back({"bridge.h.b", 1, D, Init::zeros});
  specs.push_back({"bridge.c.w", H2, D, Init::xavier});
  specs.push_back({"bridge.c.b", 1, D, Init::zeros});
  specs.push_back({"dec.wx", E + H2, 4 * D, Init::xavier});
  specs.push_back({"dec.wh", D, 4 * D, Init::xavier});
  specs.push_back({"dec.b", 1, 4 * D, Init::zeros});
  specs.push_back({"attn.wh", H2, D, Init::xavier});
  specs.push_back({"attn.ws", D, D, Init::xavier});
  specs.push_back({"attn.b", 1, D, Init::zeros});
  specs.push_back({"attn.v", D, 1, Init::xavier});
  specs.push_back({"out.w", D + H2, vocab_size, Init::xavier});
  specs.push_back({"out.b", 1, vocab_size, Init::zeros});
  if (hp.enable_copy) {
    specs.push_back({"copy.w", H2 + D + E + H2, 1, Init::xavier});
    specs.push_back({"copy.b", 1, 1, Init::zeros});
  }
  return specs;
}

// Sinusoidal position table: row p, even column 2i -> sin(p / 10000^(2i/d)),
// odd column -> cos of the same angle.
template <class T>
Matrix<T> sinusoidal_positions(int rows, int dim) {
  Matrix<T> pe(rows, dim);
  for (int p = 0; p < rows; ++p) {
    for (int i = 0; i < dim; ++i) {
      const double angle = static_cast<double>(p) / std::pow(10000.0, static_cast<double>(2 * (i / 2)) / dim);
      pe(p, i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

// Parameters plus configuration. Immutable during forward evaluation.
template <class T>
class Network {
 public:
  Network(const Hyperparams& hp, int vocab_size, std::uint64_t seed) : hp_(hp), vocab_size_(vocab_size) {
    hp_.validate();
    if (vocab_size <= vocab::kNumSpecials) throw ConfigError("vocabulary too small");
    for (const auto& s : parameter_layout(hp_, vocab_size)) params_.add(s.name, s.rows, s.cols, s.init, seed);
    bind_ids();
  }

  // Adopts existing tensors, checking names and shapes against the layout.
  Network(const Hyperparams& hp, int vocab_size, ParamStore<T> params)
      : hp_(hp), vocab_size_(vocab_size), params_(std::move(params)) {
    hp_.validate();
    const auto layout = parameter_layout(hp_, vocab_size);
    if (static_cast<int>(layout.size()) != params_.size()) throw FormatError("parameter count does not match layout");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& e = params_.entry(static_cast<int>(i));
      if (e.name != layout[i].name || e.value.rows() != layout[i].rows || e.value.cols() != layout[i].cols) {
        throw FormatError("parameter " + layout[i].name + " does not match layout");
      }
    }
    bind_ids();
  }

  const Hyperparams& hyperparams() const { return hp_; }
  int vocab_size() const { return vocab_size_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  struct Ids {
    int embedding = -1;
    int wq = -1, bq = -1, wk = -1, bk = -1, wv = -1, bv = -1, wo = -1, bo = -1;
    int ln1_g = -1, ln1_b = -1, ffn_w1 = -1, ffn_b1 = -1, ffn_w2 = -1, ffn_b2 = -1, ln2_g = -1, ln2_b = -1;
    int fwd_wx = -1, fwd_wh = -1, fwd_b = -1, bwd_wx = -1, bwd_wh = -1, bwd_b = -1;
    int bridge_hw = -1, bridge_hb = -1, bridge_cw = -1, bridge_cb = -1;
    int dec_wx = -1, dec_wh = -1, dec_b = -1;
    int attn_wh = -1, attn_ws = -1, attn_b = -1, attn_v = -1;
    int out_w = -1, out_b = -1;
    int copy_w = -1, copy_b = -1;
  };
  const Ids& ids() const { return ids_; }

 private:
  void bind_ids() {
    auto f = [&](const char* n) { return params_.find(n); };
    ids_.embedding = f("embedding");
    if (hp_.enable_math_block) {
      ids_.wq = f("eq.wq"), ids_.bq = f("eq.bq"), ids_.wk = f("eq.wk"), ids_.bk = f("eq.bk");
      ids_.wv = f("eq.wv"), ids_.bv = f("eq.bv"), ids_.wo = f("eq.wo"), ids_.bo = f("eq.bo");
      ids_.ln1_g = f("eq.ln1.gamma"), ids_.ln1_b = f("eq.ln1.beta");
      ids_.ffn_w1 = f("eq.ffn.w1"), ids_.ffn_b1 = f("eq.ffn.b1");
      ids_.ffn_w2 = f("eq.ffn.w2"), ids_.ffn_b2 = f("eq.ffn.b2");
      ids_.ln2_g = f("eq.ln2.gamma"), ids_.ln2_b = f("eq.ln2.beta");
    }
    ids_.fwd_wx = f("enc.fwd.wx"), ids_.fwd_wh = f("enc.fwd.wh"), ids_.fwd_b = f("enc.fwd.b");
    ids_.bwd_wx = f("enc.bwd.wx"), ids_.bwd_wh = f("enc.bwd.wh"), ids_.bwd_b = f("enc.bwd.b");
    ids_.bridge_hw = f("bridge.h.w"), ids_.bridge_hb = f("bridge.h.b");
    ids_.bridge_cw = f("bridge.c.w"), ids_.bridge_cb = f("bridge.c.b");
    ids_.dec_wx = f("dec.wx"), ids_.dec_wh = f("dec.wh"), ids_.dec_b = f("dec.b");
    ids_.attn_wh = f("attn.wh"), ids_.attn_ws = f("attn.ws"), ids_.attn_b = f("attn.b"), ids_.attn_v = f("attn.v");
    ids_.out_w = f("out.w"), ids_.out_b = f("out.b");
    if (hp_.enable_copy) ids_.copy_w = f("copy.w"), ids_.copy_b = f("copy.b");
  }

  Hyperparams hp_;
  int vocab_size_;
  ParamStore<T> params_;
  Ids ids_;
};

template <class T>
struct DecoderState {
  Var<T> h;        // 1 x dec_hidden
  Var<T> c;        // 1 x dec_hidden
  Var<T> context;  // previous context vector, 1 x enc_hidden
};

template <class T>
struct EncoderOutput {
  Var<T> hidden;            // rows = source length (padding rows are zero)
  Var<T> features;          // hidden projected by the attention input map
  std::vector<bool> mask;   // true at PAD positions
  DecoderState<T> bridge;   // initial decoder state
  int length = 0;           // non-padding rows
};

template <class T>
struct DecoderStep {
  DecoderState<T> state;
  Var<T> attention;             // 1 x source length
  Var<T> context;               // 1 x enc_hidden
  std::optional<Var<T>> copy_prob;  // 1 x 1, absent when copying is disabled
  Var<T> dist;                  // 1 x (vocab + example OOVs)
};

struct StepOptions {
  // Replaces the learned copy probability (testing hook).
  std::optional<double> force_copy_prob;
};

// One forward pass over one example. Binds parameters to a tape; when
// `grads` is given, parameter gradients accumulate there on backward().
// Dropout is active only when a dropout RNG is supplied.
template <class T>
class Graph {
 public:
  Graph(const Network<T>& net, ad::Tape<T>& tape, Gradients<T>* grads = nullptr, Rng* dropout_rng = nullptr)
      : net_(net), tape_(tape), grads_(grads), rng_(dropout_rng), bound_(static_cast<std::size_t>(net.params().size())) {
    if (grads_ && static_cast<int>(grads_->size()) != net.params().size()) {
      throw ShapeMismatchError("gradient buffer count does not match parameters");
    }
  }

  const Network<T>& network() const { return net_; }
  ad::Tape<T>& tape() { return tape_; }
  bool training() const { return rng_ != nullptr && net_.hyperparams().dropout > 0; }

  Var<T> param(int id) {
    auto& slot = bound_[static_cast<std::size_t>(id)];
    if (!slot.valid()) {
      Matrix<T>* sink = grads_ ? &(*grads_)[static_cast<std::size_t>(id)] : nullptr;
      slot = tape_.parameter(net_.params().value(id), sink);
    }
    return slot;
  }

  Var<T> dropout(Var<T> x) {
    if (!training()) return x;
    const double p = net_.hyperparams().dropout;
    Matrix<T> mask(x.rows(), x.cols());
    const T keep_scale = T(1) / static_cast<T>(1.0 - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng_->uniform() < p ? T(0) : keep_scale;
    return ad::mask_multiply(x, std::move(mask));
  }

  // Embedding lookup; extended (copy-only) ids read the UNK row.
  Var<T> embed(std::span<const int> ids) {
    std::vector<int> rows;
    rows.reserve(ids.size());
    for (int id : ids) {
      if (id < 0) throw IdOutOfRangeError("negative token id");
      rows.push_back(id >= net_.vocab_size() ? vocab::kUnk : id);
    }
    return ad::gather_rows(param(net_.ids().embedding), std::move(rows));
  }

  // Rewrites the rows of each equation span with one pass of the shared
  // multi-head self-attention block, applied to that span alone. Rows outside
  // spans pass through untouched.
  Var<T> equation_enrich(Var<T> emb, std::span<const EquationSpan> spans) {
    const auto n = static_cast<std::size_t>(emb.rows());
    std::size_t prev_end = 0;
    for (const auto& s : spans) {
      if (s.start >= s.end || s.end > n || s.start < prev_end) {
        throw SpanOutOfRangeError("equation span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                  ") invalid for " + std::to_string(n) + " rows");
      }
      prev_end = s.end;
    }
    if (spans.empty()) return emb;
    if (!net_.hyperparams().enable_math_block) throw ConfigError("equation block disabled in this configuration");
    std::vector<Var<T>> pieces;
    std::size_t cursor = 0;
    for (const auto& s : spans) {
      if (s.start > cursor) pieces.push_back(ad::slice_rows(emb, cursor, s.start - cursor));
      pieces.push_back(dropout(attention_block(ad::slice_rows(emb, s.start, s.size()))));
      cursor = s.end;
    }
    if (cursor < n) pieces.push_back(ad::slice_rows(emb, cursor, n - cursor));
    return ad::concat_rows<T>(pieces);
  }

  // Multi-head self-attention sub-block over one equation (rows = tokens):
  // positions -> MHA -> add & norm -> FFN -> add & norm.
  Var<T> attention_block(Var<T> x) {
    const auto& id = net_.ids();
    const int d = net_.hyperparams().emb_dim;
    const int heads = net_.hyperparams().num_heads;
    const int dh = d / heads;
    const auto m = static_cast<int>(x.rows());
    Var<T> xp = ad::add(x, tape_.constant(sinusoidal_positions<T>(m, d)));
    Var<T> q = ad::add_row(ad::matmul(xp, param(id.wq)), param(id.bq));
    Var<T> k = ad::add_row(ad::matmul(xp, param(id.wk)), param(id.bk));
    Var<T> v = ad::add_row(ad::matmul(xp, param(id.wv)), param(id.bv));
    std::vector<Var<T>> head_out;
    const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(dh));
    for (int h = 0; h < heads; ++h) {
      Var<T> qh = ad::slice_cols(q, h * dh, dh);
      Var<T> kh = ad::slice_cols(k, h * dh, dh);
      Var<T> vh = ad::slice_cols(v, h * dh, dh);
      Var<T> scores = ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt);
      head_out.push_back(ad::matmul(ad::softmax_rows(scores), vh));
    }
    Var<T> attn = ad::add_row(ad::matmul(ad::concat_cols<T>(head_out), param(id.wo)), param(id.bo));
    Var<T> y1 = ad::layer_norm_rows(ad::add(xp, attn), param(id.ln1_g), param(id.ln1_b));
    Var<T> ffn = ad::relu(ad::add_row(ad::matmul(y1, param(id.ffn_w1)), param(id.ffn_b1)));
    ffn = ad::add_row(ad::matmul(ffn, param(id.ffn_w2)), param(id.ffn_b2));
    return ad::layer_norm_rows(ad::add(y1, ffn), param(id.ln2_g), param(id.ln2_b));
  }

  // Bidirectional LSTM over the first `length` rows (all rows when negative).
  // Remaining rows are padding; their hidden rows are zero and masked.
  EncoderOutput<T> encode(Var<T> enriched, int length = -1) {
    const auto& id = net_.ids();
    const auto total = static_cast<int>(enriched.rows());
    if (length < 0) length = total;
    if (length <= 0 || length > total) throw ValidationError("encoder input must be non-empty");
    const int h = net_.hyperparams().enc_hidden_per_direction();
    Var<T> x = length == total ? enriched : ad::slice_rows(enriched, 0, length);

    auto run = [&](int wx, int wh, int b, bool reverse) {
      Var<T> xg = ad::add_row(ad::matmul(x, param(wx)), param(b));
      Var<T> hs = tape_.constant(Matrix<T>::Zero(1, h));
      Var<T> cs = tape_.constant(Matrix<T>::Zero(1, h));
      std::vector<Var<T>> outs(static_cast<std::size_t>(length));
      for (int step = 0; step < length; ++step) {
        const int pos = reverse ? length - 1 - step : step;
        Var<T> hc = ad::lstm_cell(ad::slice_rows(xg, pos, 1), hs, cs, param(wh));
        hs = ad::slice_cols(hc, 0, h);
        cs = ad::slice_cols(hc, h, h);
        outs[static_cast<std::size_t>(pos)] = hs;
      }
      return std::tuple{ad::concat_rows<T>(outs), hs, cs};
    };
    auto [fwd, fh, fc] = run(id.fwd_wx, id.fwd_wh, id.fwd_b, false);
    auto [bwd, bh, bc] = run(id.bwd_wx, id.bwd_wh, id.bwd_b, true);

    EncoderOutput<T> out;
    out.length = length;
    out.hidden = ad::concat_cols({fwd, bwd});
    if (length < total) {
      out.hidden = ad::concat_rows<T>(
          std::vector<Var<T>>{out.hidden, tape_.constant(Matrix<T>::Zero(total - length, 2 * h))});
    }
    out.mask.assign(static_cast<std::size_t>(total), false);
    for (int i = length; i < total; ++i) out.mask[static_cast<std::size_t>(i)] = true;
    out.features = ad::matmul(out.hidden, param(id.attn_wh));
    Var<T> h_final = ad::concat_cols({fh, bh});
    Var<T> c_final = ad::concat_cols({fc, bc});
    out.bridge.h = ad::add_row(ad::matmul(h_final, param(id.bridge_hw)), param(id.bridge_hb));
    out.bridge.c = ad::add_row(ad::matmul(c_final, param(id.bridge_cw)), param(id.bridge_cb));
    out.bridge.context = tape_.constant(Matrix<T>::Zero(1, 2 * h));
    return out;
  }

  // One decoding step: input feeding, LSTM update, additive attention,
  // vocabulary distribution and the copy switch mixing in attention mass
  // over the example's extended vocabulary.
  DecoderStep<T> decoder_step(int prev_id, const DecoderState<T>& state, const EncoderOutput<T>& enc,
                              std::span<const int> src_ext_ids, int num_oov, const StepOptions& opts = {}) {
    const auto& id = net_.ids();
    const auto& hp = net_.hyperparams();
    if (state.h.cols() != hp.dec_hidden || state.c.cols() != hp.dec_hidden || state.context.cols() != hp.enc_hidden) {
      throw StateDimMismatchError("decoder state dimensions do not match the network");
    }
    if (static_cast<Eigen::Index>(src_ext_ids.size()) != enc.hidden.rows()) {
      throw StateDimMismatchError("source id count does not match encoder rows");
    }
    const int V = net_.vocab_size();
    const int width = V + num_oov;
    const int D = hp.dec_hidden;

    const int prev = prev_id;
    Var<T> x = dropout(ad::concat_cols({embed(std::span<const int>(&prev, 1)), state.context}));
    Var<T> xg = ad::add_row(ad::matmul(x, param(id.dec_wx)), param(id.dec_b));
    Var<T> hc = ad::lstm_cell(xg, state.h, state.c, param(id.dec_wh));
    Var<T> h = ad::slice_cols(hc, 0, D);
    Var<T> c = ad::slice_cols(hc, D, D);

    Var<T> dec_feat = ad::add(ad::matmul(h, param(id.attn_ws)), param(id.attn_b));
    Var<T> scores = ad::transpose(ad::matmul(ad::tanh(ad::add_row(enc.features, dec_feat)), param(id.attn_v)));
    const auto mask = std::make_unique<bool[]>(enc.mask.size());
    std::copy(enc.mask.begin(), enc.mask.end(), mask.get());
    Var<T> alpha = ad::softmax_rows(scores, std::span<const bool>(mask.get(), enc.mask.size()));
    Var<T> context = ad::matmul(alpha, enc.hidden);

    Var<T> logits = ad::add(ad::matmul(ad::concat_cols({h, context}), param(id.out_w)), param(id.out_b));
    Var<T> vocab_dist = ad::pad_cols(ad::softmax_rows(logits), width);

    DecoderStep<T> step;
    step.state = {h, c, context};
    step.attention = alpha;
    step.context = context;
    if (!hp.enable_copy) {
      step.dist = vocab_dist;
      return step;
    }
    Var<T> pc;
    if (opts.force_copy_prob) {
      Matrix<T> v(1, 1);
      v(0, 0) = static_cast<T>(*opts.force_copy_prob);
      pc = tape_.constant(std::move(v));
    } else {
      Var<T> switch_in = ad::concat_cols({context, h, x});
      pc = ad::sigmoid(ad::add(ad::matmul(switch_in, param(id.copy_w)), param(id.copy_b)));
    }
    std::vector<int> index(src_ext_ids.begin(), src_ext_ids.end());
    for (int e : index) {
      if (e < 0 || e >= width) throw IdOutOfRangeError("extended source id out of range");
    }
    Var<T> copy_dist = ad::scatter_cols(alpha, std::move(index), width);
    step.copy_prob = pc;
    step.dist = ad::add(ad::scale_by(copy_dist, pc), ad::scale_by(vocab_dist, ad::one_minus(pc)));
    return step;
  }

 private:
  const Network<T>& net_;
  ad::Tape<T>& tape_;
  Gradients<T>* grads_;
  Rng* rng_;
  std::vector<Var<T>> bound_;
};

}  // namespace mathsum::model
