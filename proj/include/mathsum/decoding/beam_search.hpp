#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "mathsum/ad/tape.hpp"
#include "mathsum/errors.hpp"
#include "mathsum/model/loss.hpp"
#include "mathsum/model/network.hpp"
#include "mathsum/vocab/vocabulary.hpp"

namespace mathsum::decoding {

template <class State>
struct StepOutput {
  std::vector<double> log_probs;  // over the extended vocabulary
  std::vector<double> attention;  // over source positions
  State next;
};

// Anything that can be decoded: a start state and a transition that scores
// every next token.
template <class M>
concept StepModel = requires(M& m, const typename M::State& s, int token) {
  { m.initial_state() } -> std::convertible_to<typename M::State>;
  { m.step(s, token) } -> std::convertible_to<StepOutput<typename M::State>>;
};

struct BeamConfig {
  int beam = 3;
  int min_len = 0;   // tokens required before EOS may be emitted
  int max_len = 50;  // decoder steps, EOS included
  int bos = vocab::kBos;
  int eos = vocab::kEos;

  void validate() const {
    if (beam < 1) throw ValidationError("beam must be >= 1");
    if (max_len < 1) throw ValidationError("max_len must be >= 1");
    if (min_len < 0 || min_len >= max_len) throw ValidationError("min_len must satisfy 0 <= min_len < max_len");
  }
};

struct DecodeResult {
  std::vector<int> ids;  // emitted tokens, EOS excluded
  double log_prob = 0;   // includes the EOS step when finished
  bool finished = false;
  std::vector<std::vector<double>> attention;  // one row per emitted token
};

// Length-synchronous beam search over total log probability (no length
// normalisation). EOS is masked while fewer than min_len tokens have been
// emitted. Among the top `beam` expansions, those ending in EOS are set
// aside as finished; the rest stay live. The search ends at max_len, when
// no live hypothesis remains, or when no live hypothesis can still beat the
// best finished one. Returns the best finished hypothesis, or the best live
// one when none finished within max_len.
template <StepModel M>
DecodeResult beam_search(M& model, const BeamConfig& cfg) {
  cfg.validate();
  using State = typename M::State;
  struct Hyp {
    std::vector<int> ids;
    std::vector<std::vector<double>> attention;
    double log_prob = 0;
    State state;
    int prev;
  };
  struct Cand {
    std::size_t hyp;
    int token;
    double score;
  };
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<Hyp> live;
  live.push_back({{}, {}, 0.0, model.initial_state(), cfg.bos});
  std::vector<DecodeResult> finished;

  for (int step = 0; step < cfg.max_len && !live.empty(); ++step) {
    std::vector<Cand> cands;
    std::vector<StepOutput<State>> outs;
    outs.reserve(live.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      outs.push_back(model.step(live[h].state, live[h].prev));
      auto lp = outs.back().log_probs;
      if (static_cast<int>(live[h].ids.size()) < cfg.min_len && cfg.eos < static_cast<int>(lp.size())) {
        lp[static_cast<std::size_t>(cfg.eos)] = ninf;
      }
      std::vector<int> order(lp.size());
      for (std::size_t k = 0; k < lp.size(); ++k) order[k] = static_cast<int>(k);
      const auto keep = std::min<std::size_t>(static_cast<std::size_t>(cfg.beam), order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), [&](int a, int b) {
        const double x = lp[static_cast<std::size_t>(a)], y = lp[static_cast<std::size_t>(b)];
        return x != y ? x > y : a < b;
      });
      for (std::size_t k = 0; k < keep; ++k) {
        const double v = lp[static_cast<std::size_t>(order[k])];
        if (v == ninf || std::isnan(v)) continue;
        cands.push_back({h, order[k], live[h].log_prob + v});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.token < b.token;
    });
    if (cands.size() > static_cast<std::size_t>(cfg.beam)) cands.resize(static_cast<std::size_t>(cfg.beam));
    std::vector<Hyp> next;
    for (const auto& c : cands) {
      const Hyp& parent = live[c.hyp];
      if (c.token == cfg.eos) {
        finished.push_back({parent.ids, c.score, true, parent.attention});
        continue;
      }
      Hyp child{parent.ids, parent.attention, c.score, outs[c.hyp].next, c.token};
      child.ids.push_back(c.token);
      child.attention.push_back(outs[c.hyp].attention);
      next.push_back(std::move(child));
    }
    live = std::move(next);
    // Scores only decrease, so once the best finished hypothesis beats every
    // live one the search is settled.
    if (!finished.empty()) {
      double best_finished = ninf, best_live = ninf;
      for (const auto& f : finished) best_finished = std::max(best_finished, f.log_prob);
      for (const auto& h : live) best_live = std::max(best_live, h.log_prob);
      if (best_finished >= best_live) break;
    }
  }
  auto better = [](const auto& a, const auto& b) { return a.log_prob > b.log_prob; };
  if (!finished.empty()) {
    return *std::min_element(finished.begin(), finished.end(), better);
  }
  if (live.empty()) throw NoHypothesisError("beam search produced no hypothesis");
  const auto& best = *std::min_element(live.begin(), live.end(), better);
  return {best.ids, best.log_prob, false, best.attention};
}

// Argmax decoding, written independently of beam_search.
template <StepModel M>
DecodeResult greedy_decode(M& model, const BeamConfig& cfg) {
  cfg.validate();
  DecodeResult r;
  auto state = model.initial_state();
  int prev = cfg.bos;
  for (int step = 0; step < cfg.max_len; ++step) {
    auto out = model.step(state, prev);
    auto& lp = out.log_probs;
    if (static_cast<int>(r.ids.size()) < cfg.min_len && cfg.eos < static_cast<int>(lp.size())) {
      lp[static_cast<std::size_t>(cfg.eos)] = -std::numeric_limits<double>::infinity();
    }
    const auto best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    r.log_prob += lp[static_cast<std::size_t>(best)];
    if (best == cfg.eos) {
      r.finished = true;
      return r;
    }
    r.ids.push_back(best);
    r.attention.push_back(std::move(out.attention));
    state = std::move(out.next);
    prev = best;
  }
  return r;
}

// Log probability of emitting `ids` (then EOS when `with_eos`), re-scored
// step by step through the model.
template <StepModel M>
double score_sequence(M& model, std::span<const int> ids, bool with_eos, const BeamConfig& cfg = {}) {
  auto state = model.initial_state();
  int prev = cfg.bos;
  double total = 0;
  for (int id : ids) {
    auto out = model.step(state, prev);
    total += out.log_probs.at(static_cast<std::size_t>(id));
    state = std::move(out.next);
    prev = id;
  }
  if (with_eos) total += model.step(state, prev).log_probs.at(static_cast<std::size_t>(cfg.eos));
  return total;
}

// Adapts a trained network and one source example to StepModel.
template <class T>
class NetworkStepper {
 public:
  using State = model::DecoderState<T>;

  NetworkStepper(const model::Network<T>& net, const vocab::EncodedExample& ex)
      : tape_(false), graph_(net, tape_), ex_(ex) {
    const int len = model::unpadded_length(ex_.src_ids);
    if (len == 0) throw ValidationError("empty source");
    src_ids_.assign(ex_.src_ids.begin(), ex_.src_ids.begin() + len);
    src_ext_.assign(ex_.src_ext_ids.begin(), ex_.src_ext_ids.begin() + len);
    auto emb = graph_.embed(src_ids_);
    if (net.hyperparams().enable_math_block) emb = graph_.equation_enrich(emb, ex_.src_spans);
    enc_ = graph_.encode(emb);
  }

  State initial_state() const { return enc_.bridge; }

  StepOutput<State> step(const State& s, int prev) {
    auto st = graph_.decoder_step(prev, s, enc_, src_ext_, ex_.num_oov());
    StepOutput<State> out;
    const auto& d = st.dist.value();
    out.log_probs.resize(static_cast<std::size_t>(d.cols()));
    for (Eigen::Index k = 0; k < d.cols(); ++k) {
      out.log_probs[static_cast<std::size_t>(k)] = std::log(static_cast<double>(d(0, k)));
    }
    const auto& a = st.attention.value();
    out.attention.resize(static_cast<std::size_t>(a.cols()));
    for (Eigen::Index k = 0; k < a.cols(); ++k) out.attention[static_cast<std::size_t>(k)] = static_cast<double>(a(0, k));
    out.next = st.state;
    return out;
  }

 private:
  ad::Tape<T> tape_;
  model::Graph<T> graph_;
  const vocab::EncodedExample& ex_;
  std::vector<int> src_ids_, src_ext_;
  model::EncoderOutput<T> enc_;
};

}  // namespace mathsum::decoding
