#pragma once

#include <cctype>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mathsum/cli/config.hpp"
#include "mathsum/cli/manifest.hpp"
#include "mathsum/corpus/jsonl.hpp"
#include "mathsum/corpus/split.hpp"
#include "mathsum/corpus/stats.hpp"
#include "mathsum/decoding/attention_export.hpp"
#include "mathsum/decoding/beam_search.hpp"
#include "mathsum/errors.hpp"
#include "mathsum/eval/baselines.hpp"
#include "mathsum/eval/report.hpp"
#include "mathsum/model/checkpoint.hpp"
#include "mathsum/model/hyperparams.hpp"
#include "mathsum/training/trainer.hpp"
#include "mathsum/vocab/vocabulary.hpp"

namespace mathsum::cli {

namespace detail {

// Tunable settings shared by the config file and command-line flags. A flag
// given on the command line overrides the config file, which overrides the
// built-in default.
class Tunables {
 public:
  void add(CLI::App* app, const std::string& key, const std::string& help) {
    std::string flag = "--" + key;
    for (auto& c : flag) c = c == '_' ? '-' : c;
    auto& e = entries_.emplace_back();
    e.key = key;
    e.opt = app->add_option(flag, e.value, help);
  }

  Settings resolve(const std::string& config_path) const {
    Settings s;
    if (!config_path.empty()) s = load_config(config_path);
    for (const auto& e : entries_) {
      if (e.opt->count() > 0) s[e.key] = e.value;
    }
    return s;
  }

 private:
  struct Entry {
    std::string key, value;
    CLI::Option* opt = nullptr;
  };
  std::deque<Entry> entries_;
};

inline std::uint64_t seed_of(const Settings& s) {
  if (auto it = s.find("seed"); it != s.end()) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(it->second, &used);
      if (used == it->second.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("bad seed: '" + it->second + "'");
  }
  return 1;
}

inline int int_of(const Settings& s, const std::string& k, int dflt) {
  auto it = s.find(k);
  return it == s.end() ? dflt : model::Hyperparams::parse_int(k, it->second);
}

inline double double_of(const Settings& s, const std::string& k, double dflt) {
  auto it = s.find(k);
  return it == s.end() ? dflt : model::Hyperparams::parse_double(k, it->second);
}

inline std::string string_of(const Settings& s, const std::string& k, const std::string& dflt) {
  auto it = s.find(k);
  return it == s.end() ? dflt : it->second;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += v[i];
  }
  return s;
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline std::string safe_name(const std::string& id) {
  std::string s = id;
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return s;
}

inline model::Hyperparams hyperparams_from(const Settings& s) {
  model::Hyperparams hp;
  const std::string preset = string_of(s, "model", "mathsum");
  if (preset == "ptgen") {
    hp = model::Hyperparams::ptgen();
  } else if (preset == "seq2seq") {
    hp = model::Hyperparams::seq2seq();
  } else if (preset != "mathsum") {
    throw ConfigError("unknown model preset: " + preset);
  }
  hp.apply(s);
  hp.validate();
  return hp;
}

inline training::TrainConfig train_config_from(const Settings& s) {
  training::TrainConfig cfg;
  cfg.apply(s);
  cfg.seed = seed_of(s);
  cfg.validate();
  return cfg;
}

// Decode defaults follow the profile: exeq needs 20 tokens, ofeq 15.
inline decoding::BeamConfig beam_config_from(const Settings& s) {
  decoding::BeamConfig cfg;
  const std::string profile = string_of(s, "profile", "exeq");
  if (profile == "exeq") {
    cfg.min_len = 20;
  } else if (profile == "ofeq") {
    cfg.min_len = 15;
  } else {
    throw ConfigError("unknown decode profile: " + profile);
  }
  cfg.beam = int_of(s, "beam", cfg.beam);
  cfg.min_len = int_of(s, "min_len", cfg.min_len);
  cfg.max_len = int_of(s, "max_len", cfg.max_len);
  cfg.validate();
  return cfg;
}

inline std::vector<vocab::EncodedExample> encode_all(const std::vector<corpus::TokenizedPair>& pairs,
                                                     const vocab::Vocabulary& v) {
  std::vector<vocab::EncodedExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(vocab::encode(p, v));
  return out;
}

// Hypothesis files carry either a "hypothesis" string or a tokenized "tgt".
inline std::vector<std::string> headline_of(const nlohmann::json& j) {
  if (j.contains("hypothesis")) return split_ws(j.at("hypothesis").get<std::string>());
  if (j.contains("tgt")) return corpus::surfaces(corpus::token_seq_from_json(j.at("tgt")));
  throw FormatError("line lacks both \"hypothesis\" and \"tgt\"");
}

inline std::map<std::string, std::vector<std::string>> read_headlines(const std::string& path) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& j : corpus::read_jsonl(path)) {
    std::string id;
    try {
      id = j.at("id").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw FormatError(path + ": line without string \"id\"");
    }
    if (!out.emplace(id, headline_of(j)).second) throw FormatError(path + ": duplicate id " + id);
  }
  return out;
}

}  // namespace detail

// Parses argv and runs one subcommand. Returns 0 on success, 1 for usage or
// validation errors and 2 for runtime failures.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Math headline generation pipeline"};
  app.require_subcommand(1);
  std::string config_flag;
  app.add_option("--config", config_flag, std::string("settings file, JSON or key = value (default: $") + kConfigEnv + ")");

  detail::Tunables tun;
  std::function<void()> action;
  auto sub = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    tun.add(s, "seed", "random seed");
    return s;
  };

  // ingest
  std::string in_path, out_path, report_path;
  auto* ingest = sub("ingest", "tokenize raw {id, question, headline} JSONL");
  ingest->add_option("--input", in_path, "raw JSONL")->required();
  ingest->add_option("--output", out_path, "tokenized JSONL")->required();
  ingest->add_option("--report", report_path, "drop report JSON");
  ingest->callback([&] {
    action = [&] {
      const auto settings = tun.resolve(resolve_config_path(config_flag));
      RunManifest m("ingest", resolve_config_path(config_flag), detail::seed_of(settings));
      m.input(in_path);
      std::ifstream in(in_path, std::ios::binary);
      if (!in) throw IoError("cannot open " + in_path);
      const auto r = corpus::ingest_lines(in);
      corpus::write_tokenized(out_path, r.pairs);
      m.output(out_path);
      const auto rep = r.report().dump(2);
      if (!report_path.empty()) {
        detail::open_out(report_path) << rep << '\n';
        m.output(report_path);
      }
      out << rep << '\n';
      m.write_for(out_path);
    };
  });

  // stats
  auto* stats = sub("stats", "corpus statistics and novel n-gram proportions");
  stats->add_option("--input", in_path, "tokenized JSONL")->required();
  stats->add_option("--output", out_path, "statistics JSON")->required();
  stats->callback([&] {
    action = [&] {
      const auto settings = tun.resolve(resolve_config_path(config_flag));
      RunManifest m("stats", resolve_config_path(config_flag), detail::seed_of(settings));
      m.input(in_path);
      const auto pairs = corpus::read_tokenized(in_path);
      const auto st = corpus::corpus_stats(pairs);
      nlohmann::ordered_json j;
      j["num_pairs"] = st.num_pairs;
      auto side = [](const corpus::SideStats& s) {
        nlohmann::ordered_json o;
        o["avg_math_num"] = s.avg_math_num;
        o["avg_text_tokens"] = s.avg_text_tokens;
        o["avg_math_tokens"] = s.avg_math_tokens;
        o["avg_sent_num"] = s.avg_sent_num;
        o["text_vocab_size"] = s.text_vocab_size;
        o["math_vocab_size"] = s.math_vocab_size;
        return o;
      };
      j["question"] = side(st.source);
      j["headline"] = side(st.target);
      nlohmann::ordered_json novel;
      for (std::size_t n = 1; n <= 4; ++n) novel[std::to_string(n)] = corpus::novel_ngram_proportion(pairs, n);
      j["novel_ngram_proportion"] = novel;
      detail::open_out(out_path) << j.dump(2) << '\n';
      m.output(out_path);

      char buf[160];
      std::snprintf(buf, sizeof buf, "%-18s %12s %12s\n", "", "question", "headline");
      out << buf;
      auto row = [&](const char* name, double a, double b) {
        std::snprintf(buf, sizeof buf, "%-18s %12.2f %12.2f\n", name, a, b);
        out << buf;
      };
      row("avg math num", st.source.avg_math_num, st.target.avg_math_num);
      row("avg text tokens", st.source.avg_text_tokens, st.target.avg_text_tokens);
      row("avg math tokens", st.source.avg_math_tokens, st.target.avg_math_tokens);
      row("avg sent num", st.source.avg_sent_num, st.target.avg_sent_num);
      row("text vocab size", static_cast<double>(st.source.text_vocab_size),
          static_cast<double>(st.target.text_vocab_size));
      row("math vocab size", static_cast<double>(st.source.math_vocab_size),
          static_cast<double>(st.target.math_vocab_size));
      for (std::size_t n = 1; n <= 4; ++n) {
        std::snprintf(buf, sizeof buf, "novel %zu-grams      %12.2f%%\n", n, 100 * novel[std::to_string(n)].get<double>());
        out << buf;
      }
      m.write_for(out_path);
    };
  });

  // split
  std::string out_dir;
  auto* split = sub("split", "partition a tokenized corpus into train/val/test");
  split->add_option("--input", in_path, "tokenized JSONL")->required();
  split->add_option("--out-dir", out_dir, "directory for train/val/test.jsonl")->required();
  tun.add(split, "train_frac", "training fraction (0.9)");
  tun.add(split, "val_frac", "validation fraction (0.05)");
  tun.add(split, "test_frac", "test fraction (0.05)");
  split->callback([&] {
    action = [&] {
      const auto cfg = resolve_config_path(config_flag);
      const auto settings = tun.resolve(cfg);
      corpus::SplitSpec spec;
      spec.train_frac = detail::double_of(settings, "train_frac", spec.train_frac);
      spec.val_frac = detail::double_of(settings, "val_frac", spec.val_frac);
      spec.test_frac = detail::double_of(settings, "test_frac", spec.test_frac);
      spec.seed = detail::seed_of(settings);
      RunManifest m("split", cfg, spec.seed);
      m.input(in_path);
      const auto parts = corpus::split_corpus(corpus::read_tokenized(in_path), spec);
      std::filesystem::create_directories(out_dir);
      const auto base = std::filesystem::path(out_dir);
      const std::string tr = (base / "train.jsonl").string(), va = (base / "val.jsonl").string(),
                        te = (base / "test.jsonl").string();
      corpus::write_tokenized(tr, parts.train);
      corpus::write_tokenized(va, parts.val);
      corpus::write_tokenized(te, parts.test);
      m.output(tr);
      m.output(va);
      m.output(te);
      out << "train " << parts.train.size() << " val " << parts.val.size() << " test " << parts.test.size() << '\n';
      m.write_for(tr);
    };
  });

  // build-vocab
  auto* bv = sub("build-vocab", "build the shared vocabulary from training pairs");
  bv->add_option("--input", in_path, "tokenized training JSONL")->required();
  bv->add_option("--output", out_path, "vocabulary TSV")->required();
  tun.add(bv, "vocab_cap", "maximum vocabulary entries beyond the specials (50000)");
  bv->callback([&] {
    action = [&] {
      const auto cfg = resolve_config_path(config_flag);
      const auto settings = tun.resolve(cfg);
      RunManifest m("build-vocab", cfg, detail::seed_of(settings));
      m.input(in_path);
      const auto v = vocab::build_vocab(corpus::read_tokenized(in_path),
                                        detail::int_of(settings, "vocab_cap", vocab::kDefaultMaxSize));
      v.save(out_path);
      m.output(out_path);
      out << "vocabulary size " << v.size() << '\n';
      m.write_for(out_path);
    };
  });

  // train
  std::string train_path, val_path, vocab_path, finetune_path, log_path;
  auto* tr = sub("train", "train a model and write the best checkpoint");
  tr->add_option("--train", train_path, "tokenized training JSONL")->required();
  tr->add_option("--val", val_path, "tokenized validation JSONL")->required();
  tr->add_option("--vocab", vocab_path, "vocabulary TSV")->required();
  tr->add_option("--output", out_path, "checkpoint path")->required();
  tr->add_option("--finetune-from", finetune_path, "initialise from this checkpoint");
  tr->add_option("--log", log_path, "CSV loss log");
  const std::pair<const char*, const char*> train_keys[] = {
      {"model", "mathsum, ptgen or seq2seq (mathsum)"},
      {"emb_dim", "embedding size (128)"},
      {"enc_hidden", "encoder state size over both directions (512)"},
      {"dec_hidden", "decoder state size (512)"},
      {"num_heads", "attention heads in the equation block (4)"},
      {"ffn_dim", "feed-forward width in the equation block (256)"},
      {"dropout", "dropout rate (0.3)"},
      {"enable_math_block", "override the preset's equation block (true/false)"},
      {"enable_copy", "override the preset's copy path (true/false)"},
      {"lr", "AdaGrad learning rate (0.2)"},
      {"adagrad_init_accum", "initial AdaGrad accumulator (0.1)"},
      {"batch_size", "examples per batch (16)"},
      {"max_epochs", "epoch limit (10)"},
      {"clip_norm", "global gradient norm limit (2.0)"},
      {"patience", "validation rounds without improvement before stopping (3)"},
      {"stop_below_train_loss", "stop once the mean epoch loss falls below this (0 = off)"},
  };
  for (const auto& [k, help] : train_keys) tun.add(tr, k, help);
  tr->callback([&] {
    action = [&] {
      const auto cfg_path = resolve_config_path(config_flag);
      const auto settings = tun.resolve(cfg_path);
      const auto tcfg = detail::train_config_from(settings);
      RunManifest m("train", cfg_path, tcfg.seed);
      for (const auto& [k, v] : settings) m.setting(k, v);
      m.input(train_path);
      m.input(val_path);
      m.input(vocab_path);
      const auto v = vocab::Vocabulary::load(vocab_path);
      const auto train_set = detail::encode_all(corpus::read_tokenized(train_path), v);
      const auto val_set = detail::encode_all(corpus::read_tokenized(val_path), v);
      model::Network<double> net = [&] {
        if (finetune_path.empty()) return model::Network<double>(detail::hyperparams_from(settings), v.size(), tcfg.seed);
        m.input(finetune_path);
        auto ck = model::load_checkpoint<double>(finetune_path);
        if (ck.vocab_size != v.size()) throw ConfigError("checkpoint vocabulary size differs from --vocab");
        return ck.network();
      }();
      std::ofstream log;
      if (!log_path.empty()) {
        log = detail::open_out(log_path);
        training::write_log_header(log);
      }
      const auto result = training::train(net, train_set, val_set, tcfg, [&](const training::LogRow& r) {
        if (log) training::write_log_row(log, r);
      });
      model::save_checkpoint(out_path, result.best);
      if (log) {
        log.close();
        m.output(log_path);
      }
      m.output(out_path);
      out << "best epoch " << result.best_epoch << " val_loss " << result.best_val_loss << " epochs "
          << result.epochs_run << '\n';
      m.write_for(out_path);
    };
  });

  // decode
  std::string ckpt_path, attn_dir;
  auto* dec = sub("decode", "beam-search headlines for a tokenized corpus");
  dec->add_option("--checkpoint", ckpt_path, "checkpoint")->required();
  dec->add_option("--vocab", vocab_path, "vocabulary TSV")->required();
  dec->add_option("--input", in_path, "tokenized JSONL")->required();
  dec->add_option("--output", out_path, "hypothesis JSONL")->required();
  dec->add_option("--attn-dump", attn_dir, "directory for per-example attention TSVs");
  tun.add(dec, "beam", "beam size (3)");
  tun.add(dec, "min_len", "minimum tokens before EOS (profile default)");
  tun.add(dec, "max_len", "maximum decoder steps including EOS (50)");
  tun.add(dec, "profile", "exeq (min-len 20) or ofeq (min-len 15)");
  dec->callback([&] {
    action = [&] {
      const auto cfg_path = resolve_config_path(config_flag);
      const auto settings = tun.resolve(cfg_path);
      const auto bcfg = detail::beam_config_from(settings);
      RunManifest m("decode", cfg_path, detail::seed_of(settings));
      m.setting("beam", std::to_string(bcfg.beam));
      m.setting("min_len", std::to_string(bcfg.min_len));
      m.setting("max_len", std::to_string(bcfg.max_len));
      m.input(ckpt_path);
      m.input(vocab_path);
      m.input(in_path);
      const auto net = model::load_checkpoint<double>(ckpt_path).network();
      const auto v = vocab::Vocabulary::load(vocab_path);
      if (v.size() != net.vocab_size()) throw ConfigError("checkpoint vocabulary size differs from --vocab");
      const auto pairs = corpus::read_tokenized(in_path);
      if (!attn_dir.empty()) std::filesystem::create_directories(attn_dir);
      auto o = detail::open_out(out_path);
      for (const auto& p : pairs) {
        const auto ex = vocab::encode(p, v);
        decoding::NetworkStepper<double> stepper(net, ex);
        const auto r = decoding::beam_search(stepper, bcfg);
        const auto words = vocab::decode_ids(r.ids, v, ex.oov_list);
        nlohmann::ordered_json j;
        j["id"] = p.id;
        j["hypothesis"] = detail::join(words);
        j["log_prob"] = r.log_prob;
        o << j.dump() << '\n';
        if (!attn_dir.empty()) {
          const auto path = (std::filesystem::path(attn_dir) / (detail::safe_name(p.id) + ".tsv")).string();
          decoding::export_attention(path, corpus::surfaces(p.source), words, r.attention);
        }
      }
      o.close();
      m.output(out_path);
      m.write_for(out_path);
    };
  });

  // eval
  std::string gold_path, hyp_path;
  auto* ev = sub("eval", "score hypotheses against gold headlines");
  ev->add_option("--gold", gold_path, "tokenized gold JSONL")->required();
  ev->add_option("--hyp", hyp_path, "hypothesis JSONL")->required();
  ev->add_option("--output", out_path, "metrics JSON")->required();
  ev->callback([&] {
    action = [&] {
      const auto cfg_path = resolve_config_path(config_flag);
      const auto settings = tun.resolve(cfg_path);
      RunManifest m("eval", cfg_path, detail::seed_of(settings));
      m.input(gold_path);
      m.input(hyp_path);
      const auto gold = detail::read_headlines(gold_path);
      const auto hyp = detail::read_headlines(hyp_path);
      std::vector<eval::Tokens> g, h;
      for (const auto& [id, toks] : gold) {
        auto it = hyp.find(id);
        if (it == hyp.end()) throw ValidationError("hypothesis missing for id " + id);
        g.push_back(toks);
        h.push_back(it->second);
      }
      for (const auto& [id, toks] : hyp) {
        if (!gold.contains(id)) throw ValidationError("hypothesis id " + id + " has no gold headline");
      }
      const auto rep = eval::evaluate(h, g);
      detail::open_out(out_path) << rep.to_json().dump(2) << '\n';
      m.output(out_path);
      out << rep.to_table();
      m.write_for(out_path);
    };
  });

  // baseline
  std::string method;
  auto* bl = sub("baseline", "extractive baseline headlines");
  bl->add_option("--input", in_path, "tokenized JSONL")->required();
  bl->add_option("--output", out_path, "hypothesis JSONL")->required();
  bl->add_option("--method", method, "random|lead|tail|textrank")->required();
  bl->callback([&] {
    action = [&] {
      const auto cfg_path = resolve_config_path(config_flag);
      const auto settings = tun.resolve(cfg_path);
      const auto seed = detail::seed_of(settings);
      const auto which = eval::baseline_method_from_string(method);
      RunManifest m("baseline", cfg_path, seed);
      m.setting("method", method);
      m.input(in_path);
      auto o = detail::open_out(out_path);
      for (const auto& p : corpus::read_tokenized(in_path)) {
        nlohmann::ordered_json j;
        j["id"] = p.id;
        j["hypothesis"] = corpus::join_surfaces(eval::baseline_select(p, which, seed));
        o << j.dump() << '\n';
      }
      o.close();
      m.output(out_path);
      m.write_for(out_path);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    if (action) action();
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const RuntimeFailure& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace mathsum::cli
