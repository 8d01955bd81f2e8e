#pragma once

#include <map>
#include <sstream>
#include <string>

#include "mathsum/errors.hpp"

namespace mathsum::model {

// Network sizes and ablation switches. Defaults are the full-scale setting.
struct Hyperparams {
  int emb_dim = 128;
  int enc_hidden = 512;  // total over both directions
  int dec_hidden = 512;
  int num_heads = 4;
  int ffn_dim = 256;
  double dropout = 0.3;
  int vocab_cap = 50000;
  bool enable_math_block = true;
  bool enable_copy = true;

  int enc_hidden_per_direction() const { return enc_hidden / 2; }

  void validate() const {
    if (emb_dim <= 0 || enc_hidden <= 0 || dec_hidden <= 0 || num_heads <= 0 || ffn_dim <= 0 || vocab_cap <= 0) {
      throw ConfigError("hyperparameter sizes must be positive");
    }
    if (emb_dim % num_heads != 0) throw ConfigError("emb_dim must be divisible by num_heads");
    if (enc_hidden % 2 != 0) throw ConfigError("enc_hidden must be even");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  }

  // Attention sequence-to-sequence baseline.
  static Hyperparams seq2seq() {
    Hyperparams h;
    h.enable_math_block = false;
    h.enable_copy = false;
    return h;
  }

  // Pointer-generator baseline: copy on, equation block off.
  static Hyperparams ptgen() {
    Hyperparams h;
    h.enable_math_block = false;
    return h;
  }

  std::map<std::string, std::string> to_map() const {
    std::map<std::string, std::string> m;
    m["emb_dim"] = std::to_string(emb_dim);
    m["enc_hidden"] = std::to_string(enc_hidden);
    m["dec_hidden"] = std::to_string(dec_hidden);
    m["num_heads"] = std::to_string(num_heads);
    m["ffn_dim"] = std::to_string(ffn_dim);
    std::ostringstream d;
    d.precision(17);
    d << dropout;
    m["dropout"] = d.str();
    m["vocab_cap"] = std::to_string(vocab_cap);
    m["enable_math_block"] = enable_math_block ? "1" : "0";
    m["enable_copy"] = enable_copy ? "1" : "0";
    return m;
  }

  // Overrides fields present in `m`; unknown keys are ignored.
  void apply(const std::map<std::string, std::string>& m) {
    auto get_int = [&](const char* k, int& dst) {
      if (auto it = m.find(k); it != m.end()) dst = parse_int(k, it->second);
    };
    auto get_bool = [&](const char* k, bool& dst) {
      if (auto it = m.find(k); it != m.end()) dst = parse_bool(k, it->second);
    };
    get_int("emb_dim", emb_dim);
    get_int("enc_hidden", enc_hidden);
    get_int("dec_hidden", dec_hidden);
    get_int("num_heads", num_heads);
    get_int("ffn_dim", ffn_dim);
    get_int("vocab_cap", vocab_cap);
    if (auto it = m.find("dropout"); it != m.end()) dropout = parse_double("dropout", it->second);
    get_bool("enable_math_block", enable_math_block);
    get_bool("enable_copy", enable_copy);
  }

  static int parse_int(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const int x = std::stoi(v, &used);
      if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError("bad integer for " + key + ": '" + v + "'");
  }

  static double parse_double(const std::string& key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used == v.size()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError("bad number for " + key + ": '" + v + "'");
  }

  static bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw ConfigError("bad boolean for " + key + ": '" + v + "'");
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

}  // namespace mathsum::model
