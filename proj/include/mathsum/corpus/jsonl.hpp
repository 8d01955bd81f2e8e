#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mathsum/corpus/pair.hpp"
#include "mathsum/corpus/token.hpp"
#include "mathsum/errors.hpp"

namespace mathsum::corpus {

using json = nlohmann::json;

inline json to_json(const TokenSeq& seq) {
  json arr = json::array();
  for (const auto& t : seq) arr.push_back(json::array({std::string(to_string(t.kind)), t.surface}));
  return arr;
}

inline json to_json(const std::vector<EquationSpan>& spans) {
  json arr = json::array();
  for (const auto& s : spans) arr.push_back(json::array({s.start, s.end}));
  return arr;
}

inline json to_json(const TokenizedPair& p) {
  json j;
  j["id"] = p.id;
  j["src"] = to_json(p.source);
  j["tgt"] = to_json(p.target);
  j["src_spans"] = to_json(p.source_spans);
  j["tgt_spans"] = to_json(p.target_spans);
  return j;
}

inline TokenSeq token_seq_from_json(const json& arr) {
  if (!arr.is_array()) throw FormatError("token sequence must be an array");
  TokenSeq seq;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2) throw FormatError("token must be [kind, surface]");
    seq.push_back({kind_from_string(e[0].get<std::string>()), e[1].get<std::string>()});
  }
  return seq;
}

inline std::vector<EquationSpan> spans_from_json(const json& arr) {
  if (!arr.is_array()) throw FormatError("spans must be an array");
  std::vector<EquationSpan> spans;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2) throw FormatError("span must be [start, end]");
    spans.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
  }
  return spans;
}

inline TokenizedPair tokenized_pair_from_json(const json& j) {
  try {
    TokenizedPair p{j.at("id").get<std::string>(), token_seq_from_json(j.at("src")),
                    token_seq_from_json(j.at("tgt")), spans_from_json(j.at("src_spans")),
                    spans_from_json(j.at("tgt_spans"))};
    validate_sequence(p.source, p.source_spans);
    validate_sequence(p.target, p.target_spans);
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed tokenized pair: ") + e.what());
  }
}

inline std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<TokenizedPair> read_tokenized(const std::string& path) {
  std::vector<TokenizedPair> out;
  for (const auto& j : read_jsonl(path)) out.push_back(tokenized_pair_from_json(j));
  return out;
}

inline void write_tokenized(const std::string& path, const std::vector<TokenizedPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& p : pairs) out << to_json(p).dump() << '\n';
}

// Outcome of ingesting raw JSONL: pairs kept plus drop counts per reason.
struct IngestResult {
  std::vector<TokenizedPair> pairs;
  std::size_t total = 0;
  std::map<std::string, std::size_t> dropped;

  std::size_t dropped_total() const {
    std::size_t n = 0;
    for (const auto& [_, c] : dropped) n += c;
    return n;
  }

  json report() const {
    json j;
    j["question_pairs"] = total;
    j["correct_question_pairs"] = pairs.size();
    j["dropped_total"] = dropped_total();
    j["dropped"] = dropped;
    return j;
  }
};

// Parses raw lines {"id","question","headline"} and keeps pairs that
// tokenize cleanly. Malformed lines are dropped, not fatal.
inline IngestResult ingest_lines(std::istream& in) {
  IngestResult r;
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    ++r.total;
    RawPair raw;
    try {
      const json j = json::parse(line);
      raw = {j.at("id").get<std::string>(), j.at("question").get<std::string>(),
             j.at("headline").get<std::string>()};
    } catch (const json::exception&) {
      ++r.dropped["malformed"];
      continue;
    }
    try {
      r.pairs.push_back(build_pair(raw));
    } catch (const MathTokenizeError&) {
      ++r.dropped["math_tokenize"];
    } catch (const UnbalancedDelimiterError&) {
      ++r.dropped["unbalanced_delimiter"];
    } catch (const UnsupportedDelimiterError&) {
      ++r.dropped["inline_dollar"];
    } catch (const InvalidPairError&) {
      ++r.dropped["empty_field"];
    }
  }
  return r;
}

}  // namespace mathsum::corpus
