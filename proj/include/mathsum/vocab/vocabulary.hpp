#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mathsum/corpus/token.hpp"
#include "mathsum/errors.hpp"

namespace mathsum::vocab {

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kBos = 2;
inline constexpr int kEos = 3;
inline constexpr int kNumSpecials = 4;
inline constexpr std::array<std::string_view, kNumSpecials> kSpecialSurfaces = {"<pad>", "<unk>", "<s>",
                                                                                "</s>"};
inline constexpr int kDefaultMaxSize = 50000;

// Shared surface <-> id table for text and math tokens of both sides.
class Vocabulary {
 public:
  Vocabulary() {
    for (auto s : kSpecialSurfaces) push(std::string(s));
  }

  int size() const { return static_cast<int>(surface_of_.size()); }

  bool contains(std::string_view surface) const { return id_of_.contains(std::string(surface)); }

  int id(std::string_view surface) const {
    auto it = id_of_.find(std::string(surface));
    return it == id_of_.end() ? kUnk : it->second;
  }

  const std::string& surface(int id) const {
    if (id < 0 || id >= size()) throw IdOutOfRangeError("vocabulary id " + std::to_string(id) + " out of range");
    return surface_of_[static_cast<std::size_t>(id)];
  }

  // One "surface<TAB>id" line per entry, specials first.
  void save(std::ostream& out) const {
    for (int i = 0; i < size(); ++i) out << surface_of_[static_cast<std::size_t>(i)] << '\t' << i << '\n';
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    save(out);
  }

  static Vocabulary load(std::istream& in) {
    std::vector<std::pair<std::string, int>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw FormatError("vocabulary line without tab");
      int id = 0;
      try {
        std::size_t used = 0;
        id = std::stoi(line.substr(tab + 1), &used);
        if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw FormatError("bad vocabulary id in line: " + line);
      }
      rows.emplace_back(line.substr(0, tab), id);
    }
    if (rows.size() < static_cast<std::size_t>(kNumSpecials)) throw FormatError("vocabulary missing specials");
    Vocabulary v;
    v.id_of_.clear();
    v.surface_of_.clear();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& [surface, id] = rows[i];
      if (id != static_cast<int>(i)) throw FormatError("vocabulary ids must be dense and ordered");
      if (i < static_cast<std::size_t>(kNumSpecials) && surface != kSpecialSurfaces[i]) {
        throw FormatError("vocabulary special tokens out of place");
      }
      if (v.id_of_.contains(surface)) throw FormatError("duplicate vocabulary surface: " + surface);
      v.push(surface);
    }
    return v;
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return load(in);
  }

  void push(std::string surface) {
    id_of_.emplace(surface, size());
    surface_of_.push_back(std::move(surface));
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.surface_of_ == b.surface_of_; }

 private:
  std::unordered_map<std::string, int> id_of_;
  std::vector<std::string> surface_of_;
};

inline bool is_special_surface(std::string_view s) {
  return std::find(kSpecialSurfaces.begin(), kSpecialSurfaces.end(), s) != kSpecialSurfaces.end();
}

// Most frequent surfaces over source and target, ties broken
// lexicographically, capped at max_size entries beyond the specials.
inline Vocabulary build_vocab(std::span<const corpus::TokenizedPair> pairs, int max_size = kDefaultMaxSize) {
  if (pairs.empty()) throw EmptyCorpusError("build_vocab on empty corpus");
  if (max_size < 0) throw ValidationError("max_size must be non-negative");
  std::map<std::string, std::size_t> counts;
  for (const auto& p : pairs) {
    for (const auto& t : p.source) ++counts[t.surface];
    for (const auto& t : p.target) ++counts[t.surface];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  int added = 0;
  for (auto& [surface, _] : ranked) {
    if (added >= max_size) break;
    if (is_special_surface(surface)) continue;
    v.push(surface);
    ++added;
  }
  return v;
}

struct EncodedExample {
  std::vector<int> src_ids;
  std::vector<int> src_ext_ids;
  std::vector<int> tgt_ids;      // BOS ... EOS
  std::vector<int> tgt_ext_ids;  // BOS ... EOS
  std::vector<std::string> oov_list;
  std::vector<corpus::EquationSpan> src_spans;

  int num_oov() const { return static_cast<int>(oov_list.size()); }
};

inline EncodedExample encode(const corpus::TokenizedPair& pair, const Vocabulary& v) {
  EncodedExample ex;
  std::unordered_map<std::string, int> oov_id;
  // Literal special surfaces in the data are treated as out-of-vocabulary.
  auto in_vocab = [&](const std::string& s) { return !is_special_surface(s) && v.contains(s); };
  for (const auto& t : pair.source) {
    const int id = in_vocab(t.surface) ? v.id(t.surface) : kUnk;
    ex.src_ids.push_back(id);
    if (!in_vocab(t.surface)) {
      auto [it, inserted] = oov_id.emplace(t.surface, v.size() + static_cast<int>(ex.oov_list.size()));
      if (inserted) ex.oov_list.push_back(t.surface);
      ex.src_ext_ids.push_back(it->second);
    } else {
      ex.src_ext_ids.push_back(id);
    }
  }
  ex.tgt_ids.push_back(kBos);
  ex.tgt_ext_ids.push_back(kBos);
  for (const auto& t : pair.target) {
    const int id = in_vocab(t.surface) ? v.id(t.surface) : kUnk;
    ex.tgt_ids.push_back(id);
    if (!in_vocab(t.surface)) {
      auto it = oov_id.find(t.surface);
      ex.tgt_ext_ids.push_back(it == oov_id.end() ? kUnk : it->second);
    } else {
      ex.tgt_ext_ids.push_back(id);
    }
  }
  ex.tgt_ids.push_back(kEos);
  ex.tgt_ext_ids.push_back(kEos);
  ex.src_spans = pair.source_spans;
  return ex;
}

// Maps extended ids back to surfaces. BOS is skipped; EOS or PAD ends the output.
inline std::vector<std::string> decode_ids(std::span<const int> ids, const Vocabulary& v,
                                           std::span<const std::string> oov_list) {
  std::vector<std::string> out;
  const int limit = v.size() + static_cast<int>(oov_list.size());
  for (int id : ids) {
    if (id < 0 || id >= limit) throw IdOutOfRangeError("id " + std::to_string(id) + " out of extended range");
    if (id == kEos || id == kPad) break;
    if (id == kBos) continue;
    out.push_back(id < v.size() ? v.surface(id) : oov_list[static_cast<std::size_t>(id - v.size())]);
  }
  return out;
}

}  // namespace mathsum::vocab
