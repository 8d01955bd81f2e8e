#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "mathsum/errors.hpp"

namespace mathsum::decoding {

// TSV heatmap: a header row of "token" followed by the source
// surfaces, then one row per generated token: its surface and the attention
// weights over the source.
inline void export_attention(std::ostream& out, const std::vector<std::string>& source,
                             const std::vector<std::string>& generated,
                             const std::vector<std::vector<double>>& attention) {
  if (generated.size() != attention.size()) throw ShapeMismatchError("one attention row per generated token required");
  out << "token";
  for (const auto& s : source) out << '\t' << s;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < generated.size(); ++r) {
    if (attention[r].size() != source.size()) throw ShapeMismatchError("attention row length differs from source");
    out << generated[r];
    for (double a : attention[r]) {
      std::snprintf(buf, sizeof buf, "\t%.8f", a);
      out << buf;
    }
    out << '\n';
  }
}

inline void export_attention(const std::string& path, const std::vector<std::string>& source,
                             const std::vector<std::string>& generated,
                             const std::vector<std::vector<double>>& attention) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  export_attention(out, source, generated, attention);
}

}  // namespace mathsum::decoding
