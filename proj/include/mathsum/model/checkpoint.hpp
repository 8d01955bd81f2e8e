#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mathsum/errors.hpp"
#include "mathsum/model/hyperparams.hpp"
#include "mathsum/model/network.hpp"
#include "mathsum/model/parameters.hpp"

// Checkpoint layout (all integers little-endian):
//
//   magic      8 bytes   "MSUMCKPT"
//   version    u32       1
//   manifest   u32 length, then UTF-8 text of "key=value\n" lines
//              (every hyperparameter plus vocab_size)
//   count      u32       number of tensors
//   tensor     u32 name length, name bytes, u32 rows, u32 cols,
//              rows*cols IEEE-754 float32 values in row-major order
namespace mathsum::model {

inline constexpr char kCheckpointMagic[8] = {'M', 'S', 'U', 'M', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw FormatError("truncated checkpoint");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

inline std::string get_bytes(std::istream& in, std::uint32_t n) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw FormatError("truncated checkpoint");
  return s;
}

}  // namespace detail

template <class T>
struct Checkpoint {
  Hyperparams hp;
  int vocab_size = 0;
  ParamStore<T> params;

  Network<T> network() const { return Network<T>(hp, vocab_size, params); }
};

template <class T>
void save_checkpoint(std::ostream& out, const Network<T>& net) {
  out.write(kCheckpointMagic, 8);
  detail::put_u32(out, kCheckpointVersion);
  auto kv = net.hyperparams().to_map();
  kv["vocab_size"] = std::to_string(net.vocab_size());
  std::string manifest;
  for (const auto& [k, v] : kv) manifest += k + "=" + v + "\n";
  detail::put_u32(out, static_cast<std::uint32_t>(manifest.size()));
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  const auto& ps = net.params();
  detail::put_u32(out, static_cast<std::uint32_t>(ps.size()));
  for (int i = 0; i < ps.size(); ++i) {
    const auto& e = ps.entry(i);
    detail::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(e.value.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(e.value.cols()));
    for (Eigen::Index k = 0; k < e.value.size(); ++k) detail::put_f32(out, static_cast<float>(e.value.data()[k]));
  }
  if (!out) throw IoError("checkpoint write failed");
}

template <class T>
void save_checkpoint(const std::string& path, const Network<T>& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  save_checkpoint(out, net);
}

template <class T>
Checkpoint<T> load_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) throw FormatError("not a checkpoint file");
  if (detail::get_u32(in) != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  const std::string manifest = detail::get_bytes(in, detail::get_u32(in));
  std::map<std::string, std::string> kv;
  std::istringstream ms(manifest);
  std::string line;
  while (std::getline(ms, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("bad checkpoint manifest line");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  Checkpoint<T> ck;
  ck.hp.apply(kv);
  if (!kv.contains("vocab_size")) throw FormatError("checkpoint manifest lacks vocab_size");
  ck.vocab_size = Hyperparams::parse_int("vocab_size", kv["vocab_size"]);
  const std::uint32_t count = detail::get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = detail::get_bytes(in, detail::get_u32(in));
    const std::uint32_t rows = detail::get_u32(in);
    const std::uint32_t cols = detail::get_u32(in);
    Matrix<T> m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<T>(detail::get_f32(in));
    ck.params.add(name, std::move(m));
  }
  // Validates names and shapes.
  (void)ck.network();
  return ck;
}

template <class T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return load_checkpoint<T>(in);
}

}  // namespace mathsum::model
