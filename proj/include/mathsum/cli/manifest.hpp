#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "mathsum/errors.hpp"

namespace mathsum::cli {

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::string hex;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One per run, written next to the primary output as <output>.manifest.json.
class RunManifest {
 public:
  RunManifest(std::string subcommand, std::string config_path, std::uint64_t seed)
      : subcommand_(std::move(subcommand)), config_path_(std::move(config_path)), seed_(seed),
        started_(utc_timestamp()) {}

  void input(const std::string& path) { inputs_[path] = sha256_file(path); }
  void output(const std::string& path) { outputs_[path] = sha256_file(path); }
  void setting(const std::string& k, const std::string& v) { settings_[k] = v; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["subcommand"] = subcommand_;
    j["config"] = config_path_;
    j["seed"] = seed_;
    j["settings"] = settings_;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["started_at"] = started_;
    j["finished_at"] = utc_timestamp();
    return j;
  }

  void write_for(const std::string& primary_output) const {
    const std::string path = primary_output + ".manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << to_json().dump(2) << '\n';
  }

 private:
  std::string subcommand_, config_path_;
  std::uint64_t seed_;
  std::string started_;
  std::map<std::string, std::string> settings_, inputs_, outputs_;
};

}  // namespace mathsum::cli
