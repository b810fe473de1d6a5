#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "lcsum/checkpoint.hpp"
#include "lcsum/errors.hpp"

#ifndef LCSUM_VERSION
#define LCSUM_VERSION "0.0.0"
#endif

namespace lcsum::cli {
namespace fs = std::filesystem;

std::string sha256_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 initialisation failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

RunManifest::RunManifest(std::string subcommand, std::vector<std::string> argv)
    : subcommand_(std::move(subcommand)), argv_(std::move(argv)), start_(std::chrono::steady_clock::now()) {}

void RunManifest::digest_into(const fs::path& path, std::map<std::string, std::string>& into, const fs::path& skip) {
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::recursive_directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      if (!skip.empty() && fs::exists(skip) && fs::equivalent(entry.path(), skip)) continue;
      into[entry.path().generic_string()] = sha256_file(entry.path());
    }
  } else if (fs::exists(path)) {
    into[path.generic_string()] = sha256_file(path);
  } else {
    throw IoError("no such file or directory: " + path.string());
  }
}

void RunManifest::add_input(const fs::path& path) { digest_into(path, inputs_, {}); }

void RunManifest::add_output(const fs::path& path) {
  if (!fs::exists(path)) return;
  digest_into(path, outputs_, manifest_file_);
}

void RunManifest::set_error(int exit_code, const std::string& message) {
  exit_code_ = exit_code;
  error_ = message;
}

nlohmann::ordered_json RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["subcommand"] = subcommand_;
  j["argv"] = argv_;
  j["config"] = config_;
  j["seed"] = seed_;
  j["version"] = {{"lcsum", LCSUM_VERSION}, {"compiler", __VERSION__}, {"real_bits", sizeof(Real) * 8}};
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  j["exit_code"] = exit_code_;
  if (!error_.empty()) j["error"] = error_;
  j["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  return j;
}

void RunManifest::write() const {
  if (manifest_file_.empty()) return;
  write_text_atomic(manifest_file_, to_json().dump(2) + "\n");
}

}  // namespace lcsum::cli
