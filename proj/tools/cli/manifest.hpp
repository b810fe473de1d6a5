#pragma once
// Run metadata written next to every CLI output.

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace lcsum::cli {

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& file);

class RunManifest {
 public:
  RunManifest(std::string subcommand, std::vector<std::string> argv);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  // The manifest's own path, excluded from output digests.
  void set_location(std::filesystem::path file) { manifest_file_ = std::move(file); }
  const std::filesystem::path& location() const { return manifest_file_; }
  // Files are digested immediately; directories are walked recursively.
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set_error(int exit_code, const std::string& message);

  nlohmann::ordered_json to_json() const;
  // Atomic write to location().
  void write() const;

 private:
  static void digest_into(const std::filesystem::path& path, std::map<std::string, std::string>& into,
                          const std::filesystem::path& skip);

  std::string subcommand_;
  std::vector<std::string> argv_;
  nlohmann::json config_ = nlohmann::json::object();
  std::uint64_t seed_ = 0;
  std::map<std::string, std::string> inputs_, outputs_;
  int exit_code_ = 0;
  std::string error_;
  std::chrono::steady_clock::time_point start_;
  std::filesystem::path manifest_file_;
};

}  // namespace lcsum::cli
