#pragma once

// Checkpoint directory layout:
//   config.json  architecture descriptor
//   weights.bin  records of
//                  u32 name length | UTF-8 name | u32 rank | u32 dims... |
//                  little-endian f32 values
// All integers little-endian.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcsum/nn.hpp"

namespace lcsum {

struct NamedArray {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

void write_weights(const std::filesystem::path& file, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_weights(const std::filesystem::path& file);

void save_checkpoint(const std::filesystem::path& dir, const nlohmann::json& config,
                     const ParamStore& params);
nlohmann::json load_checkpoint_config(const std::filesystem::path& dir);
// Copies stored values into `params`. Every parameter must be present with the
// same shape; extra records are an error too.
void load_checkpoint_weights(const std::filesystem::path& dir, ParamStore& params);

nlohmann::json read_json_file(const std::filesystem::path& file);
// Writes via a temporary sibling and rename.
void write_text_atomic(const std::filesystem::path& file, const std::string& text);

}  // namespace lcsum
