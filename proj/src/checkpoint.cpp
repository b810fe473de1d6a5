#include "lcsum/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lcsum/errors.hpp"

namespace lcsum {
namespace fs = std::filesystem;
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos, const fs::path& file) {
  if (pos + 4 > in.size()) throw IoError("truncated weights file: " + file.string());
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_text_atomic(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  fs::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, file, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + file.string() + ": " + ec.message());
}

void write_weights(const fs::path& file, const std::vector<NamedArray>& arrays) {
  std::string out;
  for (const auto& a : arrays) {
    put_u32(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put_u32(out, static_cast<std::uint32_t>(a.dims.size()));
    std::size_t n = 1;
    for (auto d : a.dims) {
      put_u32(out, d);
      n *= d;
    }
    if (n != a.values.size()) throw ContractError("weights record " + a.name + " has inconsistent size");
    for (float f : a.values) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  write_text_atomic(file, out);
}

std::vector<NamedArray> read_weights(const fs::path& file) {
  const std::string in = read_file(file);
  std::vector<NamedArray> arrays;
  std::size_t pos = 0;
  while (pos < in.size()) {
    NamedArray a;
    const auto len = get_u32(in, pos, file);
    if (pos + len > in.size()) throw IoError("truncated weights file: " + file.string());
    a.name = in.substr(pos, len);
    pos += len;
    const auto rank = get_u32(in, pos, file);
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      a.dims.push_back(get_u32(in, pos, file));
      n *= a.dims.back();
    }
    a.values.resize(n);
    for (auto& f : a.values) f = std::bit_cast<float>(get_u32(in, pos, file));
    arrays.push_back(std::move(a));
  }
  return arrays;
}

void save_checkpoint(const fs::path& dir, const nlohmann::json& config, const ParamStore& params) {
  fs::create_directories(dir);
  std::vector<NamedArray> arrays;
  for (const auto& name : params.names()) {
    const Tensor& t = params.get(name);
    NamedArray a;
    a.name = name;
    for (int d : t.shape()) a.dims.push_back(static_cast<std::uint32_t>(d));
    a.values.reserve(t.size());
    for (Real v : t.data()) a.values.push_back(static_cast<float>(v));
    arrays.push_back(std::move(a));
  }
  write_weights(dir / "weights.bin", arrays);
  write_text_atomic(dir / "config.json", config.dump(2) + "\n");
}

nlohmann::json read_json_file(const fs::path& file) {
  const std::string text = read_file(file);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid JSON in " + file.string() + ": " + e.what());
  }
}

nlohmann::json load_checkpoint_config(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("checkpoint directory not found: " + dir.string());
  return read_json_file(dir / "config.json");
}

void load_checkpoint_weights(const fs::path& dir, ParamStore& params) {
  const auto arrays = read_weights(dir / "weights.bin");
  if (arrays.size() != params.names().size()) {
    throw ContractError("checkpoint " + dir.string() + " holds " + std::to_string(arrays.size()) +
                        " tensors, model expects " + std::to_string(params.names().size()));
  }
  for (const auto& a : arrays) {
    if (!params.contains(a.name)) throw ContractError("checkpoint tensor not in model: " + a.name);
    Tensor t = params.get(a.name);
    Shape shape(a.dims.begin(), a.dims.end());
    if (shape != t.shape()) {
      throw ContractError("checkpoint tensor " + a.name + " has shape " + shape_str(shape) +
                          ", model expects " + shape_str(t.shape()));
    }
    auto w = t.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<Real>(a.values[i]);
  }
}

}  // namespace lcsum
