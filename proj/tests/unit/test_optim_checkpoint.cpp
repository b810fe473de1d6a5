#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lcsum/checkpoint.hpp"
#include "lcsum/nn.hpp"
#include "lcsum/optim.hpp"

using namespace lcsum;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("lcsum_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("adam with zero gradients leaves parameters unchanged") {
  Tensor x = Tensor::parameter({2}, {1.5f, -2});
  Adam opt({x});
  for (int i = 0; i < 10; ++i) opt.step(0.1);
  CHECK(x.to_vector() == std::vector<Real>{1.5f, -2});
}

TEST_CASE("first bias-corrected adam step moves by lr") {
  Tensor x = Tensor::parameter({1}, {0});
  Adam opt({x});
  backward(sum(x));
  opt.step(0.01);
  CHECK(std::abs(std::abs(x[0]) - 0.01) <= 1e-6);
}

TEST_CASE("adam minimises a quadratic") {
  Tensor x = Tensor::parameter({1}, {0});
  Adam opt({x});
  for (int i = 0; i < 100; ++i) {
    opt.zero_grad();
    Tensor d = add_scalar(x, -3);
    backward(sum(mul(d, d)));
    opt.step(0.1);
  }
  CHECK(std::abs(x[0] - 3) < 0.1);
}

TEST_CASE("adam rejects a non-positive learning rate") {
  Tensor x = Tensor::parameter({1}, {0});
  Adam opt({x});
  CHECK_THROWS_AS(opt.step(0), ContractError);
}

TEST_CASE("weights file round trip is byte exact") {
  auto dir = scratch("weights");
  std::vector<NamedArray> arrays{{"a.weight", {2, 3}, {1, 2, 3, 4, 5, -0.0f}},
                                 {"b", {1}, {3.25f}},
                                 {"scalar", {}, {7}}};
  write_weights(dir / "w.bin", arrays);
  auto back = read_weights(dir / "w.bin");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].name == arrays[i].name);
    CHECK(back[i].dims == arrays[i].dims);
    CHECK(std::memcmp(back[i].values.data(), arrays[i].values.data(), arrays[i].values.size() * 4) == 0);
  }
  write_weights(dir / "w2.bin", back);
  CHECK(slurp(dir / "w.bin") == slurp(dir / "w2.bin"));
  // Layout: u32 name length, name, u32 rank, dims, floats.
  const std::string bytes = slurp(dir / "w.bin");
  CHECK(static_cast<unsigned char>(bytes[0]) == 8);
  CHECK(bytes.substr(4, 8) == "a.weight");
}

TEST_CASE("checkpoint save and load restores parameters") {
  auto dir = scratch("ckpt");
  Rng rng(1);
  ParamStore a;
  Linear::init(a, "lin", 3, 2, rng);
  save_checkpoint(dir, {{"kind", "test"}}, a);
  ParamStore b;
  Rng other(99);
  Linear::init(b, "lin", 3, 2, other);
  CHECK(a.checksum() != b.checksum());
  load_checkpoint_weights(dir, b);
  CHECK(a.checksum() == b.checksum());
  CHECK(load_checkpoint_config(dir)["kind"] == "test");

  ParamStore wrong;
  Linear::init(wrong, "lin", 4, 2, other);
  CHECK_THROWS_AS(load_checkpoint_weights(dir, wrong), ContractError);
  CHECK_THROWS_AS(load_checkpoint_config(dir / "missing"), IoError);
}

TEST_CASE("param store shares tensors and detaches copies") {
  Rng rng(2);
  ParamStore s;
  Linear::init(s, "l", 2, 2, rng);
  auto l1 = Linear::bind(s, "l");
  auto l2 = Linear::bind(s, "l");
  CHECK(l1.weight.node() == l2.weight.node());
  ParamStore d = s.detached();
  CHECK(d.get("l.weight").node() != s.get("l.weight").node());
  CHECK(d.checksum() == s.checksum());
  CHECK_FALSE(d.get("l.weight").requires_grad());
  CHECK_THROWS_AS(s.add("l.weight", {1}, {0}), ContractError);
}
