#include <doctest.h>

#include <cmath>
#include <limits>

#include "lcsum/nn.hpp"
#include "lcsum/rng.hpp"
#include "lcsum/tensor.hpp"

using namespace lcsum;

namespace {

Tensor random_matrix(Rng& rng, int r, int c, bool param = false) {
  std::vector<Real> v(static_cast<std::size_t>(r * c));
  for (auto& x : v) x = static_cast<Real>(rng.normal());
  return param ? Tensor::parameter({r, c}, v) : Tensor::constant({r, c}, v);
}

}  // namespace

TEST_CASE("sigmoid of zero is one half") {
  CHECK(sigmoid(Tensor::vector({0})).data()[0] == doctest::Approx(0.5));
}

TEST_CASE("cosine of orthogonal vectors is zero") {
  CHECK(cosine(Tensor::vector({1, 0}), Tensor::vector({0, 1})).item() == doctest::Approx(0.0));
}

TEST_CASE("softmax of (2,1,0)") {
  auto s = softmax(Tensor::vector({2, 1, 0}));
  CHECK(s[0] == doctest::Approx(0.6652).epsilon(1e-4));
  CHECK(s[1] == doctest::Approx(0.2447).epsilon(1e-4));
  CHECK(s[2] == doctest::Approx(0.0900).epsilon(1e-3));
}

TEST_CASE("softmax rows sum to one and layer norm standardises rows") {
  Rng rng(3);
  Tensor x = random_matrix(rng, 6, 8);
  Tensor s = softmax(scale(x, 5));
  for (int r = 0; r < 6; ++r) {
    double total = 0;
    for (int c = 0; c < 8; ++c) total += s.at(r, c);
    CHECK(std::abs(total - 1.0) <= 1e-6);
  }
  Tensor y = layer_norm(x, Tensor::full({8}, 1), Tensor::zeros({8}));
  for (int r = 0; r < 6; ++r) {
    double mu = 0, var = 0;
    for (int c = 0; c < 8; ++c) mu += y.at(r, c);
    mu /= 8;
    for (int c = 0; c < 8; ++c) var += (y.at(r, c) - mu) * (y.at(r, c) - mu);
    var /= 8;
    CHECK(std::abs(mu) <= 1e-5);
    CHECK(std::abs(var - 1.0) <= 1e-4);
  }
}

TEST_CASE("backward of a sum gives ones") {
  Tensor x = Tensor::parameter({3}, {1, 2, 3});
  backward(sum(x));
  CHECK(x.grad() == std::vector<Real>{1, 1, 1});
}

TEST_CASE("cosine gradient vanishes at a == b") {
  Tensor a = Tensor::parameter({3}, {0.6f, 0.8f, 0});
  Tensor b = Tensor::constant({3}, {0.6f, 0.8f, 0});
  backward(cosine(a, b));
  for (Real g : a.grad()) CHECK(std::abs(g) < 1e-6);
}

TEST_CASE("backward rejects non-scalar losses") {
  Tensor x = Tensor::parameter({2}, {1, 2});
  CHECK_THROWS_AS(backward(scale(x, 2)), ContractError);
}

TEST_CASE("shape mismatches and non-finite inputs raise") {
  Tensor a = Tensor::constant({2, 3}, std::vector<Real>(6, 1));
  Tensor b = Tensor::constant({2, 3}, std::vector<Real>(6, 1));
  CHECK_THROWS_AS(matmul(a, b), ContractError);
  CHECK_THROWS_AS(add(a, Tensor::vector({1, 2})), ContractError);
  CHECK_THROWS_AS(Tensor::constant({2, 2}, {1, 2, 3}), ContractError);
  CHECK_THROWS_AS(sigmoid(Tensor::vector({std::numeric_limits<Real>::quiet_NaN()})), NumericError);
  CHECK_THROWS_AS(softmax(Tensor::vector({std::numeric_limits<Real>::infinity(), 0})), NumericError);
}

TEST_CASE("matmul matches hand computation") {
  Tensor a = Tensor::constant({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::constant({2, 1}, {5, 6});
  Tensor c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c[0] == 17);
  CHECK(c[1] == 39);
}

TEST_CASE("no-grad guard suppresses recording") {
  Tensor x = Tensor::parameter({2}, {1, 2});
  {
    NoGradGuard ng;
    CHECK_FALSE(sum(x).requires_grad());
  }
  CHECK(sum(x).requires_grad());
}

TEST_CASE("attention keeps segments independent") {
  Rng rng(11);
  Tensor a = random_matrix(rng, 3, 8);
  Tensor b = random_matrix(rng, 4, 8);
  auto lay = SegmentLayout::from_lengths(std::vector<int>{3, 4});
  Tensor packed = concat_rows({a, b});
  Tensor out = attention(packed, packed, packed, lay, 2);
  Tensor solo = attention(b, b, b, SegmentLayout::single(4), 2);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 8; ++c) CHECK(out.at(3 + r, c) == doctest::Approx(solo.at(r, c)).epsilon(1e-5));
}

TEST_CASE("transformer encoder over a packed batch equals per-segment runs") {
  Rng rng(5);
  ParamStore store;
  TransformerConfig cfg{2, 4, 16, 32};
  TransformerEncoder::init(store, "enc", cfg, rng);
  auto enc = TransformerEncoder::bind(store, "enc", cfg);
  Tensor a = random_matrix(rng, 2, 16);
  Tensor b = random_matrix(rng, 5, 16);
  Tensor both = enc(concat_rows({a, b}), SegmentLayout::from_lengths(std::vector<int>{2, 5}));
  Tensor one = enc(b, SegmentLayout::single(5));
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 16; ++c) CHECK(both.at(2 + r, c) == doctest::Approx(one.at(r, c)).epsilon(1e-4));
}

TEST_CASE("identical seeds give bit-identical forward passes") {
  auto run = [] {
    Rng rng(42);
    ParamStore store;
    TransformerConfig cfg{1, 2, 8, 16};
    TransformerEncoder::init(store, "e", cfg, rng);
    Tensor x = random_matrix(rng, 4, 8);
    return TransformerEncoder::bind(store, "e", cfg)(x, SegmentLayout::single(4)).to_vector();
  };
  CHECK(run() == run());
}

TEST_CASE("straight_through forwards the hard value") {
  Tensor soft = Tensor::parameter({3}, {0.2f, 0.7f, 0.5f});
  Tensor st = straight_through(soft, {0, 1, 1});
  CHECK(st.to_vector() == std::vector<Real>{0, 1, 1});
  backward(sum(mul(st, Tensor::vector({1, 2, 3}))));
  CHECK(soft.grad() == std::vector<Real>{1, 2, 3});
}

TEST_CASE("detach blocks gradients") {
  Tensor x = Tensor::parameter({2}, {1, 2});
  backward(sum(mul(detach(x), x)));
  CHECK(x.grad() == std::vector<Real>{1, 2});
}

TEST_CASE("segment helpers") {
  auto lay = SegmentLayout::from_lengths(std::vector<int>{2, 3});
  CHECK(lay.count() == 2);
  CHECK(lay.total() == 5);
  auto t = lay.tiled(2);
  CHECK(t.count() == 4);
  CHECK(t.begin(2) == 5);
  Tensor x = Tensor::constant({5, 1}, {1, 3, 2, 4, 6});
  Tensor m = segment_mean_rows(x, lay);
  CHECK(m[0] == doctest::Approx(2));
  CHECK(m[1] == doctest::Approx(4));
  Tensor s = segment_softmax(Tensor::vector({0, 0, 1, 1, 1}), lay);
  CHECK(s[0] == doctest::Approx(0.5));
  CHECK(s[4] == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(SegmentLayout::from_lengths(std::vector<int>{2, 0}), ContractError);
}
