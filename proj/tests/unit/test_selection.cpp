#include <doctest.h>

#include <numeric>

#include "lcsum/rng.hpp"
#include "lcsum/selection.hpp"

using namespace lcsum;

TEST_CASE("noise-free gumbel top-k on (2,1,0)") {
  Tensor pi = Tensor::parameter({3}, {2, 1, 0});
  auto m = gumbel_topk(pi, 2, {});
  CHECK(m.hard == std::vector<Real>{1, 1, 0});
  CHECK(m.soft[0] == doctest::Approx(0.6652).epsilon(1e-4));
  CHECK(m.soft[1] == doctest::Approx(0.2447).epsilon(1e-4));
  CHECK(m.soft[2] == doctest::Approx(0.0900).epsilon(1e-3));
  CHECK(m.st.to_vector() == m.hard);
  CHECK(m.provenance == "topk:2");
}

TEST_CASE("top-k with K = n selects everything; K > n is rejected") {
  Tensor pi = Tensor::vector({-3, 5, 0.1f, 2});
  Rng rng(1);
  auto m = gumbel_topk(pi, 4, {1.0, &rng});
  CHECK(m.hard == std::vector<Real>{1, 1, 1, 1});
  CHECK_THROWS_AS(gumbel_topk(pi, 5, {}), ContractError);
  CHECK_THROWS_AS(gumbel_topk(pi, 0, {}), ContractError);
  CHECK_THROWS_AS(gumbel_topk(pi, 1, {0.0, nullptr}), ContractError);
}

TEST_CASE("top-k ties go to the lower index") {
  auto m = gumbel_topk(Tensor::vector({1, 1, 1}), 2, {});
  CHECK(m.hard == std::vector<Real>{1, 1, 0});
}

TEST_CASE("packed top-k selects K per segment") {
  Rng rng(3);
  std::vector<Real> v(12);
  for (auto& x : v) x = static_cast<Real>(rng.normal());
  auto lay = SegmentLayout::from_lengths(std::vector<int>{5, 2, 5});
  std::vector<int> ks{3, 3, 1};
  auto m = gumbel_topk(Tensor::vector(v), lay, ks, {1.0, &rng});
  for (int s = 0; s < 3; ++s) {
    Real total = 0;
    for (int i = lay.begin(s); i < lay.end(s); ++i) total += m.hard[static_cast<std::size_t>(i)];
    CHECK(total == std::min(ks[static_cast<std::size_t>(s)], lay.length(s)));
  }
}

TEST_CASE("gumbel noise is symmetric for equal scores") {
  Rng rng(12345);
  Tensor pi = Tensor::vector({1, 1});
  int first = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) first += gumbel_topk(pi, 1, {1.0, &rng}).hard[0] != 0;
  CHECK(std::abs(first / static_cast<double>(draws) - 0.5) <= 0.01);
}

TEST_CASE("annealed temperature") {
  CHECK(annealed_temperature(2.0, 1.0, 0, 10) == 2.0);
  CHECK(annealed_temperature(2.0, 1.0, 5, 10) == doctest::Approx(1.5));
  CHECK(annealed_temperature(2.0, 1.0, 50, 10) == 1.0);
}

TEST_CASE("straight-through rounding") {
  auto m = st_round(Tensor::vector({0.7f, 0.2f}));
  CHECK(m.st.to_vector() == std::vector<Real>{1, 0});
  CHECK(st_round(Tensor::vector({0.5f})).hard == std::vector<Real>{1});
  Tensor s = Tensor::parameter({3}, {0.1f, 0.6f, 0.9f});
  backward(sum(mul(st_round(s).st, Tensor::vector({2, -1, 3}))));
  CHECK(s.grad() == std::vector<Real>{2, -1, 3});
}

TEST_CASE("mask_selected") {
  Tensor e = Tensor::constant({2, 2}, {1, 2, 3, 4});
  auto m = st_round(Tensor::vector({0.9f, 0.1f}));
  CHECK(mask_selected(e, m).to_vector() == std::vector<Real>{1, 2, 0, 0});
  auto all = st_round(Tensor::vector({0.9f, 0.8f}));
  CHECK(mask_selected(e, all).to_vector() == e.to_vector());

  // Gradient reaches the unselected row through the soft score.
  Tensor ep = Tensor::parameter({2, 2}, {1, 2, 3, 4});
  Tensor pi = Tensor::parameter({2}, {3, 0});
  auto tk = gumbel_topk(pi, 1, {});
  backward(sum(mask_selected(ep, tk)));
  auto g = ep.grad();
  CHECK(g[2] == doctest::Approx(tk.soft[1]));
  CHECK(g[2] != 0);
}

TEST_CASE("mask_rest zeroes exactly the excluded row") {
  Tensor e = Tensor::constant({3, 2}, {1, 2, 3, 4, 5, 6});
  auto m = st_round(Tensor::vector({0.9f, 0.9f, 0.1f}));
  CHECK(mask_rest(e, m, 0).to_vector() == std::vector<Real>{0, 0, 3, 4, 5, 6});
  const int ks[] = {0};
  auto rest = rest_mask(m, ks);
  Real kept = 0;
  for (Real v : rest.st.to_vector()) kept += 1 - v;
  CHECK(kept == 2);
  CHECK_THROWS_AS(mask_rest(e, m, 2), ContractError);
  CHECK(mask_complement(e, m).to_vector() == std::vector<Real>{0, 0, 0, 0, 5, 6});
}

TEST_CASE("masks are linear in E") {
  Rng rng(9);
  std::vector<Real> a(16), b(16);
  for (auto& x : a) x = static_cast<Real>(rng.uniform_int(-8, 8));
  for (auto& x : b) x = static_cast<Real>(rng.uniform_int(-8, 8));
  Tensor e1 = Tensor::constant({8, 2}, a), e2 = Tensor::constant({8, 2}, b);
  std::vector<Real> sv(8);
  for (auto& x : sv) x = static_cast<Real>(rng.uniform());
  auto m = st_round(Tensor::vector(sv));
  const int k = m.selected_indices().empty() ? -1 : m.selected_indices().front();
  Tensor combo = add(scale(e1, 2), scale(e2, -3));
  auto lhs = mask_selected(combo, m).to_vector();
  auto rhs = add(scale(mask_selected(e1, m), 2), scale(mask_selected(e2, m), -3)).to_vector();
  CHECK(lhs == rhs);
  if (k >= 0) {
    CHECK(mask_rest(combo, m, k).to_vector() ==
          add(scale(mask_rest(e1, m, k), 2), scale(mask_rest(e2, m, k), -3)).to_vector());
  }
}

TEST_CASE("sample_selected stays inside the segment") {
  Rng rng(4);
  auto m = st_round(Tensor::vector({0.9f, 0.1f, 0.1f, 0.9f, 0.8f}));
  auto lay = SegmentLayout::from_lengths(std::vector<int>{2, 3});
  for (int i = 0; i < 50; ++i) {
    CHECK(sample_selected(m, lay, 0, rng) == 0);
    const int k = sample_selected(m, lay, 1, rng);
    CHECK((k == 3 || k == 4));
  }
}
