#include "lcsum/selection.hpp"

#include <algorithm>
#include <numeric>

namespace lcsum {

std::vector<int> SelectionMask::selected_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < hard.size(); ++i) {
    if (hard[i] != 0) out.push_back(static_cast<int>(i));
  }
  return out;
}

double annealed_temperature(double start, double end, long step, long steps) {
  if (steps <= 0 || step >= steps) return end;
  const double t = static_cast<double>(std::max(step, 0L)) / static_cast<double>(steps);
  return start + (end - start) * t;
}

namespace {

Tensor perturbed_logits(const Tensor& scores, const GumbelOptions& opts) {
  LCSUM_REQUIRE(opts.temperature > 0, "gumbel_topk: temperature must be positive");
  require_finite(scores.data(), "gumbel_topk");
  Tensor z = scores;
  if (opts.noise != nullptr) {
    std::vector<Real> g(scores.size());
    for (auto& x : g) x = static_cast<Real>(opts.noise->gumbel());
    z = add(z, Tensor::constant(scores.shape(), std::move(g)));
  }
  return opts.temperature == 1.0 ? z : scale(z, static_cast<Real>(1.0 / opts.temperature));
}

}  // namespace

SelectionMask gumbel_topk(const Tensor& scores, int k, const GumbelOptions& opts) {
  LCSUM_REQUIRE(scores.rank() == 1, "gumbel_topk: scores must be a vector");
  const int n = scores.dim(0);
  LCSUM_REQUIRE(k >= 1 && k <= n, "gumbel_topk: K must lie in [1, n], got K=" + std::to_string(k) +
                                      " for n=" + std::to_string(n));
  const int ks[] = {k};
  return gumbel_topk(scores, SegmentLayout::single(n), ks, opts);
}

SelectionMask gumbel_topk(const Tensor& scores, const SegmentLayout& layout, std::span<const int> ks,
                          const GumbelOptions& opts) {
  LCSUM_REQUIRE(scores.rank() == 1 && scores.dim(0) == layout.total(),
                "gumbel_topk: scores do not match the layout");
  LCSUM_REQUIRE(static_cast<int>(ks.size()) == layout.count(), "gumbel_topk: one K per segment required");
  Tensor z = perturbed_logits(scores, opts);
  Tensor y = segment_softmax(z, layout);
  std::vector<Real> hard(y.size(), 0);
  std::vector<int> order;
  for (int s = 0; s < layout.count(); ++s) {
    LCSUM_REQUIRE(ks[s] >= 1, "gumbel_topk: K must be positive");
    order.resize(static_cast<std::size_t>(layout.length(s)));
    std::iota(order.begin(), order.end(), layout.begin(s));
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return y[a] > y[b]; });
    const int take = std::min(ks[s], layout.length(s));
    for (int i = 0; i < take; ++i) hard[static_cast<std::size_t>(order[i])] = 1;
  }
  SelectionMask m;
  m.st = straight_through(y, hard);
  m.soft = std::move(y);
  m.hard = std::move(hard);
  m.provenance = "topk:" + (ks.size() == 1 ? std::to_string(ks[0]) : std::string("per-segment"));
  return m;
}

SelectionMask st_round(const Tensor& s) {
  require_finite(s.data(), "st_round");
  std::vector<Real> hard(s.size());
  for (std::size_t i = 0; i < hard.size(); ++i) hard[i] = s[i] >= Real(0.5) ? 1 : 0;
  SelectionMask m;
  m.soft = s;
  m.st = straight_through(s, hard);
  m.hard = std::move(hard);
  m.provenance = "round:0.5";
  return m;
}

namespace {

// Forward: rows scaled by `hard_weights`; backward: the Jacobian of the soft
// product `e * soft_weights`, with respect to both e and the weights.
Tensor st_row_mask(const Tensor& e, const Tensor& soft_weights, std::span<const Real> hard_weights) {
  LCSUM_REQUIRE(e.rank() == 2 && e.rows() == static_cast<int>(hard_weights.size()),
                "mask: row count " + std::to_string(e.rank() == 2 ? e.rows() : -1) +
                    " does not match mask length " + std::to_string(hard_weights.size()));
  const std::size_t width = static_cast<std::size_t>(e.cols());
  std::vector<Real> hard(e.size());
  for (std::size_t r = 0; r < hard_weights.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) hard[r * width + c] = hard_weights[r] * e.data()[r * width + c];
  }
  return straight_through(mul_rows(e, soft_weights), std::move(hard));
}

Tensor one_minus(const Tensor& t) { return add_scalar(scale(t, -1), 1); }

std::vector<Real> one_minus(std::span<const Real> v) {
  std::vector<Real> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = 1 - v[i];
  return out;
}

}  // namespace

Tensor mask_selected(const Tensor& e, const SelectionMask& mask) {
  return st_row_mask(e, mask.soft, mask.hard);
}

Tensor mask_complement(const Tensor& e, const SelectionMask& mask) {
  return st_row_mask(e, one_minus(mask.soft), one_minus(mask.hard));
}

Tensor mask_negative(const Tensor& e, const SelectionMask& mask, std::span<const Real> keep) {
  LCSUM_REQUIRE(keep.size() == mask.size(), "mask_negative: keep vector has the wrong length");
  return st_row_mask(e, one_minus(mask.soft), keep);
}

RestMask exclusion_mask(const SelectionMask& mask, std::span<const int> excluded) {
  std::vector<Real> delta(mask.size(), 0);
  for (int k : excluded) {
    LCSUM_REQUIRE(k >= 0 && static_cast<std::size_t>(k) < mask.size(), "mask_rest: index out of range");
    delta[static_cast<std::size_t>(k)] = 1;
  }
  RestMask r;
  r.soft = mask.soft;
  r.st = straight_through(mask.soft, delta);
  r.delta = std::move(delta);
  r.excluded.assign(excluded.begin(), excluded.end());
  return r;
}

RestMask rest_mask(const SelectionMask& mask, std::span<const int> excluded) {
  for (int k : excluded) {
    LCSUM_REQUIRE(k >= 0 && static_cast<std::size_t>(k) < mask.size(), "mask_rest: index out of range");
    LCSUM_REQUIRE(mask.hard[static_cast<std::size_t>(k)] != 0,
                  "mask_rest: excluded index " + std::to_string(k) + " is not selected");
  }
  return exclusion_mask(mask, excluded);
}

Tensor mask_rest(const Tensor& e, const RestMask& rest) {
  return st_row_mask(e, one_minus(rest.soft), one_minus(rest.delta));
}

Tensor mask_rest(const Tensor& e, const SelectionMask& mask, int k) {
  const int ks[] = {k};
  return mask_rest(e, rest_mask(mask, ks));
}

int sample_selected(const SelectionMask& mask, const SegmentLayout& layout, int segment, Rng& rng) {
  std::vector<int> chosen;
  for (int i = layout.begin(segment); i < layout.end(segment); ++i) {
    if (mask.hard[static_cast<std::size_t>(i)] != 0) chosen.push_back(i);
  }
  LCSUM_REQUIRE(!chosen.empty(), "segment has no selected row");
  return chosen[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(chosen.size()) - 1))];
}

}  // namespace lcsum
