#pragma once

// Differentiable sentence selection: Gumbel top-K, straight-through rounding
// and the row masks that gate sentence representations.

#include <span>
#include <string>
#include <vector>

#include "lcsum/rng.hpp"
#include "lcsum/tensor.hpp"

namespace lcsum {

struct SelectionMask {
  Tensor soft;             // y (top-K) or s (rounding)
  std::vector<Real> hard;  // 0/1
  Tensor st;               // forward == hard, gradient follows soft
  std::string provenance;  // "topk:K" or "round:0.5"

  std::size_t size() const { return hard.size(); }
  std::vector<int> selected_indices() const;
};

struct GumbelOptions {
  double temperature = 1.0;
  // nullptr disables the noise (deterministic mode for validation and tests).
  Rng* noise = nullptr;
};

// Linear temperature schedule from `start` to `end` over `steps` steps.
double annealed_temperature(double start, double end, long step, long steps);

// y = softmax((pi + g) / T); hard marks the K largest entries of y, lower
// index first on ties.
SelectionMask gumbel_topk(const Tensor& scores, int k, const GumbelOptions& opts);

// Packed variant: one K per segment. A segment whose length is <= its K is
// selected entirely.
SelectionMask gumbel_topk(const Tensor& scores, const SegmentLayout& layout, std::span<const int> ks,
                          const GumbelOptions& opts);

// Forward round(s) with 0.5 rounding up; backward is the identity.
SelectionMask st_round(const Tensor& s);

// Masks scale rows by the hard selection in the forward pass and differentiate
// as the soft product would (with respect to both E and the scores).

// e''_i = s_i e_i
Tensor mask_selected(const Tensor& e, const SelectionMask& mask);

// e_i (1 - s_i): the unselected complement.
Tensor mask_complement(const Tensor& e, const SelectionMask& mask);

// Forward keeps the rows marked in `keep` (a subset of the unselected rows);
// backward is that of the complement mask.
Tensor mask_negative(const Tensor& e, const SelectionMask& mask, std::span<const Real> keep);

// s~_i = (delta_ik - s_i)_f + s_i, with one excluded index per segment.
struct RestMask {
  Tensor soft;               // the selection's soft scores
  Tensor st;                 // forward delta, gradient to soft
  std::vector<Real> delta;   // 1 at excluded rows
  std::vector<int> excluded;  // global row index per segment
};

RestMask rest_mask(const SelectionMask& mask, std::span<const int> excluded);
// Same construction for rows that need not be selected (negative views).
RestMask exclusion_mask(const SelectionMask& mask, std::span<const int> excluded);

// e'_i = (1 - s~_i) e_i
Tensor mask_rest(const Tensor& e, const RestMask& rest);
// Single-document convenience: excludes selected row k.
Tensor mask_rest(const Tensor& e, const SelectionMask& mask, int k);

// Uniformly random selected row inside segment s.
int sample_selected(const SelectionMask& mask, const SegmentLayout& layout, int segment, Rng& rng);

}  // namespace lcsum
