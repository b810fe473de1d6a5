#pragma once

// Reverse-mode differentiable dense arrays.
//
// A Tensor is a handle to a graph node. Ops on tensors that require gradients
// record a backward closure; backward() walks the graph once and releases it.
// Rows of a packed 2-D tensor can be grouped into segments (one segment per
// document or knapsack instance) so a whole batch shares one matmul.

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "lcsum/errors.hpp"

namespace lcsum {

#ifdef LCSUM_REAL_DOUBLE
using Real = double;
#else
using Real = float;
#endif

using Shape = std::vector<int>;

// Storage aligned to 64 bytes. Vectorised reductions then split every buffer
// the same way, which keeps results bit-identical from run to run.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<Real, AlignedAllocator<Real>>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;
using BackwardFn = std::function<void(Node&)>;

struct Node {
  Shape shape;
  Buffer value;
  Buffer grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
  const char* op = "leaf";

  // Lazily zero-initialised gradient buffer.
  std::span<Real> grad_buffer();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor constant(Shape shape, std::vector<Real> values);
  static Tensor parameter(Shape shape, std::vector<Real> values);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value);
  static Tensor scalar(Real value);
  static Tensor vector(std::vector<Real> values);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return node_->value.size(); }
  int rows() const;
  int cols() const;

  std::span<const Real> data() const { return node_->value; }
  std::span<Real> mutable_data() { return node_->value; }
  std::vector<Real> to_vector() const { return {node_->value.begin(), node_->value.end()}; }
  Real item() const;
  Real operator[](std::size_t i) const { return node_->value[i]; }
  Real at(int r, int c) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zero vector of the right size when nothing was accumulated.
  std::vector<Real> grad() const;
  void zero_grad() { node_->grad.clear(); }

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& shared() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Disables graph recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

// Builds an op result. The closure is dropped (and parents not retained) when
// no parent requires a gradient or recording is disabled.
Tensor make_result(const char* op, Shape shape, Buffer value,
                   std::vector<Tensor> parents, BackwardFn backward);

// Accumulates d(loss)/d(param) into every reachable tensor that requires a
// gradient, then frees the recorded graph behind `loss`.
void backward(const Tensor& loss);

void require_finite(std::span<const Real> values, const char* op);

// Contiguous row ranges of a packed tensor: segment s spans
// [offsets[s], offsets[s+1]).
struct SegmentLayout {
  std::vector<int> offsets{0};

  static SegmentLayout from_lengths(std::span<const int> lengths);
  static SegmentLayout single(int rows);
  int count() const { return static_cast<int>(offsets.size()) - 1; }
  int begin(int s) const { return offsets[static_cast<std::size_t>(s)]; }
  int end(int s) const { return offsets[static_cast<std::size_t>(s) + 1]; }
  int length(int s) const { return end(s) - begin(s); }
  int total() const { return offsets.back(); }
  // Same layout repeated `times` back to back.
  SegmentLayout tiled(int times) const;
};

// ---- elementwise and linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);
// x[m,k] * w[k,n] + bias[n]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real factor);
Tensor add_scalar(const Tensor& a, Real offset);
// x[m,n] + v[n] on every row
Tensor add_row_vector(const Tensor& x, const Tensor& v);
// Row-wise scalar multiply: x[m,n] * s[m]
Tensor mul_rows(const Tensor& x, const Tensor& s);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor relu(const Tensor& a);

// ---- shape plumbing ----
Tensor reshape(const Tensor& a, Shape shape);
Tensor detach(const Tensor& a);
// Forward value = hard, gradient passes to `soft` unchanged: (hard - soft)_f + soft.
Tensor straight_through(const Tensor& soft, std::vector<Real> hard);
// Rows (or elements of a vector) at the given indices.
Tensor take_rows(const Tensor& x, std::span<const int> indices);
Tensor slice_rows(const Tensor& x, int begin, int end);
Tensor concat_rows(const std::vector<Tensor>& parts);
// Vectors [m] or matrices [m,k] side by side into [m, sum k].
Tensor concat_cols(const std::vector<Tensor>& parts);

// ---- normalisation and reductions ----
Tensor softmax(const Tensor& a);  // over the last axis
Tensor segment_softmax(const Tensor& v, const SegmentLayout& layout);
// v - min(0, min over segment): every segment becomes non-negative.
Tensor segment_min_shift(const Tensor& v, const SegmentLayout& layout);
// v / sum over segment for non-negative v; an all-zero segment maps to 1/len.
Tensor segment_normalize(const Tensor& v, const SegmentLayout& layout);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps = 1e-5);
// Per-segment average of rows: [m,n] -> [segments,n]
Tensor segment_mean_rows(const Tensor& x, const SegmentLayout& layout);
// Row-wise cosine similarity: [m,n],[m,n] -> [m]; vectors [n],[n] -> scalar.
Tensor cosine(const Tensor& a, const Tensor& b);

// Scaled dot-product attention with `heads` heads; rows only attend within
// their own segment.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const SegmentLayout& layout,
                 int heads);

// ---- losses ----
Tensor binary_cross_entropy(const Tensor& probs, std::span<const Real> targets);
Tensor bce_with_logits(const Tensor& logits, std::span<const Real> targets);

}  // namespace lcsum
