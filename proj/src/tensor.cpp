#include "lcsum/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace lcsum {
namespace {

using MatRM = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;
using Strided = Eigen::OuterStride<>;
using MapS = Eigen::Map<MatRM, 0, Strided>;
using CMapS = Eigen::Map<const MatRM, 0, Strided>;

thread_local bool g_grad_enabled = true;

CMapM cmat(const Buffer& v, int r, int c) { return CMapM(v.data(), r, c); }
MapM mmat(std::span<Real> v, int r, int c) { return MapM(v.data(), r, c); }

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ContractError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                        shape_str(b.shape()));
  }
}

void require_rank(const Tensor& a, int rank, const char* op) {
  if (a.rank() != rank) {
    throw ContractError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                        shape_str(a.shape()));
  }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

// Applies a pointwise map with derivative expressed through input and output.
template <class F, class DF>
Tensor unary(const char* op, const Tensor& a, F f, DF df) {
  Buffer out(a.size());
  const auto& x = a.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return make_result(op, a.shape(), std::move(out), {a}, [df](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(p.value[i], self.value[i]);
  });
}

}  // namespace

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ContractError("negative dimension in shape " + shape_str(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ')';
  return os.str();
}

std::span<Real> Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), Real(0));
  return grad;
}

namespace {

Tensor from_buffer(Shape shape, Buffer values) {
  if (shape_size(shape) != values.size()) {
    throw ContractError("tensor: " + std::to_string(values.size()) + " values for shape " +
                        shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  return Tensor(std::move(node));
}

}  // namespace

Tensor Tensor::constant(Shape shape, std::vector<Real> values) {
  return from_buffer(std::move(shape), Buffer(values.begin(), values.end()));
}

Tensor Tensor::parameter(Shape shape, std::vector<Real> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.set_requires_grad(true);
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  Tensor t = from_buffer(std::move(shape), Buffer(n, Real(0)));
  t.set_requires_grad(requires_grad);
  return t;
}

Tensor Tensor::full(Shape shape, Real value) {
  const std::size_t n = shape_size(shape);
  return from_buffer(std::move(shape), Buffer(n, value));
}

Tensor Tensor::scalar(Real value) { return constant({}, {value}); }

Tensor Tensor::vector(std::vector<Real> values) {
  const int n = static_cast<int>(values.size());
  return constant({n}, std::move(values));
}

int Tensor::rows() const {
  if (rank() == 0) return 1;
  return dim(0);
}

int Tensor::cols() const {
  if (rank() < 2) return 1;
  return dim(rank() - 1);
}

Real Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return node_->value[0];
}

Real Tensor::at(int r, int c) const {
  return node_->value[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols()) +
                      static_cast<std::size_t>(c)];
}

std::vector<Real> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<Real>(size(), Real(0));
  return {node_->grad.begin(), node_->grad.end()};
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

Tensor make_result(const char* op, Shape shape, Buffer value,
                   std::vector<Tensor> parents, BackwardFn backward) {
  Tensor out = from_buffer(std::move(shape), std::move(value));
  out.node()->op = op;
  if (!g_grad_enabled) return out;
  const bool any = std::any_of(parents.begin(), parents.end(),
                               [](const Tensor& p) { return p.requires_grad(); });
  if (!any) return out;
  Node* n = out.node();
  n->requires_grad = true;
  n->parents.reserve(parents.size());
  for (auto& p : parents) n->parents.push_back(p.shared());
  n->backward = std::move(backward);
  return out;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS for a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !p->parents.empty() && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
  for (Node* n : order) {
    n->parents.clear();
    n->backward = nullptr;
  }
}

void require_finite(std::span<const Real> values, const char* op) {
  for (Real v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite input");
  }
}

SegmentLayout SegmentLayout::from_lengths(std::span<const int> lengths) {
  SegmentLayout layout;
  for (int len : lengths) {
    if (len < 1) throw ContractError("segment length must be positive");
    layout.offsets.push_back(layout.offsets.back() + len);
  }
  return layout;
}

SegmentLayout SegmentLayout::single(int rows) {
  SegmentLayout layout;
  layout.offsets.push_back(rows);
  return layout;
}

SegmentLayout SegmentLayout::tiled(int times) const {
  SegmentLayout out;
  for (int t = 0; t < times; ++t) {
    const int base = out.offsets.back();
    for (int s = 0; s < count(); ++s) out.offsets.push_back(base + end(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ContractError("matmul: inner dimensions " + shape_str(a.shape()) + " x " +
                        shape_str(b.shape()));
  }
  Buffer out(static_cast<std::size_t>(m) * n);
  mmat(out, m, n).noalias() = cmat(a.node()->value, m, k) * cmat(b.node()->value, k, n);
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    const CMapM g = cmat(self.grad, m, n);
    if (pa.requires_grad) mmat(pa.grad_buffer(), m, k).noalias() += g * cmat(pb.value, k, n).transpose();
    if (pb.requires_grad) mmat(pb.grad_buffer(), k, n).noalias() += cmat(pa.value, m, k).transpose() * g;
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear");
  const int m = x.dim(0), k = x.dim(1), n = weight.dim(1);
  if (weight.dim(0) != k || bias.size() != static_cast<std::size_t>(n)) {
    throw ContractError("linear: input " + shape_str(x.shape()) + ", weight " +
                        shape_str(weight.shape()) + ", bias " + shape_str(bias.shape()));
  }
  Buffer out(static_cast<std::size_t>(m) * n);
  auto o = mmat(out, m, n);
  o.noalias() = cmat(x.node()->value, m, k) * cmat(weight.node()->value, k, n);
  o.rowwise() += cmat(bias.node()->value, 1, n).row(0);
  return make_result("linear", {m, n}, std::move(out), {x, weight, bias}, [m, k, n](Node& self) {
    Node& px = parent(self, 0);
    Node& pw = parent(self, 1);
    Node& pb = parent(self, 2);
    const CMapM g = cmat(self.grad, m, n);
    if (px.requires_grad) mmat(px.grad_buffer(), m, k).noalias() += g * cmat(pw.value, k, n).transpose();
    if (pw.requires_grad) mmat(pw.grad_buffer(), k, n).noalias() += cmat(px.value, m, k).transpose() * g;
    if (pb.requires_grad) mmat(pb.grad_buffer(), 1, n) += g.colwise().sum();
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Buffer out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      Node& n = parent(self, p);
      if (!n.requires_grad) continue;
      auto g = n.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Buffer out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Buffer out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, Real factor) {
  return unary(
      "scale", a, [factor](Real x) { return x * factor; },
      [factor](Real, Real) { return factor; });
}

Tensor add_scalar(const Tensor& a, Real offset) {
  return unary(
      "add_scalar", a, [offset](Real x) { return x + offset; }, [](Real, Real) { return Real(1); });
}

Tensor add_row_vector(const Tensor& x, const Tensor& v) {
  require_rank(x, 2, "add_row_vector");
  const int m = x.dim(0), n = x.dim(1);
  if (v.size() != static_cast<std::size_t>(n)) throw ContractError("add_row_vector: width mismatch");
  Buffer out(x.size());
  auto o = mmat(out, m, n);
  o = cmat(x.node()->value, m, n);
  o.rowwise() += cmat(v.node()->value, 1, n).row(0);
  return make_result("add_row_vector", x.shape(), std::move(out), {x, v}, [m, n](Node& self) {
    Node& px = parent(self, 0);
    Node& pv = parent(self, 1);
    const CMapM g = cmat(self.grad, m, n);
    if (px.requires_grad) mmat(px.grad_buffer(), m, n) += g;
    if (pv.requires_grad) mmat(pv.grad_buffer(), 1, n) += g.colwise().sum();
  });
}

Tensor mul_rows(const Tensor& x, const Tensor& s) {
  require_rank(x, 2, "mul_rows");
  const int m = x.dim(0), n = x.dim(1);
  if (s.size() != static_cast<std::size_t>(m)) {
    throw ContractError("mul_rows: " + std::to_string(s.size()) + " row weights for " +
                        std::to_string(m) + " rows");
  }
  Buffer out(x.size());
  for (int r = 0; r < m; ++r) {
    const Real w = s[static_cast<std::size_t>(r)];
    for (int c = 0; c < n; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * n + c;
      out[i] = x[i] * w;
    }
  }
  return make_result("mul_rows", x.shape(), std::move(out), {x, s}, [m, n](Node& self) {
    Node& px = parent(self, 0);
    Node& ps = parent(self, 1);
    if (px.requires_grad) {
      auto g = px.grad_buffer();
      for (int r = 0; r < m; ++r) {
        const Real w = ps.value[static_cast<std::size_t>(r)];
        for (int c = 0; c < n; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * n + c;
          g[i] += self.grad[i] * w;
        }
      }
    }
    if (ps.requires_grad) {
      auto g = ps.grad_buffer();
      for (int r = 0; r < m; ++r) {
        Real acc = 0;
        for (int c = 0; c < n; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * n + c;
          acc += self.grad[i] * px.value[i];
        }
        g[static_cast<std::size_t>(r)] += acc;
      }
    }
  });
}

Tensor sum(const Tensor& a) {
  Real total = 0;
  for (Real v : a.data()) total += v;
  return make_result("sum", {}, {total}, {a}, [](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    for (Real& g : p.grad_buffer()) g += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ContractError("mean of empty tensor");
  return scale(sum(a), Real(1) / static_cast<Real>(a.size()));
}

Tensor abs(const Tensor& a) {
  return unary(
      "abs", a, [](Real x) { return std::abs(x); },
      [](Real x, Real) { return x > 0 ? Real(1) : (x < 0 ? Real(-1) : Real(0)); });
}

Tensor sigmoid(const Tensor& a) {
  require_finite(a.data(), "sigmoid");
  return unary(
      "sigmoid", a,
      [](Real x) {
        if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
        const Real e = std::exp(x);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

Tensor gelu(const Tensor& a) {
  using Arr = Eigen::Array<Real, Eigen::Dynamic, 1>;
  using Map = Eigen::Map<const Arr>;
  static constexpr Real c = Real(0.7978845608028654);  // sqrt(2/pi)
  static constexpr Real k = Real(0.044715);
  require_finite(a.data(), "gelu");
  const auto n = static_cast<Eigen::Index>(a.size());
  Map x(a.data().data(), n);
  auto t = std::make_shared<Arr>((c * (x + k * x.cube())).tanh());
  Buffer out(a.size());
  Eigen::Map<Arr>(out.data(), n) = Real(0.5) * x * (Real(1) + *t);
  return make_result("gelu", a.shape(), std::move(out), {a}, [t, n](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    Map xv(p.value.data(), n);
    Map up(self.grad.data(), n);
    Eigen::Map<Arr> g(p.grad_buffer().data(), n);
    g += up * (Real(0.5) * (Real(1) + *t) +
               Real(0.5) * xv * (Real(1) - t->square()) * c * (Real(1) + Real(3) * k * xv.square()));
  });
}

Tensor relu(const Tensor& a) {
  return unary(
      "relu", a, [](Real x) { return x > 0 ? x : Real(0); },
      [](Real x, Real) { return x > 0 ? Real(1) : Real(0); });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ContractError("reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  return make_result("reshape", std::move(shape), a.node()->value, {a}, [](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor detach(const Tensor& a) { return from_buffer(a.shape(), a.node()->value); }

Tensor straight_through(const Tensor& soft, std::vector<Real> hard) {
  if (hard.size() != soft.size()) throw ContractError("straight_through: size mismatch");
  return make_result("straight_through", soft.shape(), Buffer(hard.begin(), hard.end()), {soft}, [](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor take_rows(const Tensor& x, std::span<const int> indices) {
  if (x.rank() < 1) throw ContractError("take_rows on a scalar");
  const int m = x.dim(0);
  const std::size_t width = x.size() / static_cast<std::size_t>(std::max(m, 1));
  Shape shape = x.shape();
  shape[0] = static_cast<int>(indices.size());
  Buffer out(indices.size() * width);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int src = indices[r];
    if (src < 0 || src >= m) throw ContractError("take_rows: index out of range");
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(src * width), width,
                out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return make_result("take_rows", std::move(shape), std::move(out), {x},
                     [idx = std::move(idx), width](Node& self) {
                       Node& p = parent(self, 0);
                       if (!p.requires_grad) return;
                       auto g = p.grad_buffer();
                       for (std::size_t r = 0; r < idx.size(); ++r) {
                         for (std::size_t c = 0; c < width; ++c) {
                           g[static_cast<std::size_t>(idx[r]) * width + c] += self.grad[r * width + c];
                         }
                       }
                     });
}

Tensor slice_rows(const Tensor& x, int begin, int end) {
  if (begin < 0 || end < begin || end > x.dim(0)) throw ContractError("slice_rows: bad range");
  std::vector<int> idx(static_cast<std::size_t>(end - begin));
  std::iota(idx.begin(), idx.end(), begin);
  return take_rows(x, idx);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: nothing to concatenate");
  Shape shape = parts.front().shape();
  if (shape.empty()) throw ContractError("concat_rows: scalars");
  int rows = 0;
  Buffer out;
  for (const auto& p : parts) {
    Shape s = p.shape();
    if (s.size() != shape.size() || !std::equal(s.begin() + 1, s.end(), shape.begin() + 1)) {
      throw ContractError("concat_rows: incompatible shapes");
    }
    rows += s[0];
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  shape[0] = rows;
  return make_result("concat_rows", std::move(shape), std::move(out), parts, [](Node& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      const std::size_t n = p->value.size();
      if (p->requires_grad) {
        auto g = p->grad_buffer();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
      }
      off += n;
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: nothing to concatenate");
  const int m = parts.front().dim(0);
  std::vector<int> widths;
  int total = 0;
  for (const auto& p : parts) {
    if (p.rank() < 1 || p.rank() > 2 || p.dim(0) != m) throw ContractError("concat_cols: row mismatch");
    widths.push_back(p.rank() == 1 ? 1 : p.dim(1));
    total += widths.back();
  }
  Buffer out(static_cast<std::size_t>(m) * total);
  int col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const int w = widths[k];
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < w; ++c) {
        out[static_cast<std::size_t>(r) * total + col + c] = parts[k][static_cast<std::size_t>(r) * w + c];
      }
    }
    col += w;
  }
  return make_result("concat_cols", {m, total}, std::move(out), parts,
                     [m, total, widths](Node& self) {
                       int col = 0;
                       for (std::size_t k = 0; k < self.parents.size(); ++k) {
                         const int w = widths[k];
                         Node& p = *self.parents[k];
                         if (p.requires_grad) {
                           auto g = p.grad_buffer();
                           for (int r = 0; r < m; ++r) {
                             for (int c = 0; c < w; ++c) {
                               g[static_cast<std::size_t>(r) * w + c] +=
                                   self.grad[static_cast<std::size_t>(r) * total + col + c];
                             }
                           }
                         }
                         col += w;
                       }
                     });
}

Tensor softmax(const Tensor& a) {
  require_finite(a.data(), "softmax");
  const int n = a.rank() == 0 ? 1 : a.dim(a.rank() - 1);
  const int m = static_cast<int>(a.size()) / std::max(n, 1);
  Buffer out(a.size());
  for (int r = 0; r < m; ++r) {
    const Real* x = a.data().data() + static_cast<std::ptrdiff_t>(r) * n;
    Real* y = out.data() + static_cast<std::ptrdiff_t>(r) * n;
    const Real mx = *std::max_element(x, x + n);
    Real z = 0;
    for (int i = 0; i < n; ++i) z += (y[i] = std::exp(x[i] - mx));
    for (int i = 0; i < n; ++i) y[i] /= z;
  }
  return make_result("softmax", a.shape(), std::move(out), {a}, [m, n](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (int r = 0; r < m; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * n;
      Real dot = 0;
      for (int i = 0; i < n; ++i) dot += self.grad[base + i] * self.value[base + i];
      for (int i = 0; i < n; ++i) g[base + i] += self.value[base + i] * (self.grad[base + i] - dot);
    }
  });
}

Tensor segment_softmax(const Tensor& v, const SegmentLayout& layout) {
  require_rank(v, 1, "segment_softmax");
  if (layout.total() != v.dim(0)) throw ContractError("segment_softmax: layout does not cover vector");
  require_finite(v.data(), "segment_softmax");
  Buffer out(v.size());
  for (int s = 0; s < layout.count(); ++s) {
    const int b = layout.begin(s), e = layout.end(s);
    Real mx = v[static_cast<std::size_t>(b)];
    for (int i = b; i < e; ++i) mx = std::max(mx, v[static_cast<std::size_t>(i)]);
    Real z = 0;
    for (int i = b; i < e; ++i) z += (out[static_cast<std::size_t>(i)] = std::exp(v[static_cast<std::size_t>(i)] - mx));
    for (int i = b; i < e; ++i) out[static_cast<std::size_t>(i)] /= z;
  }
  return make_result("segment_softmax", v.shape(), std::move(out), {v}, [layout](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (int s = 0; s < layout.count(); ++s) {
      Real dot = 0;
      for (int i = layout.begin(s); i < layout.end(s); ++i) {
        dot += self.grad[static_cast<std::size_t>(i)] * self.value[static_cast<std::size_t>(i)];
      }
      for (int i = layout.begin(s); i < layout.end(s); ++i) {
        const auto u = static_cast<std::size_t>(i);
        g[u] += self.value[u] * (self.grad[u] - dot);
      }
    }
  });
}

Tensor segment_min_shift(const Tensor& v, const SegmentLayout& layout) {
  require_rank(v, 1, "segment_min_shift");
  if (layout.total() != v.dim(0)) throw ContractError("segment_min_shift: layout does not cover vector");
  Buffer out(v.node()->value);
  // argmin per segment, or -1 when the segment is already non-negative
  std::vector<int> argmin(static_cast<std::size_t>(layout.count()), -1);
  for (int s = 0; s < layout.count(); ++s) {
    int best = -1;
    Real lowest = 0;
    for (int i = layout.begin(s); i < layout.end(s); ++i) {
      if (v[static_cast<std::size_t>(i)] < lowest) {
        lowest = v[static_cast<std::size_t>(i)];
        best = i;
      }
    }
    argmin[static_cast<std::size_t>(s)] = best;
    for (int i = layout.begin(s); i < layout.end(s); ++i) out[static_cast<std::size_t>(i)] -= lowest;
  }
  return make_result("segment_min_shift", v.shape(), std::move(out), {v}, [layout, argmin](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (int s = 0; s < layout.count(); ++s) {
      Real total = 0;
      for (int i = layout.begin(s); i < layout.end(s); ++i) {
        g[static_cast<std::size_t>(i)] += self.grad[static_cast<std::size_t>(i)];
        total += self.grad[static_cast<std::size_t>(i)];
      }
      const int k = argmin[static_cast<std::size_t>(s)];
      if (k >= 0) g[static_cast<std::size_t>(k)] -= total;
    }
  });
}

Tensor segment_normalize(const Tensor& v, const SegmentLayout& layout) {
  require_rank(v, 1, "segment_normalize");
  if (layout.total() != v.dim(0)) throw ContractError("segment_normalize: layout does not cover vector");
  Buffer out(v.size());
  std::vector<Real> totals(static_cast<std::size_t>(layout.count()), 0);
  for (int s = 0; s < layout.count(); ++s) {
    const int b = layout.begin(s), e = layout.end(s);
    Real z = 0;
    for (int i = b; i < e; ++i) {
      if (v[static_cast<std::size_t>(i)] < 0) throw ContractError("segment_normalize: negative entry");
      z += v[static_cast<std::size_t>(i)];
    }
    totals[static_cast<std::size_t>(s)] = z;
    for (int i = b; i < e; ++i) {
      out[static_cast<std::size_t>(i)] = z > 0 ? v[static_cast<std::size_t>(i)] / z : Real(1) / static_cast<Real>(e - b);
    }
  }
  return make_result("segment_normalize", v.shape(), std::move(out), {v}, [layout, totals](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (int s = 0; s < layout.count(); ++s) {
      const Real z = totals[static_cast<std::size_t>(s)];
      if (z <= 0) continue;
      Real dot = 0;
      for (int i = layout.begin(s); i < layout.end(s); ++i) {
        dot += self.grad[static_cast<std::size_t>(i)] * self.value[static_cast<std::size_t>(i)];
      }
      for (int i = layout.begin(s); i < layout.end(s); ++i) {
        g[static_cast<std::size_t>(i)] += (self.grad[static_cast<std::size_t>(i)] - dot) / z;
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps) {
  require_rank(x, 2, "layer_norm");
  const int m = x.dim(0), n = x.dim(1);
  if (gain.size() != static_cast<std::size_t>(n) || bias.size() != static_cast<std::size_t>(n)) {
    throw ContractError("layer_norm: gain/bias width mismatch");
  }
  Buffer out(x.size());
  Buffer xhat(x.size());
  Buffer rstd(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * n;
    Real mu = 0;
    for (int c = 0; c < n; ++c) mu += x[base + c];
    mu /= static_cast<Real>(n);
    Real var = 0;
    for (int c = 0; c < n; ++c) var += (x[base + c] - mu) * (x[base + c] - mu);
    var /= static_cast<Real>(n);
    const Real rs = Real(1) / std::sqrt(var + eps);
    rstd[static_cast<std::size_t>(r)] = rs;
    for (int c = 0; c < n; ++c) {
      xhat[base + c] = (x[base + c] - mu) * rs;
      out[base + c] = xhat[base + c] * gain[static_cast<std::size_t>(c)] + bias[static_cast<std::size_t>(c)];
    }
  }
  return make_result("layer_norm", x.shape(), std::move(out), {x, gain, bias},
                     [m, n, xhat = std::move(xhat), rstd = std::move(rstd)](Node& self) {
                       Node& px = parent(self, 0);
                       Node& pg = parent(self, 1);
                       Node& pb = parent(self, 2);
                       if (pg.requires_grad || pb.requires_grad) {
                         auto gg = pg.requires_grad ? pg.grad_buffer() : std::span<Real>{};
                         auto gb = pb.requires_grad ? pb.grad_buffer() : std::span<Real>{};
                         for (int r = 0; r < m; ++r) {
                           for (int c = 0; c < n; ++c) {
                             const std::size_t i = static_cast<std::size_t>(r) * n + c;
                             if (!gg.empty()) gg[static_cast<std::size_t>(c)] += self.grad[i] * xhat[i];
                             if (!gb.empty()) gb[static_cast<std::size_t>(c)] += self.grad[i];
                           }
                         }
                       }
                       if (!px.requires_grad) return;
                       auto gx = px.grad_buffer();
                       for (int r = 0; r < m; ++r) {
                         const std::size_t base = static_cast<std::size_t>(r) * n;
                         Real mean_d = 0, mean_dx = 0;
                         for (int c = 0; c < n; ++c) {
                           const Real d = self.grad[base + c] * pg.value[static_cast<std::size_t>(c)];
                           mean_d += d;
                           mean_dx += d * xhat[base + c];
                         }
                         mean_d /= static_cast<Real>(n);
                         mean_dx /= static_cast<Real>(n);
                         const Real rs = rstd[static_cast<std::size_t>(r)];
                         for (int c = 0; c < n; ++c) {
                           const Real d = self.grad[base + c] * pg.value[static_cast<std::size_t>(c)];
                           gx[base + c] += rs * (d - mean_d - xhat[base + c] * mean_dx);
                         }
                       }
                     });
}

Tensor segment_mean_rows(const Tensor& x, const SegmentLayout& layout) {
  require_rank(x, 2, "segment_mean_rows");
  if (layout.total() != x.dim(0)) throw ContractError("segment_mean_rows: layout does not cover rows");
  const int n = x.dim(1), segs = layout.count();
  Buffer out(static_cast<std::size_t>(segs) * n, Real(0));
  for (int s = 0; s < segs; ++s) {
    const Real inv = Real(1) / static_cast<Real>(layout.length(s));
    for (int r = layout.begin(s); r < layout.end(s); ++r) {
      for (int c = 0; c < n; ++c) {
        out[static_cast<std::size_t>(s) * n + c] += x[static_cast<std::size_t>(r) * n + c] * inv;
      }
    }
  }
  return make_result("segment_mean_rows", {segs, n}, std::move(out), {x}, [layout, n](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto g = p.grad_buffer();
    for (int s = 0; s < layout.count(); ++s) {
      const Real inv = Real(1) / static_cast<Real>(layout.length(s));
      for (int r = layout.begin(s); r < layout.end(s); ++r) {
        for (int c = 0; c < n; ++c) {
          g[static_cast<std::size_t>(r) * n + c] += self.grad[static_cast<std::size_t>(s) * n + c] * inv;
        }
      }
    }
  });
}

Tensor cosine(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "cosine");
  if (a.rank() == 1) {
    const int n = a.dim(0);
    return reshape(cosine(reshape(a, {1, n}), reshape(b, {1, n})), {});
  }
  require_rank(a, 2, "cosine");
  constexpr Real kEps = Real(1e-8);
  const int m = a.dim(0), n = a.dim(1);
  Buffer out(static_cast<std::size_t>(m));
  Buffer na(out.size()), nb(out.size());
  for (int r = 0; r < m; ++r) {
    Real dot = 0, aa = 0, bb = 0;
    for (int c = 0; c < n; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * n + c;
      dot += a[i] * b[i];
      aa += a[i] * a[i];
      bb += b[i] * b[i];
    }
    const auto u = static_cast<std::size_t>(r);
    na[u] = std::max(std::sqrt(aa), kEps);
    nb[u] = std::max(std::sqrt(bb), kEps);
    out[u] = dot / (na[u] * nb[u]);
  }
  return make_result("cosine", {m}, std::move(out), {a, b},
                     [m, n, na = std::move(na), nb = std::move(nb)](Node& self) {
                       Node& pa = parent(self, 0);
                       Node& pb = parent(self, 1);
                       for (int r = 0; r < m; ++r) {
                         const auto u = static_cast<std::size_t>(r);
                         const Real g = self.grad[u], cs = self.value[u];
                         const Real inv = Real(1) / (na[u] * nb[u]);
                         for (int c = 0; c < n; ++c) {
                           const std::size_t i = static_cast<std::size_t>(r) * n + c;
                           if (pa.requires_grad) {
                             pa.grad_buffer()[i] += g * (pb.value[i] * inv - cs * pa.value[i] / (na[u] * na[u]));
                           }
                           if (pb.requires_grad) {
                             pb.grad_buffer()[i] += g * (pa.value[i] * inv - cs * pb.value[i] / (nb[u] * nb[u]));
                           }
                         }
                       }
                     });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v, const SegmentLayout& layout,
                 int heads) {
  require_rank(q, 2, "attention");
  require_same_shape(q, k, "attention");
  require_same_shape(q, v, "attention");
  const int m = q.dim(0), d = q.dim(1);
  if (heads < 1 || d % heads != 0) throw ContractError("attention: width not divisible by heads");
  if (layout.total() != m) throw ContractError("attention: layout does not cover rows");
  const int dk = d / heads;
  const Real scl = Real(1) / std::sqrt(static_cast<Real>(dk));

  // Probabilities for every (segment, head), stored back to back.
  std::vector<std::size_t> prob_offset;
  std::size_t total = 0;
  for (int s = 0; s < layout.count(); ++s) {
    prob_offset.push_back(total);
    total += static_cast<std::size_t>(heads) * layout.length(s) * layout.length(s);
  }
  Buffer probs(total);
  Buffer out(q.size());
  const Real* Q = q.data().data();
  const Real* K = k.data().data();
  const Real* V = v.data().data();
  for (int s = 0; s < layout.count(); ++s) {
    const int off = layout.begin(s), len = layout.length(s);
    for (int h = 0; h < heads; ++h) {
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(off) * d + h * dk;
      CMapS qh(Q + base, len, dk, Strided(d));
      CMapS kh(K + base, len, dk, Strided(d));
      CMapS vh(V + base, len, dk, Strided(d));
      MapM p(probs.data() + prob_offset[static_cast<std::size_t>(s)] +
                 static_cast<std::size_t>(h) * len * len,
             len, len);
      p.noalias() = (qh * kh.transpose()) * scl;
      for (int r = 0; r < len; ++r) {
        const Real mx = p.row(r).maxCoeff();
        p.row(r) = (p.row(r).array() - mx).exp();
        p.row(r) /= p.row(r).sum();
      }
      MapS oh(out.data() + base, len, dk, Strided(d));
      oh.noalias() = p * vh;
    }
  }
  require_finite(out, "attention");
  return make_result(
      "attention", q.shape(), std::move(out), {q, k, v},
      [layout, heads, d, dk, scl, probs = std::move(probs), prob_offset = std::move(prob_offset)](Node& self) {
        Node& pq = parent(self, 0);
        Node& pk = parent(self, 1);
        Node& pv = parent(self, 2);
        Real* gq = pq.requires_grad ? pq.grad_buffer().data() : nullptr;
        Real* gk = pk.requires_grad ? pk.grad_buffer().data() : nullptr;
        Real* gv = pv.requires_grad ? pv.grad_buffer().data() : nullptr;
        MatRM dp, ds;
        for (int s = 0; s < layout.count(); ++s) {
          const int off = layout.begin(s), len = layout.length(s);
          for (int h = 0; h < heads; ++h) {
            const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(off) * d + h * dk;
            CMapM p(probs.data() + prob_offset[static_cast<std::size_t>(s)] +
                        static_cast<std::size_t>(h) * len * len,
                    len, len);
            CMapS go(self.grad.data() + base, len, dk, Strided(d));
            CMapS qh(pq.value.data() + base, len, dk, Strided(d));
            CMapS kh(pk.value.data() + base, len, dk, Strided(d));
            CMapS vh(pv.value.data() + base, len, dk, Strided(d));
            if (gv) MapS(gv + base, len, dk, Strided(d)).noalias() += p.transpose() * go;
            if (!gq && !gk) continue;
            dp.noalias() = go * vh.transpose();
            ds = p.array() * (dp.array().colwise() - (dp.array() * p.array()).rowwise().sum());
            if (gq) MapS(gq + base, len, dk, Strided(d)).noalias() += (ds * kh) * scl;
            if (gk) MapS(gk + base, len, dk, Strided(d)).noalias() += (ds.transpose() * qh) * scl;
          }
        }
      });
}

Tensor binary_cross_entropy(const Tensor& probs, std::span<const Real> targets) {
  if (targets.size() != probs.size()) throw ContractError("binary_cross_entropy: size mismatch");
  require_finite(probs.data(), "binary_cross_entropy");
  static constexpr Real kClamp = Real(1e-7);
  const std::size_t m = probs.size();
  Real total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const Real p = std::clamp(probs[i], kClamp, Real(1) - kClamp);
    total -= targets[i] * std::log(p) + (Real(1) - targets[i]) * std::log(Real(1) - p);
  }
  std::vector<Real> t(targets.begin(), targets.end());
  return make_result("binary_cross_entropy", {}, {total / static_cast<Real>(m)}, {probs},
                     [t = std::move(t)](Node& self) {
                       Node& p = parent(self, 0);
                       if (!p.requires_grad) return;
                       auto g = p.grad_buffer();
                       const Real inv = Real(1) / static_cast<Real>(t.size());
                       for (std::size_t i = 0; i < t.size(); ++i) {
                         const Real q = std::clamp(p.value[i], kClamp, Real(1) - kClamp);
                         g[i] += self.grad[0] * inv * (q - t[i]) / (q * (Real(1) - q));
                       }
                     });
}

Tensor bce_with_logits(const Tensor& logits, std::span<const Real> targets) {
  if (targets.size() != logits.size()) throw ContractError("bce_with_logits: size mismatch");
  require_finite(logits.data(), "bce_with_logits");
  const std::size_t m = logits.size();
  Real total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const Real z = logits[i];
    total += std::max(z, Real(0)) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
  }
  std::vector<Real> t(targets.begin(), targets.end());
  return make_result("bce_with_logits", {}, {total / static_cast<Real>(m)}, {logits},
                     [t = std::move(t)](Node& self) {
                       Node& p = parent(self, 0);
                       if (!p.requires_grad) return;
                       auto g = p.grad_buffer();
                       const Real inv = Real(1) / static_cast<Real>(t.size());
                       for (std::size_t i = 0; i < t.size(); ++i) {
                         const Real z = p.value[i];
                         const Real s = z >= 0 ? Real(1) / (Real(1) + std::exp(-z))
                                               : std::exp(z) / (Real(1) + std::exp(z));
                         g[i] += self.grad[0] * inv * (s - t[i]);
                       }
                     });
}

}  // namespace lcsum
