#include "lcsum/optim.hpp"

#include <cmath>

namespace lcsum {

void adam_step(std::span<Tensor> params, AdamState& state, double lr) {
  LCSUM_REQUIRE(lr > 0, "adam: learning rate must be positive");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.size(), Real(0));
      state.second_moment.emplace_back(p.size(), Real(0));
    }
  }
  LCSUM_REQUIRE(state.first_moment.size() == params.size(), "adam: state/parameter count mismatch");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const auto b1 = static_cast<Real>(state.beta1);
  const auto b2 = static_cast<Real>(state.beta2);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    LCSUM_REQUIRE(m.size() == p.size(), "adam: moment shape does not match parameter");
    if (!p.has_grad()) {
      // Zero gradient: moments decay, the update keeps its momentum.
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] *= b1;
        v[i] *= b2;
      }
    } else {
      const auto& g = p.node()->grad;
      for (std::size_t i = 0; i < m.size(); ++i) {
        m[i] = b1 * m[i] + (1 - b1) * g[i];
        v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      }
    }
    auto w = p.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      w[i] -= static_cast<Real>(lr * mh / (std::sqrt(vh) + state.epsilon));
    }
  }
}

Adam::Adam(std::vector<Tensor> params, AdamState state)
    : params_(std::move(params)), state_(std::move(state)) {}

void Adam::step(double lr) {
  if (params_.empty()) return;
  adam_step(params_, state_, lr);
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace lcsum
