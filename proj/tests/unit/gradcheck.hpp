#pragma once

// Central finite-difference gradient checks for the double-precision build.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lcsum/tensor.hpp"

namespace lcsum::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
  bool ok = true;
  std::string detail;
};

using LossBuilder = std::function<Tensor(const std::vector<Tensor>&)>;

// Analytic gradient of `analytic` against central differences of `numeric`.
// The two differ for straight-through graphs, whose forward value is piecewise
// constant while the backward pass follows the soft surrogate.
inline GradCheckResult grad_check_split(std::vector<Tensor> inputs, const LossBuilder& analytic,
                                        const LossBuilder& numeric, double h = 1e-4, double rel_tol = 1e-4,
                                        double abs_floor = 1e-6) {
  const LossBuilder& build = numeric;
  for (auto& t : inputs) t.zero_grad();
  Tensor loss = analytic(inputs);
  backward(loss);
  GradCheckResult r;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    const std::vector<Real> analytic = inputs[p].grad();
    auto values = inputs[p].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Real saved = values[i];
      values[i] = saved + h;
      double up, down;
      {
        NoGradGuard ng;
        up = build(inputs).item();
        values[i] = saved - h;
        down = build(inputs).item();
      }
      values[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), abs_floor});
      r.max_abs_analytic = std::max(r.max_abs_analytic, std::abs(a));
      if (err > r.max_rel_error) {
        r.max_rel_error = err;
        r.detail = "input " + std::to_string(p) + "[" + std::to_string(i) + "] analytic " + std::to_string(a) +
                   " numeric " + std::to_string(numeric);
      }
    }
  }
  r.ok = r.max_rel_error <= rel_tol;
  return r;
}

// `build` maps the inputs to a scalar loss. Inputs must be parameters.
inline GradCheckResult grad_check(std::vector<Tensor> inputs, const LossBuilder& build, double h = 1e-4,
                                  double rel_tol = 1e-4, double abs_floor = 1e-6) {
  return grad_check_split(std::move(inputs), build, build, h, rel_tol, abs_floor);
}

}  // namespace lcsum::testing
