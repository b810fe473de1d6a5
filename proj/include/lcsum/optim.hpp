#pragma once

#include <span>
#include <vector>

#include "lcsum/tensor.hpp"

namespace lcsum {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<std::vector<Real>> first_moment;
  std::vector<std::vector<Real>> second_moment;
};

// One bias-corrected Adam update. Parameters with no accumulated gradient are
// treated as having a zero gradient.
void adam_step(std::span<Tensor> params, AdamState& state, double lr);

class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, AdamState state = {});

  void step(double lr);
  void zero_grad();
  const AdamState& state() const { return state_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamState state_;
};

}  // namespace lcsum
