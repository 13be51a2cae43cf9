#pragma once

#include <cstdint>
#include <vector>

#include "aste/autograd.hpp"

namespace aste::nn {

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers per parameter, in ParamStore order.
class Adam {
 public:
  Adam(ParamStore& params, AdamConfig cfg);

  /// Standard bias-corrected update from the accumulated gradients;
  /// increments the step counter and clears the gradients.
  void step();

  std::int64_t steps_taken() const { return t_; }

 private:
  ParamStore& params_;
  AdamConfig cfg_;
  std::vector<Array> m_;
  std::vector<Array> v_;
  std::int64_t t_ = 0;
};

}  // namespace aste::nn
