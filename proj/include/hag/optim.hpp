#pragma once

#include <cstddef>
#include <vector>

#include "hag/autodiff.hpp"

namespace hag {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moment buffers, one per parameter, plus the step count.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long long t = 0;

  static AdamState for_params(const std::vector<Tensor>& params);
};

// One bias-corrected Adam update. Parameters that never received a gradient
// are treated as having a zero gradient. Throws NumericError on a non-finite
// gradient.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, const AdamConfig& cfg = {});

// lr0 * (1 + cos(pi * step / total)) / 2
double cosine_lr(long long step, long long total, double lr0);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(std::vector<Tensor>& params, double max_norm);

}  // namespace hag
