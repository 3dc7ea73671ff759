#include "hag/optim.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hag {

AdamState AdamState::for_params(const std::vector<Tensor>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, const AdamConfig& cfg) {
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: optimizer state does not match parameters");
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      if (!std::isfinite(params[k].grad_at(i))) {
        throw NumericError("adam_step: non-finite gradient in parameter " + std::to_string(k));
      }
    }
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].mutable_values();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = params[k].grad_at(i);
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      values[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

double cosine_lr(long long step, long long total, double lr0) {
  if (lr0 < 0.0) throw std::invalid_argument("cosine_lr: negative base learning rate");
  if (total <= 0) return lr0;
  const double frac = static_cast<double>(step) / static_cast<double>(total);
  return lr0 * (1.0 + std::cos(std::numbers::pi * frac)) / 2.0;
}

double clip_grad_norm(std::vector<Tensor>& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params)
    for (double g : p.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& p : params) {
      auto* n = p.node();
      for (double& g : n->grad) g *= s;
    }
  }
  return norm;
}

}  // namespace hag
