#pragma once

// Central finite differences against the gradients a backward pass left on
// the leaf tensors.

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hag/autodiff.hpp"

namespace fixture {

struct GradReport {
  std::size_t checked = 0;
  std::size_t failed = 0;
  double worst_abs = 0.0;
  std::string first_failure;
};

// Entry passes if |analytic - numeric| <= abs_tol or the relative error
// against the larger magnitude is <= rel_tol.
inline bool grad_close(double analytic, double numeric, double rel_tol, double abs_tol) {
  const double err = std::abs(analytic - numeric);
  if (err <= abs_tol) return true;
  return err <= rel_tol * std::max(std::abs(analytic), std::abs(numeric));
}

inline GradReport gradcheck(const std::vector<std::pair<std::string, hag::Tensor>>& leaves,
                            const std::function<double()>& loss, double eps = 1e-5, double rel_tol = 1e-4,
                            double abs_tol = 1e-6) {
  GradReport rep;
  for (const auto& [name, leaf] : leaves) {
    hag::Tensor t = leaf;
    auto v = t.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + eps;
      const double up = loss();
      v[i] = saved - eps;
      const double down = loss();
      v[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = t.grad_at(i);
      ++rep.checked;
      rep.worst_abs = std::max(rep.worst_abs, std::abs(numeric - analytic));
      if (!grad_close(analytic, numeric, rel_tol, abs_tol)) {
        if (rep.failed == 0) {
          rep.first_failure = name + "[" + std::to_string(i) + "] analytic " + std::to_string(analytic) + " numeric " +
                              std::to_string(numeric);
        }
        ++rep.failed;
      }
    }
  }
  return rep;
}

}  // namespace fixture
