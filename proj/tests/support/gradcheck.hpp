#pragma once

#include <algorithm>
#include <cmath>

#include "leaklab/train.hpp"

namespace leaklab::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  Eigen::Index worst = -1;
};

/// Central differences on every parameter; relative error uses max(|g|, |fd|, floor) as denominator.
inline GradCheck gradient_check(const EpsNetwork& net, const Vector& params, const std::vector<NoisedItem>& batch,
                                double h = 1e-6, double floor = 1e-6) {
  const Vector g = loss_and_gradient(net, params, batch).grad;
  GradCheck out;
  Vector p = params;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double orig = p(i);
    p(i) = orig + h;
    const double up = loss_only(net, p, batch);
    p(i) = orig - h;
    const double down = loss_only(net, p, batch);
    p(i) = orig;
    const double fd = (up - down) / (2.0 * h);
    const double rel = std::abs(g(i) - fd) / std::max({std::abs(g(i)), std::abs(fd), floor});
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst = i;
    }
  }
  return out;
}

}  // namespace leaklab::testing
