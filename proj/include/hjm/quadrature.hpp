#pragma once

#include <vector>

namespace hjm {

// Fixed-node quadrature rule on [-1, 1]. The default is the 15-point
// Gauss-Kronrod rule; a fixed node count keeps integrands a smooth
// composition of the parameters, which gradient-based samplers need.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  int count() const { return static_cast<int>(nodes.size()); }

  static QuadratureRule gauss_kronrod_15();
  // Gauss-Legendre rule of arbitrary order, used for refinement checks.
  static QuadratureRule gauss_legendre(int n);

  // Integral of f over [0, upper] via the affine map from [-1, 1].
  template <class F>
  auto integrate(double upper, F&& f) const {
    const double half = 0.5 * upper;
    auto total = f(half * (nodes[0] + 1.0)) * (weights[0] * half);
    for (std::size_t m = 1; m < nodes.size(); ++m)
      total = total + f(half * (nodes[m] + 1.0)) * (weights[m] * half);
    return total;
  }
};

}  // namespace hjm
