#include "hjm/quadrature.hpp"

#include <cmath>

#include "hjm/error.hpp"

namespace hjm {

QuadratureRule QuadratureRule::gauss_kronrod_15() {
  static const double abscissae[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.0};
  static const double kronrod_weights[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  QuadratureRule rule;
  for (int i = 0; i < 7; ++i) {
    rule.nodes.push_back(-abscissae[i]);
    rule.weights.push_back(kronrod_weights[i]);
  }
  rule.nodes.push_back(0.0);
  rule.weights.push_back(kronrod_weights[7]);
  for (int i = 6; i >= 0; --i) {
    rule.nodes.push_back(abscissae[i]);
    rule.weights.push_back(kronrod_weights[i]);
  }
  return rule;
}

QuadratureRule QuadratureRule::gauss_legendre(int n) {
  if (n < 1) throw DomainError("quadrature order must be positive");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  // Newton iteration on Legendre polynomials from the Chebyshev initial guess.
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace hjm
