#pragma once

#include <vector>

namespace hjm {

// Orthogonalized polynomial basis of a time vector, built with the
// three-term recurrence P_{j+1}(t) = (t - a_j) P_j(t) - n_j P_{j-1}(t) and
// normalized so the columns evaluated at the construction times are
// orthonormal. Column j (1-based) carries the degree-j trend; the constant
// column is not part of the basis. Storing (a_j, n_j, norms) makes
// evaluation at new times consistent with the original fit.
class OrthoPolyBasis {
 public:
  OrthoPolyBasis() = default;

  static OrthoPolyBasis fit(const std::vector<double>& times, int degree);

  int degree() const { return degree_; }

  // Column values (length degree) at t; derivative_order 0 or 1.
  std::vector<double> eval(double t, int derivative_order = 0) const;
  void eval_into(double t, int derivative_order, double* out) const;

  const std::vector<double>& recurrence_centers() const { return alpha_; }
  const std::vector<double>& recurrence_norms() const { return norm2_; }

  // Reconstruction from serialized coefficients.
  OrthoPolyBasis(int degree, std::vector<double> alpha, std::vector<double> norm2);

 private:
  int degree_ = 0;
  std::vector<double> alpha_;  // a_0 .. a_{degree-1}
  std::vector<double> norm2_;  // squared norms of P_0 .. P_degree at fit times
};

}  // namespace hjm
