#pragma once

#include <vector>

namespace hjm {

// Cubic (by default) B-spline basis on [0, t_max] with the usual clamped
// knot vector: boundary knots repeated degree+1 times, interior knots
// strictly inside (0, t_max). df = interior knot count + degree + 1.
class BSplineBasis {
 public:
  BSplineBasis() = default;
  BSplineBasis(int degree, std::vector<double> interior_knots, double t_max);

  // Interior knots at empirical quantiles of `times` (uncensored event times
  // preferred by the caller), yielding the requested degrees of freedom.
  static BSplineBasis from_quantiles(const std::vector<double>& times, int df, double t_max,
                                     int degree = 3);

  int degree() const { return degree_; }
  int df() const { return df_; }
  double t_max() const { return t_max_; }
  const std::vector<double>& interior_knots() const { return interior_; }

  // Basis values at t; nonnegative and summing to one. Throws DomainError
  // outside [0, t_max] (no extrapolation).
  std::vector<double> eval(double t) const;
  void eval_into(double t, double* out) const;  // out has df() slots

 private:
  int degree_ = 3;
  int df_ = 0;
  double t_max_ = 0.0;
  std::vector<double> interior_;
  std::vector<double> knots_;  // full clamped knot vector
};

}  // namespace hjm
