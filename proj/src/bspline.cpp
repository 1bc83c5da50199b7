#include "hjm/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "hjm/error.hpp"

namespace hjm {

BSplineBasis::BSplineBasis(int degree, std::vector<double> interior_knots, double t_max)
    : degree_(degree), t_max_(t_max), interior_(std::move(interior_knots)) {
  if (degree < 0) throw DomainError("B-spline degree must be nonnegative");
  if (!(t_max > 0)) throw DomainError("B-spline upper boundary must be positive");
  for (std::size_t i = 0; i < interior_.size(); ++i) {
    if (!(interior_[i] > 0 && interior_[i] < t_max_))
      throw DomainError("interior knots must lie strictly inside (0, t_max)");
    if (i > 0 && !(interior_[i] >= interior_[i - 1]))
      throw DomainError("interior knots must be ascending");
  }
  df_ = static_cast<int>(interior_.size()) + degree_ + 1;
  knots_.assign(degree_ + 1, 0.0);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), degree_ + 1, t_max_);
}

BSplineBasis BSplineBasis::from_quantiles(const std::vector<double>& times, int df, double t_max,
                                          int degree) {
  const int n_interior = df - degree - 1;
  if (n_interior < 0) throw DomainError("df too small for the requested degree");
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots;
  for (int k = 1; k <= n_interior; ++k) {
    const double p = static_cast<double>(k) / (n_interior + 1);
    // type-7 quantile
    const double h = p * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double q = sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
    // keep knots strictly interior
    q = std::min(std::max(q, 1e-8 * t_max), t_max * (1.0 - 1e-8));
    if (!knots.empty() && q <= knots.back()) q = std::nextafter(knots.back(), t_max);
    knots.push_back(q);
  }
  return BSplineBasis(degree, std::move(knots), t_max);
}

void BSplineBasis::eval_into(double t, double* out) const {
  if (!(t >= 0.0) || !(t <= t_max_))
    throw DomainError("B-spline evaluation at t outside [0, t_max]");
  std::fill(out, out + df_, 0.0);

  // Locate the knot span [knots_[span], knots_[span+1]) containing t.
  const int n = df_;
  int span = degree_;
  const int max_span = n - 1;
  while (span < max_span && t >= knots_[span + 1]) ++span;

  // de Boor / Cox recursion over the degree+1 active functions.
  std::vector<double> left(degree_ + 1), right(degree_ + 1), work(degree_ + 1);
  work[0] = 1.0;
  for (int j = 1; j <= degree_; ++j) {
    left[j] = t - knots_[span + 1 - j];
    right[j] = knots_[span + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double tmp = denom != 0.0 ? work[r] / denom : 0.0;
      work[r] = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    work[j] = saved;
  }
  for (int r = 0; r <= degree_; ++r) out[span - degree_ + r] = work[r];
}

std::vector<double> BSplineBasis::eval(double t) const {
  std::vector<double> out(df_);
  eval_into(t, out.data());
  return out;
}

}  // namespace hjm
