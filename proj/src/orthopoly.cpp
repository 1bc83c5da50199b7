#include "hjm/orthopoly.hpp"

#include <cmath>
#include <set>

#include "hjm/error.hpp"

namespace hjm {

OrthoPolyBasis::OrthoPolyBasis(int degree, std::vector<double> alpha, std::vector<double> norm2)
    : degree_(degree), alpha_(std::move(alpha)), norm2_(std::move(norm2)) {}

OrthoPolyBasis OrthoPolyBasis::fit(const std::vector<double>& times, int degree) {
  if (degree < 1) throw DomainError("orthogonal polynomial degree must be >= 1");
  std::set<double> distinct(times.begin(), times.end());
  if (static_cast<int>(distinct.size()) < degree + 1)
    throw DomainError("need at least degree + 1 distinct times to orthogonalize, got " +
                      std::to_string(distinct.size()));

  const std::size_t n = times.size();
  OrthoPolyBasis basis;
  basis.degree_ = degree;

  // Monic orthogonal polynomials for the discrete measure on `times`:
  // P_{j+1}(t) = (t - a_j) P_j(t) - n_j P_{j-1}(t).
  std::vector<double> prev(n, 0.0), cur(n, 1.0);
  double norm_prev = 0.0, norm_cur = static_cast<double>(n);
  basis.norm2_.push_back(norm_cur);
  for (int j = 0; j < degree; ++j) {
    double ta = 0.0;
    for (std::size_t k = 0; k < n; ++k) ta += times[k] * cur[k] * cur[k];
    const double a = ta / norm_cur;
    const double nj = j == 0 ? 0.0 : norm_cur / norm_prev;
    basis.alpha_.push_back(a);
    std::vector<double> next(n);
    double norm_next = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      next[k] = (times[k] - a) * cur[k] - nj * prev[k];
      norm_next += next[k] * next[k];
    }
    if (!(norm_next > 0) || norm_next < 1e-12 * norm_cur)
      throw DomainError("orthogonal polynomial basis is rank deficient at degree " +
                        std::to_string(j + 1));
    prev = std::move(cur);
    cur = std::move(next);
    norm_prev = norm_cur;
    norm_cur = norm_next;
    basis.norm2_.push_back(norm_cur);
  }
  return basis;
}

void OrthoPolyBasis::eval_into(double t, int derivative_order, double* out) const {
  if (derivative_order < 0 || derivative_order > 1)
    throw DomainError("orthogonal polynomial derivative order must be 0 or 1");
  double prev = 0.0, cur = 1.0;
  double dprev = 0.0, dcur = 0.0;
  for (int j = 0; j < degree_; ++j) {
    const double nj = j == 0 ? 0.0 : norm2_[j] / norm2_[j - 1];
    const double next = (t - alpha_[j]) * cur - nj * prev;
    const double dnext = cur + (t - alpha_[j]) * dcur - nj * dprev;
    prev = cur;
    cur = next;
    dprev = dcur;
    dcur = dnext;
    const double scale = 1.0 / std::sqrt(norm2_[j + 1]);
    out[j] = (derivative_order == 0 ? cur : dcur) * scale;
  }
}

std::vector<double> OrthoPolyBasis::eval(double t, int derivative_order) const {
  std::vector<double> out(degree_);
  eval_into(t, derivative_order, out.data());
  return out;
}

}  // namespace hjm
