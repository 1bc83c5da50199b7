#include <doctest.h>

#include <cmath>
#include <vector>

#include "hjm/error.hpp"
#include "hjm/orthopoly.hpp"

using namespace hjm;

namespace {

// Gram-Schmidt oracle: orthonormalize {1, t, t^2, ...} evaluated at the fit
// times and return the columns for degrees 1..degree.
std::vector<std::vector<double>> gram_schmidt_columns(const std::vector<double>& times,
                                                      int degree) {
  const std::size_t n = times.size();
  std::vector<std::vector<double>> cols(degree + 1, std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r)
    for (int d = 0; d <= degree; ++d) cols[d][r] = std::pow(times[r], d);
  for (int d = 0; d <= degree; ++d) {
    for (int prev = 0; prev < d; ++prev) {
      double dot = 0.0;
      for (std::size_t r = 0; r < n; ++r) dot += cols[d][r] * cols[prev][r];
      for (std::size_t r = 0; r < n; ++r) cols[d][r] -= dot * cols[prev][r];
    }
    double norm = 0.0;
    for (double v : cols[d]) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : cols[d]) v /= norm;
  }
  return {cols.begin() + 1, cols.end()};
}

}  // namespace

TEST_CASE("columns match a Gram-Schmidt orthonormalization at the fit times") {
  const std::vector<double> times = {0.0, 0.5, 0.5, 1.2, 2.0, 3.4, 3.4, 5.0, 6.6};
  auto basis = OrthoPolyBasis::fit(times, 3);
  auto oracle = gram_schmidt_columns(times, 3);
  for (std::size_t r = 0; r < times.size(); ++r) {
    auto vals = basis.eval(times[r]);
    for (int d = 0; d < 3; ++d) {
      CAPTURE(r);
      CAPTURE(d);
      // sign convention: leading coefficient positive in both constructions
      CHECK(vals[d] == doctest::Approx(oracle[d][r]).epsilon(1e-9));
    }
  }
}

TEST_CASE("columns are orthonormal over the fit times") {
  std::vector<double> times;
  for (int i = 0; i < 40; ++i) times.push_back(0.13 * i * i - i);
  auto basis = OrthoPolyBasis::fit(times, 4);
  std::vector<std::vector<double>> cols(4, std::vector<double>(times.size()));
  for (std::size_t r = 0; r < times.size(); ++r) {
    auto vals = basis.eval(times[r]);
    for (int d = 0; d < 4; ++d) cols[d][r] = vals[d];
  }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b <= a; ++b) {
      double dot = 0.0;
      for (std::size_t r = 0; r < times.size(); ++r) dot += cols[a][r] * cols[b][r];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
    }
}

TEST_CASE("derivatives match central differences") {
  const std::vector<double> times = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 9.0};
  auto basis = OrthoPolyBasis::fit(times, 3);
  const double h = 1e-6;
  for (double t : {0.4, 2.5, 6.1}) {
    auto d = basis.eval(t, 1);
    auto up = basis.eval(t + h);
    auto dn = basis.eval(t - h);
    for (int j = 0; j < 3; ++j)
      CHECK(d[j] == doctest::Approx((up[j] - dn[j]) / (2.0 * h)).epsilon(1e-6));
  }
}

TEST_CASE("reconstruction from recurrence coefficients is exact") {
  const std::vector<double> times = {0.1, 0.9, 1.7, 2.2, 4.4, 6.0};
  auto basis = OrthoPolyBasis::fit(times, 2);
  OrthoPolyBasis rebuilt(2, basis.recurrence_centers(), basis.recurrence_norms());
  for (double t : {0.0, 1.3, 5.5}) {
    auto a = basis.eval(t);
    auto b = rebuilt.eval(t);
    for (int j = 0; j < 2; ++j) CHECK(a[j] == b[j]);
  }
}

TEST_CASE("too few distinct times is an error") {
  CHECK_THROWS_AS(OrthoPolyBasis::fit({1.0, 1.0, 2.0}, 2), DomainError);
}
