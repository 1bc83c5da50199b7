#include <doctest.h>

#include <cmath>
#include <vector>

#include "hjm/bspline.hpp"
#include "hjm/error.hpp"

using namespace hjm;

namespace {

// Textbook Cox-de Boor recursion straight from the definition, as an
// independent oracle for the production evaluator.
double cox_de_boor(const std::vector<double>& knots, int i, int p, double t) {
  if (p == 0) {
    // half-open spans, closed at the right end of the domain
    const double last = knots.back();
    if (t == last && knots[i + 1] == last && knots[i] < last) return 1.0;
    return (knots[i] <= t && t < knots[i + 1]) ? 1.0 : 0.0;
  }
  double left = 0.0, right = 0.0;
  if (knots[i + p] > knots[i])
    left = (t - knots[i]) / (knots[i + p] - knots[i]) * cox_de_boor(knots, i, p - 1, t);
  if (knots[i + p + 1] > knots[i + 1])
    right = (knots[i + p + 1] - t) / (knots[i + p + 1] - knots[i + 1]) *
            cox_de_boor(knots, i + 1, p - 1, t);
  return left + right;
}

std::vector<double> clamped_knots(int degree, const std::vector<double>& interior,
                                  double t_max) {
  std::vector<double> knots(degree + 1, 0.0);
  knots.insert(knots.end(), interior.begin(), interior.end());
  knots.insert(knots.end(), degree + 1, t_max);
  return knots;
}

}  // namespace

TEST_CASE("basis values match the recursive definition") {
  const std::vector<double> interior = {1.5, 3.0, 7.0};
  BSplineBasis basis(3, interior, 10.0);
  REQUIRE(basis.df() == 7);
  const auto knots = clamped_knots(3, interior, 10.0);
  for (double t : {0.0, 0.3, 1.5, 2.9, 3.0, 5.5, 7.0, 9.99, 10.0}) {
    auto vals = basis.eval(t);
    for (int i = 0; i < basis.df(); ++i) {
      CAPTURE(t);
      CAPTURE(i);
      CHECK(vals[i] == doctest::Approx(cox_de_boor(knots, i, 3, t)).epsilon(1e-12));
    }
  }
}

TEST_CASE("basis is a partition of unity") {
  BSplineBasis basis(3, {2.0, 4.0, 6.0, 8.0}, 10.0);
  for (double t = 0.0; t <= 10.0; t += 0.37) {
    auto vals = basis.eval(t);
    double sum = 0.0;
    for (double v : vals) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("no extrapolation outside the fitted window") {
  BSplineBasis basis(3, {2.0}, 5.0);
  CHECK_THROWS_AS(basis.eval(-0.01), DomainError);
  CHECK_THROWS_AS(basis.eval(5.01), DomainError);
  CHECK_NOTHROW(basis.eval(0.0));
  CHECK_NOTHROW(basis.eval(5.0));
}

TEST_CASE("quantile knot placement") {
  // 99 equally spaced times: df=6 cubic needs 2 interior knots, at the
  // 1/3 and 2/3 empirical quantiles
  std::vector<double> times;
  for (int i = 1; i <= 99; ++i) times.push_back(static_cast<double>(i));
  auto basis = BSplineBasis::from_quantiles(times, 6, 120.0);
  REQUIRE(basis.df() == 6);
  REQUIRE(basis.interior_knots().size() == 2);
  CHECK(basis.interior_knots()[0] == doctest::Approx(33.6666666667));
  CHECK(basis.interior_knots()[1] == doctest::Approx(66.3333333333));
}

TEST_CASE("degenerate times still give a usable basis") {
  // all events at one time: interior knots collapse, must stay strictly
  // inside (0, t_max) after clamping
  std::vector<double> times(20, 4.0);
  auto basis = BSplineBasis::from_quantiles(times, 6, 10.0);
  CHECK(basis.df() == 6);
  for (double k : basis.interior_knots()) {
    CHECK(k > 0.0);
    CHECK(k < 10.0);
  }
  CHECK_NOTHROW(basis.eval(9.9));
}
