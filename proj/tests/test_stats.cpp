#include <doctest.h>

#include <cmath>
#include <vector>

#include "hjm/rng.hpp"
#include "hjm/stats.hpp"

using namespace hjm;

TEST_CASE("inverse normal CDF inverts the CDF to high accuracy") {
  for (double p : {1e-10, 1e-4, 0.02, 0.3, 0.5, 0.8, 0.975, 1.0 - 1e-9}) {
    const double x = inverse_normal_cdf(p);
    CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0));
  CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK_THROWS(inverse_normal_cdf(0.0));
}

TEST_CASE("counter rng reproduces per stream and decorrelates across streams") {
  Rng a(42, 0), b(42, 0), c(42, 1), d(43, 0);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(c.next_u64() != Rng(42, 0).next_u64());
  CHECK(d.next_u64() != Rng(42, 0).next_u64());

  Rng r(7, 3);
  double sum = 0.0, sum2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum2 / n == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("normal draws pass a KS test against the normal CDF") {
  Rng r(1234, 0);
  std::vector<double> xs(5000);
  for (double& x : xs) x = r.normal();
  auto ks = ks_test(xs, [](double x) { return normal_cdf(x); });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("quantiles interpolate the sorted sample") {
  const std::vector<double> xs = {4.0, 1.0, 3.0, 2.0};
  CHECK(quantile(xs, 0.0) == 1.0);
  CHECK(quantile(xs, 1.0) == 4.0);
  CHECK(quantile(xs, 0.5) == doctest::Approx(2.5));
  CHECK(quantile(xs, 0.25) == doctest::Approx(1.75));
}

TEST_CASE("average ranks share ties") {
  const std::vector<double> xs = {3.0, 1.0, 3.0, 2.0};
  auto r = average_ranks(xs);
  CHECK(r[1] == 1.0);
  CHECK(r[3] == 2.0);
  CHECK(r[0] == 3.5);
  CHECK(r[2] == 3.5);
}

TEST_CASE("Kaplan-Meier matches a hand-computed table") {
  // times: 1(evt) 2(cens) 3(evt) 3(evt) 5(cens)
  const std::vector<double> t = {1.0, 2.0, 3.0, 3.0, 5.0};
  const std::vector<int> s = {1, 0, 1, 1, 0};
  auto km = kaplan_meier(t, s);
  REQUIRE(km.times.size() == 2);
  CHECK(km.at(0.5) == 1.0);
  CHECK(km.at(1.0) == doctest::Approx(4.0 / 5.0));
  CHECK(km.at(2.5) == doctest::Approx(4.0 / 5.0));
  CHECK(km.at(3.0) == doctest::Approx(4.0 / 5.0 * 1.0 / 3.0));
  CHECK(km.at(10.0) == doctest::Approx(4.0 / 15.0));
}

TEST_CASE("KS test separates right from wrong distributions") {
  Rng r(9, 0);
  std::vector<double> xs(2000);
  for (double& x : xs) x = r.uniform();
  auto good = ks_test(xs, [](double x) { return std::clamp(x, 0.0, 1.0); });
  CHECK(good.p_value > 0.01);
  auto bad = ks_test(xs, [](double x) { return std::clamp(x * x, 0.0, 1.0); });
  CHECK(bad.p_value < 1e-6);
}
