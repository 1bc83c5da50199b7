#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "hjm/diagnostics.hpp"
#include "hjm/error.hpp"
#include "hjm/nuts.hpp"
#include "hjm/rng.hpp"
#include "hjm/stats.hpp"

using namespace hjm;

namespace {

class StdNormal : public TargetDensity {
 public:
  explicit StdNormal(int d) : d_(d) {}
  int dim() const override { return d_; }
  double log_density(std::span<const double> x, std::span<double> grad) override {
    double lp = 0.0;
    for (int k = 0; k < d_; ++k) {
      lp -= 0.5 * x[k] * x[k];
      grad[k] = -x[k];
    }
    return lp;
  }

 private:
  int d_;
};

// bivariate normal, unit variances, correlation rho
class Correlated2d : public TargetDensity {
 public:
  explicit Correlated2d(double rho) : rho_(rho) {}
  int dim() const override { return 2; }
  double log_density(std::span<const double> x, std::span<double> grad) override {
    const double c = 1.0 - rho_ * rho_;
    grad[0] = -(x[0] - rho_ * x[1]) / c;
    grad[1] = -(x[1] - rho_ * x[0]) / c;
    return -0.5 * (x[0] * x[0] - 2.0 * rho_ * x[0] * x[1] + x[1] * x[1]) / c;
  }

 private:
  double rho_;
};

std::vector<double> column(const PosteriorDraws& d, int p) {
  std::vector<double> out(d.n_draws());
  for (int i = 0; i < d.n_draws(); ++i) out[i] = d.at(i, p);
  return out;
}

}  // namespace

TEST_CASE("standard normal target is recovered") {
  ChainConfig cfg;
  cfg.seed = 20240817;
  auto draws = nuts_sample([] { return std::make_unique<StdNormal>(3); }, cfg);
  REQUIRE(draws.n_draws() == 4000);
  for (int p = 0; p < 3; ++p) {
    auto xs = column(draws, p);
    CHECK(std::abs(mean(xs)) < 0.1);
    const double sd = sample_sd(xs);
    CHECK(std::abs(sd * sd - 1.0) < 0.15);
    auto diag = diagnose_scalar(xs, draws.chains);
    CHECK(diag.rhat < 1.01);
    CHECK(diag.ess > 400.0);
  }
  CHECK(draws.divergence_count() == 0);
}

TEST_CASE("correlated gaussian correlation is recovered") {
  ChainConfig cfg;
  cfg.seed = 7;
  auto draws = nuts_sample([] { return std::make_unique<Correlated2d>(0.9); }, cfg);
  auto x = column(draws, 0), y = column(draws, 1);
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < draws.n_draws(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy) - 0.9) < 0.05);
}

TEST_CASE("same seed gives bit-identical draws, different seed does not") {
  ChainConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 200;
  cfg.samples = 100;
  cfg.seed = 99;
  auto a = nuts_sample([] { return std::make_unique<StdNormal>(2); }, cfg);
  auto b = nuts_sample([] { return std::make_unique<StdNormal>(2); }, cfg);
  CHECK(a.draws == b.draws);
  CHECK(a.log_post == b.log_post);
  cfg.parallel = false;  // threading must not change the result
  auto c = nuts_sample([] { return std::make_unique<StdNormal>(2); }, cfg);
  CHECK(a.draws == c.draws);
  cfg.seed = 100;
  auto d = nuts_sample([] { return std::make_unique<StdNormal>(2); }, cfg);
  CHECK(a.draws != d.draws);
}

TEST_CASE("retained draws pass a KS test against the target CDF across seeds") {
  int passes = 0;
  for (int seed = 1; seed <= 10; ++seed) {
    ChainConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed) * 1000;
    cfg.chains = 2;
    cfg.warmup = 300;
    cfg.samples = 500;
    auto draws = nuts_sample([] { return std::make_unique<StdNormal>(1); }, cfg);
    auto ks = ks_test(column(draws, 0), [](double x) { return normal_cdf(x); });
    if (ks.p_value > 0.01) ++passes;
  }
  CHECK(passes >= 9);
}

TEST_CASE("initialization failure after 100 jitters is reported") {
  class NeverFinite : public TargetDensity {
   public:
    int dim() const override { return 1; }
    double log_density(std::span<const double>, std::span<double>) override {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  ChainConfig cfg;
  cfg.chains = 1;
  CHECK_THROWS_WITH_AS(nuts_sample([] { return std::make_unique<NeverFinite>(); }, cfg),
                       doctest::Contains("initialization"), NumericalError);
}

TEST_CASE("diagnostics: iid draws look converged") {
  Rng r(5, 0);
  std::vector<double> xs(4000);
  for (double& x : xs) x = r.normal();
  auto d = diagnose_scalar(xs, 4);
  CHECK(d.rhat < 1.01);
  CHECK(d.ess > 3000.0);
  CHECK_FALSE(d.degenerate);
}

TEST_CASE("diagnostics: AR(1) chains have the analytic efficiency") {
  // ESS/N for AR(1) with coefficient phi is (1-phi)/(1+phi)
  const double phi = 0.9;
  Rng r(11, 0);
  const int n = 4000, chains = 4;
  std::vector<double> xs;
  xs.reserve(n * chains);
  for (int c = 0; c < chains; ++c) {
    double x = 0.0;
    for (int i = 0; i < n; ++i) {
      x = phi * x + std::sqrt(1.0 - phi * phi) * r.normal();
      xs.push_back(x);
    }
  }
  auto d = diagnose_scalar(xs, chains);
  const double want = (1.0 - phi) / (1.0 + phi) * n * chains;
  CHECK(d.ess > want / 2.0);
  CHECK(d.ess < want * 2.0);
}

TEST_CASE("diagnostics: split R-hat flags a stuck chain and constants degenerate") {
  Rng r(3, 0);
  std::vector<double> xs(2000);
  for (int i = 0; i < 2000; ++i) xs[i] = r.normal() + (i < 1000 ? 0.0 : 4.0);
  auto bad = diagnose_scalar(xs, 2);
  CHECK(bad.rhat > 1.5);

  std::vector<double> flat(400, 2.5);
  auto d = diagnose_scalar(flat, 4);
  CHECK(d.degenerate);
  CHECK(std::isnan(d.rhat));
}
