#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <span>

#include "hjm/fit.hpp"
#include "hjm/rng.hpp"
#include "hjm/simulate.hpp"

using namespace hjm;

namespace {

SimulationDesign fit_design(int n) {
  SimulationDesign d;
  d.n_patients = n;
  d.t_max = 10.0;
  d.spec.mode = HierarchyMode::kPatientOnly;
  d.spec.longitudinal_formula = "value ~ 1 + time + dose + (1 + time | patient)";
  d.spec.event_formula = "~ sex";
  d.spec.association = {{Functional::kValue, Summary::kSum}};
  d.spec.baseline_df = 4;
  d.long_covariates = {{"dose", CovariateGen::Kind::kNormal, 0.0, 1.0, 0.5}};
  d.event_covariates = {{"sex", CovariateGen::Kind::kBinary, 0.5, 0.0, 0.0}};
  d.beta = {1.0, 0.3, -0.4};
  d.gamma = {0.3};
  d.alpha = {0.1};
  d.sigma = 0.4;
  d.sd_b = {0.6, 0.2};
  d.baseline = SimulationDesign::Baseline::kConstant;
  d.baseline_rate = 0.08;
  return d;
}

int name_index(const std::vector<std::string>& names, const std::string& want) {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == want) return static_cast<int>(i);
  return -1;
}

}  // namespace

TEST_CASE("reported draws undo the internal standardization") {
  auto sim = simulate_dataset(fit_design(25), 14);
  auto spec = fit_design(25).spec;
  spec.standardize = true;
  const Design dz = Design::build(sim.data, spec);
  auto raw_spec = spec;
  raw_spec.standardize = false;
  const Design raw = Design::build(sim.data, raw_spec);

  const ParamLayout layout(dz);
  Rng rng(99, 1);
  std::vector<double> x(layout.size());
  for (auto& v : x) v = 0.3 * rng.normal();
  const auto rep = report_draw(dz, layout, x);
  REQUIRE(static_cast<int>(rep.size()) == layout.size());
  const auto p = layout.view<double>(std::span<const double>(x));

  // the raw-scale mean trajectory rebuilt from reported coefficients must
  // match the standardized model's prediction mapped back to the data scale
  for (int k = 0; k < dz.data().total_obs(); k += 3) {
    double mu_std = 0.0;
    for (int c = 0; c < dz.n_fixed(); ++c) mu_std += p.beta[c] * dz.obs_x(k)[c];
    double mu_raw = 0.0;
    for (int c = 0; c < dz.n_fixed(); ++c)
      mu_raw += rep[layout.off_beta() + c] * raw.obs_x(k)[c];
    // random-effect rows are never standardized, so the same indices apply
    CHECK(mu_raw == doctest::Approx(dz.y_mean() + dz.y_scale() * mu_std).epsilon(1e-10));
  }

  // scale parameters are mapped onto the response scale
  CHECK(rep[layout.off_log_sigma()] ==
        doctest::Approx(dz.y_scale() * std::exp(x[layout.off_log_sigma()])).epsilon(1e-12));
  for (int k = 0; k < layout.d_b(); ++k)
    CHECK(rep[layout.off_log_sd_b() + k] ==
          doctest::Approx(dz.y_scale() * std::exp(x[layout.off_log_sd_b() + k])).epsilon(1e-12));

  // hazard covariate effects divide by the covariate scale, the association
  // slope by the response scale
  CHECK(rep[layout.off_gamma()] ==
        doctest::Approx(p.gamma[0] / dz.event_scales()[0]).epsilon(1e-12));
  CHECK(rep[layout.off_alpha()] == doctest::Approx(p.alpha[0] / dz.y_scale()).epsilon(1e-12));

  // spline coefficients and correlations pass through unchanged
  CHECK(rep[layout.off_lambda()] == p.lambda[0]);
  if (layout.d_b() > 1) {
    const double rho = rep[layout.off_chol_b()];
    CHECK(std::abs(rho) < 1.0);
  }
}

TEST_CASE("a short fit produces a coherent artifact") {
  auto sim = simulate_dataset(fit_design(20), 8);
  auto spec = fit_design(20).spec;
  const Design dz = Design::build(sim.data, spec);

  ChainConfig cfg;
  cfg.chains = 2;
  cfg.warmup = 200;
  cfg.samples = 100;
  cfg.seed = 4;
  auto fit = fit_model(dz, cfg);

  const int n = fit.draws.n_draws();
  REQUIRE(n == 200);
  REQUIRE(static_cast<int>(fit.reported.size()) == n * fit.layout.size());
  CHECK(fit.runtime_seconds > 0.0);

  // every reported scale parameter is positive
  for (int d = 0; d < n; ++d) {
    CHECK(fit.reported[d * fit.layout.size() + fit.layout.off_log_sigma()] > 0.0);
    CHECK(std::isfinite(fit.draws.log_post[d]));
  }

  auto rows = summarize_fit(dz, fit);
  REQUIRE(!rows.empty());
  const auto cols = population_columns(dz, fit.layout);
  CHECK(rows.size() == cols.size());
  for (const auto& r : rows) {
    CHECK(r.q025 <= r.mean);
    CHECK(r.mean <= r.q975);
    if (r.hazard_scale) {
      CHECK(r.hr_mean == doctest::Approx(r.hr_mean));  // finite
      CHECK(r.hr_q025 <= r.hr_q975);
    }
  }

  auto diag = diagnostics_json(dz, fit);
  CHECK(diag.contains("parameters"));
  CHECK(diag.contains("divergences"));

  // artifact round trip
  const std::string dir = "fit_artifact_test";
  std::filesystem::remove_all(dir);
  save_fit(dir, dz, fit);
  auto loaded = load_fit(dir);
  CHECK(loaded.chains == 2);
  CHECK(loaded.names == fit.names);
  REQUIRE(static_cast<int>(loaded.unconstrained.size()) == n);
  for (int d = 0; d < n; d += 37)
    for (int c = 0; c < fit.layout.size(); ++c)
      CHECK(loaded.unconstrained[d][c] == doctest::Approx(fit.draws.at(d, c)).epsilon(1e-14));

  // the stored bases rebuild an identical design
  const Design re = Design::from_artifact(sim.data, loaded.spec, loaded.bases);
  CHECK(re.y_scale() == dz.y_scale());
  for (int k = 0; k < dz.data().total_obs(); ++k)
    for (int c = 0; c < dz.n_fixed(); ++c) CHECK(re.obs_x(k)[c] == dz.obs_x(k)[c]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("summaries reduce constant draws exactly") {
  auto sim = simulate_dataset(fit_design(15), 21);
  auto spec = fit_design(15).spec;
  const Design dz = Design::build(sim.data, spec);

  ChainConfig cfg;
  cfg.chains = 1;
  cfg.warmup = 30;
  cfg.samples = 40;
  cfg.seed = 2;
  auto fit = fit_model(dz, cfg);
  for (int d = 0; d < fit.draws.n_draws(); ++d)
    for (int c = 0; c < fit.layout.size(); ++c)
      fit.reported[d * fit.layout.size() + c] = 0.5 * c;

  auto rows = summarize_fit(dz, fit);
  const auto cols = population_columns(dz, fit.layout);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double v = 0.5 * cols[r];
    CHECK(rows[r].mean == doctest::Approx(v).epsilon(1e-14));
    CHECK(rows[r].q025 == doctest::Approx(v).epsilon(1e-14));
    CHECK(rows[r].q975 == doctest::Approx(v).epsilon(1e-14));
    if (rows[r].hazard_scale)
      CHECK(rows[r].hr_mean == doctest::Approx(std::exp(v)).epsilon(1e-12));
  }
}
