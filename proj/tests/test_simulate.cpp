#include <doctest.h>

#include <cmath>

#include "hjm/error.hpp"
#include "hjm/simulate.hpp"
#include "hjm/stats.hpp"

using namespace hjm;

namespace {

// two-level design with no association; hazard constant 0.2
SimulationDesign plain_design(int n) {
  SimulationDesign d;
  d.n_patients = n;
  d.t_max = 12.0;
  d.spec.mode = HierarchyMode::kPatientOnly;
  d.spec.longitudinal_formula = "value ~ 1 + time + (1 | patient)";
  d.spec.event_formula = "~ 1";
  d.spec.association = {};
  d.beta = {0.5, 0.2};
  d.sigma = 0.3;
  d.sd_b = {0.7};
  d.baseline = SimulationDesign::Baseline::kConstant;
  d.baseline_rate = 0.2;
  return d;
}

}  // namespace

TEST_CASE("event inversion matches closed forms") {
  // constant hazard 2: H(T) = 2T, u = e^-1 -> T = 0.5
  auto [t1, s1] = invert_survival([](double t) { return 2.0 * t; }, std::exp(-1.0), 10.0);
  CHECK(s1 == 1);
  CHECK(t1 == doctest::Approx(0.5).epsilon(1e-7));

  // Weibull hazard 3t^2: H(T) = T^3, u = e^-1 -> T = 1
  auto [t2, s2] = invert_survival([](double t) { return t * t * t; }, std::exp(-1.0), 10.0);
  CHECK(s2 == 1);
  CHECK(t2 == doctest::Approx(1.0).epsilon(1e-7));

  // u near 1: tiny but positive time
  auto [t3, s3] = invert_survival([](double t) { return 2.0 * t; }, 1.0 - 1e-12, 10.0);
  CHECK(s3 == 1);
  CHECK(t3 > 0.0);
  CHECK(t3 < 1e-6);

  // not enough cumulative mass: administratively censored
  auto [t4, s4] = invert_survival([](double t) { return 0.01 * t; }, 0.5, 10.0);
  CHECK(s4 == 0);
  CHECK(t4 == 10.0);

  CHECK_THROWS_AS(invert_survival([](double t) { return std::sin(3.0 * t); }, 0.5, 10.0),
                  NumericalError);
}

TEST_CASE("same seed reproduces the dataset byte for byte") {
  auto a = simulate_dataset(plain_design(30), 77);
  auto b = simulate_dataset(plain_design(30), 77);
  CHECK(csv::to_string(a.data.export_longitudinal()) ==
        csv::to_string(b.data.export_longitudinal()));
  CHECK(csv::to_string(a.data.export_event()) == csv::to_string(b.data.export_event()));
  auto c = simulate_dataset(plain_design(30), 78);
  CHECK(csv::to_string(a.data.export_event()) != csv::to_string(c.data.export_event()));
}

TEST_CASE("noiseless values sit exactly on the mean trajectory") {
  auto d = plain_design(10);
  d.sigma = 0.0;
  auto sim = simulate_dataset(d, 5);
  for (int i = 0; i < sim.data.n_patients(); ++i) {
    const double b0 = sim.truth["patients"][i]["b"][0].get<double>();
    for (int k : sim.data.patients[i].clusters[0].obs) {
      const double want = 0.5 + 0.2 * sim.data.obs_time[k] + b0;
      CHECK(sim.data.obs_value[k] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("association-free exponential cohort passes KM and KS checks") {
  auto d = plain_design(2000);
  auto sim = simulate_dataset(d, 2024);

  std::vector<double> times;
  std::vector<int> status;
  for (const auto& p : sim.data.patients) {
    times.push_back(p.event_time);
    status.push_back(p.status);
  }
  auto km = kaplan_meier(times, status);
  // simultaneous 95% band via Dvoretzky-Kiefer-Wolfowitz
  const double band = std::sqrt(std::log(2.0 / 0.05) / (2.0 * times.size()));
  for (double t = 0.25; t < 11.0; t += 0.25)
    CHECK(std::abs(km.at(t) - std::exp(-0.2 * t)) < band);

  // KS on uncensored portion against the truncated exponential CDF
  std::vector<double> events;
  for (std::size_t i = 0; i < times.size(); ++i)
    if (status[i] == 1) events.push_back(times[i]);
  const double whole = 1.0 - std::exp(-0.2 * 12.0);
  auto ks = ks_test(events, [&](double t) { return (1.0 - std::exp(-0.2 * t)) / whole; });
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("empirical random-effect covariance approaches the truth") {
  SimulationDesign d;
  d.n_patients = 5000;
  d.t_max = 8.0;
  d.spec.mode = HierarchyMode::kPatientOnly;
  d.spec.longitudinal_formula = "value ~ 1 + time + (1 + time | patient)";
  d.spec.event_formula = "~ 1";
  d.beta = {0.0, 0.1};
  d.sigma = 0.1;
  d.sd_b = {1.0, 0.5};
  d.corr_b = {{1.0, 0.4}, {0.4, 1.0}};
  d.baseline_rate = 0.05;
  auto sim = simulate_dataset(d, 31);

  double s00 = 0, s01 = 0, s11 = 0;
  for (const auto& p : sim.truth["patients"]) {
    const double b0 = p["b"][0].get<double>(), b1 = p["b"][1].get<double>();
    s00 += b0 * b0;
    s01 += b0 * b1;
    s11 += b1 * b1;
  }
  const double n = 5000.0;
  // Frobenius distance below 10% of the truth's norm
  const double e00 = s00 / n - 1.0, e01 = s01 / n - 0.2, e11 = s11 / n - 0.25;
  const double err = std::sqrt(e00 * e00 + 2.0 * e01 * e01 + e11 * e11);
  const double ref = std::sqrt(1.0 + 2.0 * 0.04 + 0.0625);
  CHECK(err < 0.1 * ref);
}

TEST_CASE("three-level simulation respects the cluster-count distribution") {
  SimulationDesign d;
  d.n_patients = 4000;
  d.t_max = 10.0;
  d.spec.mode = HierarchyMode::kClusterBelowPatient;
  d.spec.longitudinal_formula = "value ~ 1 + time + (1 | patient) + (1 | cluster)";
  d.spec.event_formula = "~ 1";
  d.beta = {0.0, 0.1};
  d.sd_b = {0.5};
  d.sd_u = {0.5};
  d.baseline_rate = 0.1;
  auto sim = simulate_dataset(d, 9);

  std::vector<int> counts(5, 0);
  for (const auto& p : sim.data.patients) counts[p.clusters.size()]++;
  const double n = 4000.0;
  CHECK(counts[1] / n == doctest::Approx(0.32).epsilon(0.1));
  CHECK(counts[2] / n == doctest::Approx(0.23).epsilon(0.1));
  CHECK(counts[3] / n == doctest::Approx(0.17).epsilon(0.1));
  CHECK(counts[4] / n == doctest::Approx(0.28).epsilon(0.1));
}

TEST_CASE("design round-trips through JSON") {
  auto d = plain_design(30);
  d.corr_b = {{1.0}};
  auto back = SimulationDesign::from_json(d.to_json());
  CHECK(back.n_patients == 30);
  CHECK(back.beta == d.beta);
  CHECK(back.baseline_rate == d.baseline_rate);
  CHECK(back.spec.longitudinal_formula == d.spec.longitudinal_formula);
  auto a = simulate_dataset(d, 3);
  auto b = simulate_dataset(back, 3);
  CHECK(csv::to_string(a.data.export_event()) == csv::to_string(b.data.export_event()));
}
