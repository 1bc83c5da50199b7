#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjm/dataset.hpp"
#include "hjm/model_spec.hpp"

namespace hjm {

// Random covariate column attached to simulated rows.
struct CovariateGen {
  enum class Kind { kBinary, kNormal };
  std::string name;
  Kind kind = Kind::kBinary;
  double p = 0.5;   // binary success probability
  double mean = 0.0, sd = 1.0;
};

// Ground-truth generator configuration. Formulas in `spec` may use
// covariates, `time`, and `pow(time, k)`; orthogonalized polynomial terms
// have no data-free definition and are rejected here.
struct SimulationDesign {
  int n_patients = 200;
  // distribution of clusters per patient over 1..4
  std::vector<double> cluster_probs = {0.32, 0.23, 0.17, 0.28};
  double obs_interval = 1.5;
  double obs_jitter = 0.0;  // uniform jitter half-width on non-baseline visits
  double t_max = 20.0;
  int n_groups = 0;  // above-patient mode

  ModelSpec spec;
  std::vector<CovariateGen> long_covariates;
  std::vector<CovariateGen> event_covariates;

  // truth, on the raw data scale
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<double> alpha;
  double sigma = 0.5;
  std::vector<double> sd_b, sd_u;
  std::vector<std::vector<double>> corr_b, corr_u;  // optional; identity when empty
  double sigma_delta = 0.0;

  enum class Baseline { kConstant, kWeibull };
  Baseline baseline = Baseline::kConstant;
  double baseline_rate = 0.1;                       // h0(t) = rate
  double weibull_shape = 3.0, weibull_scale = 1.0;  // h0(t) = scale*shape*t^(shape-1)

  void validate() const;
  static SimulationDesign from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SimulationResult {
  Dataset data;
  nlohmann::json truth;  // parameters and every latent draw
};

SimulationResult simulate_dataset(const SimulationDesign& design, std::uint64_t seed);

// Inverse-transform event sampling: solves H(T) = -log(u) by bisection on
// [0, t_max] to 1e-8; returns (t_max, 0) when the total mass is too small.
// Throws NumericalError if H is detected to be non-monotone.
std::pair<double, int> invert_survival(const std::function<double(double)>& cum_hazard,
                                       double u, double t_max);

}  // namespace hjm
