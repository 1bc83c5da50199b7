#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hjm/design.hpp"
#include "hjm/fit.hpp"
#include "hjm/parameters.hpp"
#include "hjm/rng.hpp"

namespace hjm {

// A dynamic-prediction question: given survival to `landmark` and the
// biomarker history up to it, what is the probability of surviving to
// `horizon`? An empty `patients` list means every patient at risk.
struct LandmarkQuery {
  double landmark = 0.0;
  double horizon = 0.0;
  std::vector<std::string> patients;

  void validate() const;
};

struct PatientPrediction {
  std::string id;
  double survival = 0.0;  // posterior mean over draws
  double lower = 0.0, upper = 0.0;  // central 95% interval over draws
  int n_draws = 0;
};

struct PredictionResult {
  double landmark = 0.0, horizon = 0.0;
  std::vector<PatientPrediction> rows;
};

// Copy of `data` truncated at the landmark: only patients still at risk,
// only observations at or before the landmark, event time reset to the
// landmark with censored status. Clusters left with no observations are
// dropped (they carry no information about their own random effect).
// Patients with no remaining observation are dropped as well. Group ids and
// indices are preserved verbatim so group-level parameter blocks stay
// aligned with the fitted layout.
Dataset landmark_dataset(const Dataset& data, double landmark);

// Conditional mode of the patient-level random effects given the population
// parameters already stored in `x` and the patient's truncated history.
// Optimizes the patient's own coefficients in place (the patient block plus,
// in cluster-below-patient mode, the patient's cluster blocks) and returns
// what the Laplace step needs.
struct ConditionalMode {
  std::vector<int> slots;     // indices into the unconstrained vector
  std::vector<double> mode;   // values at those indices, after ascent
  std::vector<double> chol;   // lower Cholesky factor of the negative Hessian
  double objective = 0.0;
  int iterations = 0;
};

ConditionalMode conditional_random_effects(const Design& design, const ParamLayout& layout,
                                           std::vector<double>& x, int patient,
                                           std::span<const double> warm_start = {});

// One draw from the Gaussian (Laplace) approximation at the mode, written
// into the free slots of `x`.
void laplace_draw(const ConditionalMode& mode, Rng& rng, std::vector<double>& x);

// Conditional survival per patient: for every posterior draw, refit the
// patient's random effects from history up to the landmark, draw them from
// the Laplace approximation, and evaluate
// exp(-[H(horizon) - H(landmark)]). `data` is the full follow-up dataset the
// model was fitted to; `threads` <= 0 picks the hardware count.
PredictionResult conditional_survival(const Dataset& data, const LoadedFit& fit,
                                      const LandmarkQuery& query, std::uint64_t seed,
                                      int threads = 0);

// Time-dependent discrimination at the query's window. Cases experience the
// event inside (landmark, horizon]; controls survive past the horizon;
// patients censored inside the window are excluded. Ties in risk count 1/2.
struct AucResult {
  double auc = 0.0;
  int cases = 0, controls = 0, excluded = 0;
};

AucResult time_dependent_auc(const PredictionResult& predictions, const Dataset& data,
                             const LandmarkQuery& query);

csv::Table predictions_to_csv(const PredictionResult& predictions);
nlohmann::json auc_to_json(const AucResult& result, const LandmarkQuery& query);

}  // namespace hjm
