#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hjm/design.hpp"
#include "hjm/diagnostics.hpp"
#include "hjm/nuts.hpp"
#include "hjm/parameters.hpp"

namespace hjm {

// Gradient target of the joint posterior over the unconstrained vector;
// one instance per chain (owns its tape).
class ModelTarget : public TargetDensity {
 public:
  explicit ModelTarget(const Design& design) : dz_(design), layout_(design) {}

  int dim() const override { return layout_.size(); }
  double log_density(std::span<const double> x, std::span<double> grad) override;
  const ParamLayout& layout() const { return layout_; }

 private:
  const Design& dz_;
  ParamLayout layout_;
  ad::Tape tape_;
  std::vector<ad::Var> vars_;
};

struct FitResult {
  ModelSpec spec;
  nlohmann::json bases;  // fitted bases + standardization (Design::serialize_bases)
  ParamLayout layout;
  std::vector<std::string> names;
  PosteriorDraws draws;          // unconstrained coordinates
  std::vector<double> reported;  // n_draws x size, constrained and back-standardized
  double runtime_seconds = 0.0;
};

FitResult fit_model(const Design& design, const ChainConfig& config);

// Constrain one unconstrained draw and undo the internal standardization so
// every reported value is on the raw data scale. Shifts that the spline
// baseline absorbs (covariate centering, the biomarker location inside the
// association term) stay absorbed: the spline coefficients are reported on
// the standardized scale.
std::vector<double> report_draw(const Design& design, const ParamLayout& layout,
                                std::span<const double> unconstrained);

// Columns reported in summaries and convergence checks: everything except
// the per-unit random effects.
std::vector<int> population_columns(const Design& design, const ParamLayout& layout);

struct SummaryRow {
  std::string name;
  double mean = 0.0, q025 = 0.0, q975 = 0.0;
  bool hazard_scale = false;  // event-submodel coefficient: also exponentiated
  double hr_mean = 0.0, hr_q025 = 0.0, hr_q975 = 0.0;
};

std::vector<SummaryRow> summarize_fit(const Design& design, const FitResult& fit);

csv::Table summary_to_csv(const std::vector<SummaryRow>& rows);
csv::Table draws_to_csv(const FitResult& fit, bool reported_scale);
nlohmann::json diagnostics_json(const Design& design, const FitResult& fit);

// Artifact directory: model.json, draws.csv (reported scale),
// draws_unconstrained.csv, summary.csv, diagnostics.json.
void save_fit(const std::string& dir, const Design& design, const FitResult& fit);

struct LoadedFit {
  ModelSpec spec;
  nlohmann::json bases;
  std::vector<std::string> names;
  int chains = 0;
  std::vector<std::vector<double>> unconstrained;  // one vector per draw
};

LoadedFit load_fit(const std::string& dir);

}  // namespace hjm
