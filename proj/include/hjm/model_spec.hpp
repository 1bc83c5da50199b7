#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hjm/dataset.hpp"

namespace hjm {

enum class Functional { kValue, kSlope, kAuc };
enum class Summary { kSum, kAverage, kMax, kMin };

Functional parse_functional(const std::string& name);
Summary parse_summary(const std::string& name);
std::string to_string(Functional f);
std::string to_string(Summary s);

struct AssociationTerm {
  Functional functional = Functional::kValue;
  Summary summary = Summary::kSum;
};

struct PriorConfig {
  double coef_scale = 2.5;    // normal prior scale for standardized coefficients
  double cauchy_scale = 5.0;  // half-Cauchy scales and Cauchy spline coefficients
};

// Declarative model description. The longitudinal formula carries the fixed
// terms plus `(terms | patient)` and `(terms | cluster)` (below-patient mode)
// or `(terms | group)` (above-patient mode) random-effect blocks. The event
// formula lists baseline covariates only; the log baseline hazard is a
// B-spline expansion and absorbs the intercept.
struct ModelSpec {
  HierarchyMode mode = HierarchyMode::kClusterBelowPatient;
  std::string family = "normal";
  std::string link = "identity";
  std::string longitudinal_formula;
  std::string event_formula;
  std::vector<AssociationTerm> association;
  bool frailty = false;
  bool shared_re = false;
  int baseline_df = 6;
  int spline_degree = 3;
  int quadrature_nodes = 15;
  bool standardize = true;
  PriorConfig priors;

  int q() const { return static_cast<int>(association.size()); }

  void validate() const;

  static ModelSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

}  // namespace hjm
