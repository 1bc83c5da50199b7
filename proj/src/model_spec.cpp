#include "hjm/model_spec.hpp"

#include "hjm/error.hpp"
#include "hjm/formula.hpp"

namespace hjm {

Functional parse_functional(const std::string& name) {
  if (name == "value") return Functional::kValue;
  if (name == "slope") return Functional::kSlope;
  if (name == "auc") return Functional::kAuc;
  throw DomainError("unknown association functional \"" + name + "\"");
}

Summary parse_summary(const std::string& name) {
  if (name == "sum") return Summary::kSum;
  if (name == "average" || name == "mean") return Summary::kAverage;
  if (name == "max") return Summary::kMax;
  if (name == "min") return Summary::kMin;
  throw DomainError("unknown cluster summary \"" + name + "\"");
}

std::string to_string(Functional f) {
  switch (f) {
    case Functional::kValue: return "value";
    case Functional::kSlope: return "slope";
    case Functional::kAuc: return "auc";
  }
  return "?";
}

std::string to_string(Summary s) {
  switch (s) {
    case Summary::kSum: return "sum";
    case Summary::kAverage: return "average";
    case Summary::kMax: return "max";
    case Summary::kMin: return "min";
  }
  return "?";
}

void ModelSpec::validate() const {
  if (family != "normal" || link != "identity")
    throw DomainError("only the identity-link normal family is supported (got " + family + "/" +
                      link + ")");
  if (baseline_df < spline_degree + 1)
    throw DomainError("baseline_df must be at least spline_degree + 1");
  if (quadrature_nodes < 1) throw DomainError("quadrature_nodes must be positive");
  if (mode != HierarchyMode::kClusterAbovePatient) {
    if (frailty || shared_re)
      throw DomainError("frailty and shared_re require cluster-above-patient mode");
  }
  const ParsedFormula pf = parse_formula(longitudinal_formula);
  bool has_cluster = false, has_group = false;
  for (const auto& block : pf.random) {
    if (block.level == "cluster") has_cluster = true;
    if (block.level == "group") has_group = true;
  }
  if (has_cluster && mode != HierarchyMode::kClusterBelowPatient)
    throw DomainError("(terms | cluster) random effects require cluster-below-patient mode");
  if (has_group && mode != HierarchyMode::kClusterAbovePatient)
    throw DomainError("(terms | group) random effects require cluster-above-patient mode");
  if (shared_re && !has_group)
    throw DomainError("shared_re needs a (terms | group) random-effect block");
  if (shared_re && q() != 1)
    throw DomainError("shared_re uses a single association parameter on the group intercept");
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  ModelSpec spec;
  if (j.contains("mode")) spec.mode = parse_hierarchy_mode(j.at("mode").get<std::string>());
  if (j.contains("family")) spec.family = j.at("family").get<std::string>();
  if (j.contains("link")) spec.link = j.at("link").get<std::string>();
  spec.longitudinal_formula = j.at("longitudinal").get<std::string>();
  if (j.contains("event")) spec.event_formula = j.at("event").get<std::string>();
  if (j.contains("association")) {
    for (const auto& a : j.at("association")) {
      AssociationTerm term;
      term.functional = parse_functional(a.at("functional").get<std::string>());
      if (a.contains("summary")) term.summary = parse_summary(a.at("summary").get<std::string>());
      spec.association.push_back(term);
    }
  }
  if (j.contains("frailty")) spec.frailty = j.at("frailty").get<bool>();
  if (j.contains("shared_re")) spec.shared_re = j.at("shared_re").get<bool>();
  if (j.contains("baseline_df")) spec.baseline_df = j.at("baseline_df").get<int>();
  if (j.contains("spline_degree")) spec.spline_degree = j.at("spline_degree").get<int>();
  if (j.contains("quadrature_nodes")) spec.quadrature_nodes = j.at("quadrature_nodes").get<int>();
  if (j.contains("standardize")) spec.standardize = j.at("standardize").get<bool>();
  if (j.contains("priors")) {
    const auto& p = j.at("priors");
    if (p.contains("coef_scale")) spec.priors.coef_scale = p.at("coef_scale").get<double>();
    if (p.contains("cauchy_scale")) spec.priors.cauchy_scale = p.at("cauchy_scale").get<double>();
  }
  spec.validate();
  return spec;
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j;
  j["mode"] = to_string(mode);
  j["family"] = family;
  j["link"] = link;
  j["longitudinal"] = longitudinal_formula;
  j["event"] = event_formula;
  nlohmann::json assoc = nlohmann::json::array();
  for (const auto& a : association)
    assoc.push_back({{"functional", to_string(a.functional)}, {"summary", to_string(a.summary)}});
  j["association"] = assoc;
  j["frailty"] = frailty;
  j["shared_re"] = shared_re;
  j["baseline_df"] = baseline_df;
  j["spline_degree"] = spline_degree;
  j["quadrature_nodes"] = quadrature_nodes;
  j["standardize"] = standardize;
  j["priors"] = {{"coef_scale", priors.coef_scale}, {"cauchy_scale", priors.cauchy_scale}};
  return j;
}

}  // namespace hjm
