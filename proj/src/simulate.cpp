#include "hjm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Dense>

#include "hjm/error.hpp"
#include "hjm/formula.hpp"
#include "hjm/model.hpp"
#include "hjm/quadrature.hpp"
#include "hjm/rng.hpp"

namespace hjm {

NLOHMANN_JSON_SERIALIZE_ENUM(CovariateGen::Kind, {{CovariateGen::Kind::kBinary, "binary"},
                                                  {CovariateGen::Kind::kNormal, "normal"}})
NLOHMANN_JSON_SERIALIZE_ENUM(SimulationDesign::Baseline,
                             {{SimulationDesign::Baseline::kConstant, "constant"},
                              {SimulationDesign::Baseline::kWeibull, "weibull"}})

namespace {

// Raw-time term evaluation (no data-fitted bases), with first derivatives
// by the product rule.
double eval_term(const Term& term, const std::vector<double>& covs,
                 const std::map<std::string, int>& cov_index, double t, int deriv) {
  auto factor_value = [&](const Factor& f) -> double {
    switch (f.kind) {
      case Factor::Kind::kCovariate: return covs[cov_index.at(f.column)];
      case Factor::Kind::kTime: return t;
      case Factor::Kind::kTimePower: return std::pow(t, f.power);
      default: throw DomainError("orthogonal polynomial terms cannot be simulated");
    }
  };
  auto factor_deriv = [&](const Factor& f) -> double {
    switch (f.kind) {
      case Factor::Kind::kCovariate: return 0.0;
      case Factor::Kind::kTime: return 1.0;
      case Factor::Kind::kTimePower: return f.power * std::pow(t, f.power - 1);
      default: throw DomainError("orthogonal polynomial terms cannot be simulated");
    }
  };
  if (deriv == 0) {
    double v = 1.0;
    for (const auto& f : term.factors) v *= factor_value(f);
    return v;
  }
  double total = 0.0;
  for (std::size_t a = 0; a < term.factors.size(); ++a) {
    double v = factor_deriv(term.factors[a]);
    for (std::size_t b = 0; b < term.factors.size(); ++b)
      if (b != a) v *= factor_value(term.factors[b]);
    total += v;
  }
  return total;
}

double eval_terms(const std::vector<Term>& terms, std::span<const double> coef,
                  const std::vector<double>& covs, const std::map<std::string, int>& idx,
                  double t, int deriv) {
  double total = 0.0;
  for (std::size_t c = 0; c < terms.size(); ++c)
    total += coef[c] * eval_term(terms[c], covs, idx, t, deriv);
  return total;
}

Eigen::MatrixXd corr_cholesky(const std::vector<std::vector<double>>& corr, int dim,
                              const std::string& what) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Identity(dim, dim);
  if (!corr.empty()) {
    if (static_cast<int>(corr.size()) != dim)
      throw ValidationError(what + " correlation matrix does not match the term count");
    for (int r = 0; r < dim; ++r)
      for (int s = 0; s < dim; ++s) c(r, s) = corr[r][s];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success)
    throw ValidationError(what + " correlation matrix is not positive definite");
  return llt.matrixL();
}

std::vector<double> draw_mvn(Rng& rng, const std::vector<double>& sd,
                             const Eigen::MatrixXd& corr_l) {
  const int dim = static_cast<int>(sd.size());
  Eigen::VectorXd z(dim);
  for (int k = 0; k < dim; ++k) z[k] = rng.normal();
  Eigen::VectorXd v = corr_l * z;
  std::vector<double> out(dim);
  for (int k = 0; k < dim; ++k) out[k] = sd[k] * v[k];
  return out;
}

}  // namespace

void SimulationDesign::validate() const {
  if (n_patients < 1) throw ValidationError("simulation needs at least one patient");
  if (t_max <= 0.0) throw ValidationError("administrative censoring time must be positive");
  if (obs_interval <= 0.0) throw ValidationError("observation interval must be positive");
  if (cluster_probs.size() != 4)
    throw ValidationError("cluster-count distribution needs probabilities for 1..4");
  double total = 0.0;
  for (double p : cluster_probs) {
    if (p < 0.0) throw ValidationError("cluster-count probabilities must be nonnegative");
    total += p;
  }
  if (total <= 0.0) throw ValidationError("cluster-count probabilities sum to zero");
  if (sigma < 0.0) throw ValidationError("residual scale must be nonnegative");
  spec.validate();
  if (spec.mode == HierarchyMode::kClusterAbovePatient && n_groups < 1)
    throw ValidationError("above-patient simulation needs n_groups >= 1");
}

std::pair<double, int> invert_survival(const std::function<double(double)>& cum_hazard,
                                       double u, double t_max) {
  const double target = -std::log(u);
  // monotonicity spot check
  double prev = 0.0;
  for (double f : {0.25, 0.5, 0.75, 1.0}) {
    const double h = cum_hazard(f * t_max);
    if (h < prev - 1e-9)
      throw NumericalError("cumulative hazard decreased between " +
                           std::to_string((f - 0.25) * t_max) + " and " +
                           std::to_string(f * t_max));
    prev = h;
  }
  if (cum_hazard(t_max) < target) return {t_max, 0};
  double lo = 0.0, hi = t_max;
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (cum_hazard(mid) < target ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), 1};
}

SimulationResult simulate_dataset(const SimulationDesign& design, std::uint64_t seed) {
  design.validate();
  const ModelSpec& spec = design.spec;
  const bool below = spec.mode == HierarchyMode::kClusterBelowPatient;
  const bool above = spec.mode == HierarchyMode::kClusterAbovePatient;

  auto lf = parse_formula(spec.longitudinal_formula);
  auto ef = parse_formula(spec.event_formula);
  std::vector<Term> v_terms;
  for (const auto& t : ef.fixed)
    if (!t.factors.empty()) v_terms.push_back(t);
  std::vector<Term> z_terms, w_terms;
  for (const auto& block : lf.random) {
    if (block.level == "patient") z_terms = block.terms;
    if (block.level == (above ? "group" : "cluster")) w_terms = block.terms;
  }

  if (design.beta.size() != lf.fixed.size())
    throw ValidationError("beta truth length does not match the fixed terms");
  if (design.gamma.size() != v_terms.size())
    throw ValidationError("gamma truth length does not match the event terms");
  if (design.alpha.size() != spec.association.size() + (spec.shared_re ? 1 : 0) &&
      design.alpha.size() != spec.association.size())
    throw ValidationError("alpha truth length does not match the association terms");
  if (design.sd_b.size() != z_terms.size())
    throw ValidationError("sd_b truth length does not match the patient-level terms");
  if (design.sd_u.size() != w_terms.size())
    throw ValidationError("sd_u truth length does not match the cluster/group-level terms");

  std::map<std::string, int> long_idx, event_idx;
  for (std::size_t c = 0; c < design.long_covariates.size(); ++c)
    long_idx[design.long_covariates[c].name] = static_cast<int>(c);
  for (std::size_t c = 0; c < design.event_covariates.size(); ++c)
    event_idx[design.event_covariates[c].name] = static_cast<int>(c);

  const auto lb = corr_cholesky(design.corr_b, static_cast<int>(z_terms.size()), "patient");
  const auto lu = corr_cholesky(design.corr_u, static_cast<int>(w_terms.size()),
                                above ? "group" : "cluster");

  auto h0 = [&](double t) {
    if (design.baseline == SimulationDesign::Baseline::kConstant) return design.baseline_rate;
    return design.weibull_scale * design.weibull_shape *
           std::pow(t, design.weibull_shape - 1.0);
  };
  const auto fine = QuadratureRule::gauss_legendre(60);

  auto draw_covs = [](Rng& rng, const std::vector<CovariateGen>& gens) {
    std::vector<double> out;
    out.reserve(gens.size());
    for (const auto& g : gens)
      out.push_back(g.kind == CovariateGen::Kind::kBinary
                        ? (rng.uniform() < g.p ? 1.0 : 0.0)
                        : g.mean + g.sd * rng.normal());
    return out;
  };

  // group-level draws (above-patient mode)
  nlohmann::json truth;
  std::vector<std::vector<double>> group_re(std::max(design.n_groups, 0));
  std::vector<double> group_delta(std::max(design.n_groups, 0), 0.0);
  for (int l = 0; l < design.n_groups; ++l) {
    Rng rng(seed, 500 + static_cast<std::uint64_t>(l));
    if (above && !w_terms.empty()) group_re[l] = draw_mvn(rng, design.sd_u, lu);
    if (spec.frailty) group_delta[l] = design.sigma_delta * rng.normal();
  }

  LongTable lt;
  EventTable et;
  for (const auto& g : design.long_covariates) lt.covariate_names.push_back(g.name);
  for (const auto& g : design.event_covariates) et.covariate_names.push_back(g.name);
  et.has_group = above;

  truth["patients"] = nlohmann::json::array();
  for (int i = 0; i < design.n_patients; ++i) {
    Rng rng(seed, 1000 + static_cast<std::uint64_t>(i));
    char pid[16];
    std::snprintf(pid, sizeof(pid), "p%04d", i + 1);

    const auto lcovs = draw_covs(rng, design.long_covariates);
    const auto ecovs = draw_covs(rng, design.event_covariates);
    const int group = above ? static_cast<int>(rng.below(design.n_groups)) : -1;

    int n_clusters = 1;
    if (below) {
      double mass = 0.0;
      for (double p : design.cluster_probs) mass += p;
      double u = rng.uniform() * mass;
      for (int c = 0; c < 4; ++c) {
        u -= design.cluster_probs[c];
        if (u <= 0.0) {
          n_clusters = c + 1;
          break;
        }
      }
    }

    const auto b = draw_mvn(rng, design.sd_b, lb);
    std::vector<std::vector<double>> u_draws(n_clusters);
    for (int j = 0; j < n_clusters; ++j)
      u_draws[j] = below ? draw_mvn(rng, design.sd_u, lu)
                         : (above && !w_terms.empty() ? group_re[group] : std::vector<double>{});

    auto mu = [&](int j, double t, int deriv) {
      double v = eval_terms(lf.fixed, design.beta, lcovs, long_idx, t, deriv);
      if (!z_terms.empty()) v += eval_terms(z_terms, b, lcovs, long_idx, t, deriv);
      if (!u_draws[j].empty()) v += eval_terms(w_terms, u_draws[j], lcovs, long_idx, t, deriv);
      return v;
    };

    auto association = [&](double t) {
      if (spec.shared_re) return design.alpha[0] * u_draws[0][0];
      double total = 0.0;
      for (std::size_t q = 0; q < spec.association.size(); ++q) {
        const auto& a = spec.association[q];
        std::vector<double> values(n_clusters);
        for (int j = 0; j < n_clusters; ++j) {
          switch (a.functional) {
            case Functional::kValue: values[j] = mu(j, t, 0); break;
            case Functional::kSlope: values[j] = mu(j, t, 1); break;
            case Functional::kAuc:
              values[j] = t == 0.0 ? 0.0
                                   : fine.integrate(t, [&](double s) { return mu(j, s, 0); });
              break;
          }
        }
        total += design.alpha[q] * summarize(std::move(values), a.summary);
      }
      return total;
    };

    auto log_extra = [&](double t) {
      double v = eval_terms(v_terms, design.gamma, ecovs, event_idx, t, 0);
      if (!spec.association.empty() || spec.shared_re) v += association(t);
      if (spec.frailty) v += group_delta[group];
      return v;
    };
    auto cum_hazard = [&](double t) {
      if (t == 0.0) return 0.0;
      return fine.integrate(t, [&](double s) { return h0(s) * std::exp(log_extra(s)); });
    };

    const double u_event = rng.uniform();
    auto [event_time, status] = invert_survival(cum_hazard, u_event, design.t_max);

    EventRecord er;
    er.patient_id = pid;
    er.event_time = event_time;
    er.status = status;
    if (above) er.group_id = "g" + std::to_string(group + 1);
    er.covariates = ecovs;
    et.rows.push_back(er);

    nlohmann::json pt;
    pt["id"] = pid;
    pt["b"] = b;
    pt["u"] = u_draws;
    pt["event_time"] = event_time;
    pt["status"] = status;
    if (above) pt["group"] = group;

    for (int j = 0; j < n_clusters; ++j) {
      for (double t = 0.0; t <= event_time; t += design.obs_interval) {
        double at = t;
        if (t > 0.0 && design.obs_jitter > 0.0)
          at += rng.uniform(-design.obs_jitter, design.obs_jitter);
        at = std::clamp(at, 0.0, event_time);
        LongitudinalRecord rec;
        rec.patient_id = pid;
        if (below) rec.cluster_id = std::string(pid) + "_c" + std::to_string(j + 1);
        rec.time = at;
        rec.value = mu(j, at, 0) + design.sigma * rng.normal();
        rec.covariates = lcovs;
        lt.rows.push_back(rec);
      }
    }
    truth["patients"].push_back(std::move(pt));
  }

  if (design.n_groups > 0) {
    truth["group_delta"] = group_delta;
    if (above && !w_terms.empty()) truth["group_re"] = group_re;
  }
  truth["design"] = design.to_json();
  truth["seed"] = seed;

  SimulationResult out;
  out.data = build_dataset(lt, et, spec.mode);
  out.truth = std::move(truth);
  return out;
}

SimulationDesign SimulationDesign::from_json(const nlohmann::json& j) {
  SimulationDesign d;
  d.n_patients = j.value("n_patients", d.n_patients);
  d.cluster_probs = j.value("cluster_probs", d.cluster_probs);
  d.obs_interval = j.value("obs_interval", d.obs_interval);
  d.obs_jitter = j.value("obs_jitter", d.obs_jitter);
  d.t_max = j.value("t_max", d.t_max);
  d.n_groups = j.value("n_groups", d.n_groups);
  d.spec = ModelSpec::from_json(j.at("spec"));
  auto read_covs = [](const nlohmann::json& arr) {
    std::vector<CovariateGen> out;
    for (const auto& c : arr) {
      CovariateGen g;
      g.name = c.at("name").get<std::string>();
      g.kind = c.value("kind", CovariateGen::Kind::kBinary);
      g.p = c.value("p", g.p);
      g.mean = c.value("mean", g.mean);
      g.sd = c.value("sd", g.sd);
      out.push_back(g);
    }
    return out;
  };
  if (j.contains("long_covariates")) d.long_covariates = read_covs(j["long_covariates"]);
  if (j.contains("event_covariates")) d.event_covariates = read_covs(j["event_covariates"]);
  d.beta = j.value("beta", d.beta);
  d.gamma = j.value("gamma", d.gamma);
  d.alpha = j.value("alpha", d.alpha);
  d.sigma = j.value("sigma", d.sigma);
  d.sd_b = j.value("sd_b", d.sd_b);
  d.sd_u = j.value("sd_u", d.sd_u);
  d.corr_b = j.value("corr_b", d.corr_b);
  d.corr_u = j.value("corr_u", d.corr_u);
  d.sigma_delta = j.value("sigma_delta", d.sigma_delta);
  d.baseline = j.value("baseline", d.baseline);
  d.baseline_rate = j.value("baseline_rate", d.baseline_rate);
  d.weibull_shape = j.value("weibull_shape", d.weibull_shape);
  d.weibull_scale = j.value("weibull_scale", d.weibull_scale);
  return d;
}

nlohmann::json SimulationDesign::to_json() const {
  nlohmann::json j;
  j["n_patients"] = n_patients;
  j["cluster_probs"] = cluster_probs;
  j["obs_interval"] = obs_interval;
  j["obs_jitter"] = obs_jitter;
  j["t_max"] = t_max;
  j["n_groups"] = n_groups;
  j["spec"] = spec.to_json();
  auto write_covs = [](const std::vector<CovariateGen>& gens) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& g : gens) {
      nlohmann::json c;
      c["name"] = g.name;
      c["kind"] = g.kind;
      c["p"] = g.p;
      c["mean"] = g.mean;
      c["sd"] = g.sd;
      arr.push_back(c);
    }
    return arr;
  };
  j["long_covariates"] = write_covs(long_covariates);
  j["event_covariates"] = write_covs(event_covariates);
  j["beta"] = beta;
  j["gamma"] = gamma;
  j["alpha"] = alpha;
  j["sigma"] = sigma;
  j["sd_b"] = sd_b;
  j["sd_u"] = sd_u;
  j["corr_b"] = corr_b;
  j["corr_u"] = corr_u;
  j["sigma_delta"] = sigma_delta;
  j["baseline"] = baseline;
  j["baseline_rate"] = baseline_rate;
  j["weibull_shape"] = weibull_shape;
  j["weibull_scale"] = weibull_scale;
  return j;
}

}  // namespace hjm
