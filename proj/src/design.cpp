#include "hjm/design.hpp"

#include <algorithm>
#include <cmath>

#include "hjm/error.hpp"

namespace hjm {

namespace {

double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

double sample_sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

std::vector<Design::CompiledTerm> Design::compile_terms(const std::vector<Term>& terms,
                                                        const std::vector<std::string>& columns,
                                                        const std::string& what) const {
  std::vector<CompiledTerm> out;
  for (const auto& term : terms) {
    CompiledTerm ct;
    for (const auto& f : term.factors) {
      CompiledFactor cf;
      cf.kind = f.kind;
      cf.power = f.power;
      cf.poly_index = f.poly_index;
      if (f.kind == Factor::Kind::kCovariate) {
        auto it = std::find(columns.begin(), columns.end(), f.column);
        if (it == columns.end())
          throw SchemaError(what + " formula references unknown column \"" + f.column + "\"");
        cf.cov_index = static_cast<int>(it - columns.begin());
      }
      ct.factors.push_back(cf);
    }
    out.push_back(std::move(ct));
  }
  return out;
}

void Design::compile(const Dataset& data, const ModelSpec& spec) {
  data_ = &data;
  spec_ = spec;
  spec_.validate();

  const ParsedFormula lf = parse_formula(spec.longitudinal_formula);
  x_terms_ = lf.fixed;
  if (x_terms_.empty()) throw DomainError("longitudinal formula has no fixed-effect terms");
  for (const auto& block : lf.random) {
    if (block.level == "patient") {
      if (!z_terms_.empty()) throw DomainError("more than one (terms | patient) block");
      z_terms_ = block.terms;
    } else {
      if (!re3_terms_.empty()) throw DomainError("more than one cluster/group random-effect block");
      re3_terms_ = block.terms;
    }
  }
  if (spec.shared_re && (re3_terms_.empty() || !re3_terms_[0].factors.empty()))
    throw DomainError("shared_re requires the group block to start with an intercept term");

  const ParsedFormula ef =
      spec.event_formula.empty() ? ParsedFormula{} : parse_formula(spec.event_formula);
  if (!ef.random.empty()) throw DomainError("event formula cannot contain random effects");
  // no intercept in the event design: the baseline spline absorbs it
  for (const auto& t : ef.fixed) {
    if (t.factors.empty()) continue;
    for (const auto& f : t.factors)
      if (f.time_dependent())
        throw DomainError("time-dependent terms are not supported in the event formula");
    v_terms_.push_back(t);
  }

  for (const auto& t : x_terms_) x_names_.push_back(t.name());
  for (const auto& t : v_terms_) v_names_.push_back(t.name());

  poly_degree_ = std::max({max_poly_degree(x_terms_), max_poly_degree(z_terms_),
                           max_poly_degree(re3_terms_)});
  if (poly_degree_ > 8) throw DomainError("poly(time, k) supports k up to 8");

  cx_ = compile_terms(x_terms_, data.long_covariate_names, "longitudinal");
  cz_ = compile_terms(z_terms_, data.long_covariate_names, "longitudinal");
  cre3_ = compile_terms(re3_terms_, data.long_covariate_names, "longitudinal");
  cv_ = compile_terms(v_terms_, data.event_covariate_names, "event");

  rule_ = spec.quadrature_nodes == 15 ? QuadratureRule::gauss_kronrod_15()
                                      : QuadratureRule::gauss_legendre(spec.quadrature_nodes);

  cluster_base_.resize(data.n_patients());
  int base = 0;
  for (int i = 0; i < data.n_patients(); ++i) {
    cluster_base_[i] = base;
    base += static_cast<int>(data.patients[i].clusters.size());
  }
}

void Design::fit_bases() {
  const Dataset& data = *data_;
  const double t_max = data.max_event_time();

  // Interior knots at quantiles of the uncensored event times, falling back
  // to all event/censoring times.
  std::vector<double> knot_source;
  for (const auto& p : data.patients)
    if (p.status == 1) knot_source.push_back(p.event_time);
  if (static_cast<int>(knot_source.size()) < spec_.baseline_df) {
    knot_source.clear();
    for (const auto& p : data.patients) knot_source.push_back(p.event_time);
  }
  baseline_ =
      BSplineBasis::from_quantiles(knot_source, spec_.baseline_df, t_max, spec_.spline_degree);

  if (poly_degree_ > 0) poly_ = OrthoPolyBasis::fit(data.obs_time, poly_degree_);
}

void Design::load_bases(const nlohmann::json& j) {
  const auto& s = j.at("spline");
  baseline_ = BSplineBasis(s.at("degree").get<int>(),
                           s.at("knots").get<std::vector<double>>(), s.at("t_max").get<double>());
  if (poly_degree_ > 0) {
    const auto& p = j.at("poly");
    poly_ = OrthoPolyBasis(p.at("degree").get<int>(), p.at("alpha").get<std::vector<double>>(),
                           p.at("norm2").get<std::vector<double>>());
    if (poly_.degree() < poly_degree_)
      throw DomainError("serialized polynomial basis has lower degree than the formula needs");
    poly_degree_ = poly_.degree();
  }
  const auto& st = j.at("standardization");
  x_mean_ = st.at("x_mean").get<std::vector<double>>();
  x_scale_ = st.at("x_scale").get<std::vector<double>>();
  v_mean_ = st.at("v_mean").get<std::vector<double>>();
  v_scale_ = st.at("v_scale").get<std::vector<double>>();
  y_mean_ = st.at("y_mean").get<double>();
  y_scale_ = st.at("y_scale").get<double>();
  if (x_mean_.size() != x_terms_.size() || v_mean_.size() != v_terms_.size())
    throw DomainError("serialized standardization does not match the formulas");
}

nlohmann::json Design::serialize_bases() const {
  nlohmann::json j;
  j["spline"] = {{"degree", baseline_.degree()},
                 {"knots", baseline_.interior_knots()},
                 {"t_max", baseline_.t_max()}};
  if (poly_degree_ > 0)
    j["poly"] = {{"degree", poly_.degree()},
                 {"alpha", poly_.recurrence_centers()},
                 {"norm2", poly_.recurrence_norms()}};
  j["standardization"] = {{"x_mean", x_mean_}, {"x_scale", x_scale_}, {"v_mean", v_mean_},
                          {"v_scale", v_scale_}, {"y_mean", y_mean_}, {"y_scale", y_scale_}};
  j["columns"] = {{"x", x_names_}, {"v", v_names_}};
  return j;
}

void Design::eval_terms(const std::vector<CompiledTerm>& terms, const std::vector<double>& covs,
                        double t, int deriv, double* out) const {
  double pv[8], pd[8];
  if (poly_degree_ > 0) {
    poly_.eval_into(t, 0, pv);
    if (deriv) poly_.eval_into(t, 1, pd);
  }
  for (std::size_t c = 0; c < terms.size(); ++c) {
    const auto& factors = terms[c].factors;
    if (deriv == 0) {
      double v = 1.0;
      for (const auto& f : factors) {
        switch (f.kind) {
          case Factor::Kind::kCovariate: v *= covs[f.cov_index]; break;
          case Factor::Kind::kTime: v *= t; break;
          case Factor::Kind::kTimePower: v *= std::pow(t, f.power); break;
          case Factor::Kind::kOrthoPoly: v *= pv[f.poly_index]; break;
        }
      }
      out[c] = v;
    } else {
      // product rule over the time-dependent factors
      double total = 0.0;
      for (std::size_t fi = 0; fi < factors.size(); ++fi) {
        double dv;
        switch (factors[fi].kind) {
          case Factor::Kind::kCovariate: continue;
          case Factor::Kind::kTime: dv = 1.0; break;
          case Factor::Kind::kTimePower:
            dv = factors[fi].power * std::pow(t, factors[fi].power - 1);
            break;
          case Factor::Kind::kOrthoPoly: dv = pd[factors[fi].poly_index]; break;
          default: dv = 0.0; break;
        }
        for (std::size_t gi = 0; gi < factors.size(); ++gi) {
          if (gi == fi) continue;
          const auto& g = factors[gi];
          switch (g.kind) {
            case Factor::Kind::kCovariate: dv *= covs[g.cov_index]; break;
            case Factor::Kind::kTime: dv *= t; break;
            case Factor::Kind::kTimePower: dv *= std::pow(t, g.power); break;
            case Factor::Kind::kOrthoPoly: dv *= pv[g.poly_index]; break;
          }
        }
        total += dv;
      }
      out[c] = total;
    }
  }
}

void Design::x_row(int i, int j, double t, int deriv, double* out) const {
  eval_terms(cx_, data_->cluster_covariates(i, j), t, deriv, out);
  for (int c = 0; c < n_fixed(); ++c)
    out[c] = deriv == 0 ? (out[c] - x_mean_[c]) / x_scale_[c] : out[c] / x_scale_[c];
}

void Design::z_row(int i, int j, double t, int deriv, double* out) const {
  eval_terms(cz_, data_->cluster_covariates(i, j), t, deriv, out);
}

void Design::re3_row(int i, int j, double t, int deriv, double* out) const {
  eval_terms(cre3_, data_->cluster_covariates(i, j), t, deriv, out);
}

void Design::spline_row(double t, double* out) const { baseline_.eval_into(t, out); }

std::vector<std::string> Design::patient_re_names() const {
  std::vector<std::string> out;
  for (const auto& t : z_terms_) out.push_back(t.name());
  return out;
}

std::vector<std::string> Design::level3_re_names() const {
  std::vector<std::string> out;
  for (const auto& t : re3_terms_) out.push_back(t.name());
  return out;
}

void Design::fit_standardization() {
  const Dataset& data = *data_;
  x_mean_.assign(n_fixed(), 0.0);
  x_scale_.assign(n_fixed(), 1.0);
  v_mean_.assign(n_event(), 0.0);
  v_scale_.assign(n_event(), 1.0);
  y_mean_ = 0.0;
  y_scale_ = 1.0;
  if (!spec_.standardize) return;

  const int n_obs = data.total_obs();
  std::vector<double> col(n_obs);
  std::vector<double> row(n_fixed());
  std::vector<std::vector<double>> raw(n_fixed(), std::vector<double>(n_obs));
  int k = 0;
  for (int i = 0; i < data.n_patients(); ++i)
    for (int j = 0; j < static_cast<int>(data.patients[i].clusters.size()); ++j)
      for (int obs : data.patients[i].clusters[j].obs) {
        eval_terms(cx_, data.obs_covariates[obs], data.obs_time[obs], 0, row.data());
        for (int c = 0; c < n_fixed(); ++c) raw[c][k] = row[c];
        ++k;
      }
  for (int c = 0; c < n_fixed(); ++c) {
    if (x_terms_[c].factors.empty()) continue;  // intercept
    const double m = sample_mean(raw[c]);
    const double s = sample_sd(raw[c], m);
    if (s > 1e-12) {
      x_mean_[c] = m;
      x_scale_[c] = s;
    }
  }

  std::vector<double> vrow(n_event());
  std::vector<std::vector<double>> vraw(n_event(), std::vector<double>(data.n_patients()));
  for (int i = 0; i < data.n_patients(); ++i) {
    eval_terms(cv_, data.patients[i].event_covariates, 0.0, 0, vrow.data());
    for (int c = 0; c < n_event(); ++c) vraw[c][i] = vrow[c];
  }
  for (int c = 0; c < n_event(); ++c) {
    const double m = sample_mean(vraw[c]);
    const double s = sample_sd(vraw[c], m);
    if (s > 1e-12) {
      v_mean_[c] = m;
      v_scale_[c] = s;
    }
  }

  y_mean_ = sample_mean(data.obs_value);
  const double ys = sample_sd(data.obs_value, y_mean_);
  y_scale_ = ys > 1e-12 ? ys : 1.0;
}

double Design::quad_time(int i, int m) const {
  const double upper = data_->patients[i].event_time;
  if (m == rule_.count()) return upper;
  return 0.5 * upper * (rule_.nodes[m] + 1.0);
}

double Design::quad_weight(int i, int m) const {
  return 0.5 * data_->patients[i].event_time * rule_.weights[m];
}

const double* Design::quad_spline(int i, int m) const {
  return quad_spline_.data() + (static_cast<std::size_t>(i) * (n_quad() + 1) + m) * df();
}

#define HJM_QUAD_ACCESSOR(NAME, STORE, DIM)                                                  \
  const double* Design::NAME(int i, int j, int m) const {                                    \
    return STORE.data() +                                                                    \
           (static_cast<std::size_t>(cluster_base_[i] + j) * (n_quad() + 1) + m) * (DIM);    \
  }

HJM_QUAD_ACCESSOR(quad_x, quad_x_, n_fixed())
HJM_QUAD_ACCESSOR(quad_dx, quad_dx_, n_fixed())
HJM_QUAD_ACCESSOR(quad_z, quad_z_, d_patient())
HJM_QUAD_ACCESSOR(quad_dz, quad_dz_, d_patient())
HJM_QUAD_ACCESSOR(quad_w, quad_w_, d_level3())
HJM_QUAD_ACCESSOR(quad_dw, quad_dw_, d_level3())
#undef HJM_QUAD_ACCESSOR

void Design::build_caches() {
  const Dataset& data = *data_;
  const int n_obs = data.total_obs();
  const int M1 = n_quad() + 1;
  const int C = data.total_clusters();

  y_std_.resize(n_obs);
  obs_x_.resize(static_cast<std::size_t>(n_obs) * n_fixed());
  obs_z_.resize(static_cast<std::size_t>(n_obs) * d_patient());
  obs_w_.resize(static_cast<std::size_t>(n_obs) * d_level3());
  v_rows_.resize(static_cast<std::size_t>(data.n_patients()) * n_event());
  quad_spline_.resize(static_cast<std::size_t>(data.n_patients()) * M1 * df());
  quad_x_.resize(static_cast<std::size_t>(C) * M1 * n_fixed());
  quad_dx_.resize(quad_x_.size());
  quad_z_.resize(static_cast<std::size_t>(C) * M1 * d_patient());
  quad_dz_.resize(quad_z_.size());
  quad_w_.resize(static_cast<std::size_t>(C) * M1 * d_level3());
  quad_dw_.resize(quad_w_.size());

  std::vector<double> vrow(n_event());
  for (int i = 0; i < data.n_patients(); ++i) {
    const auto& patient = data.patients[i];
    eval_terms(cv_, patient.event_covariates, 0.0, 0, vrow.data());
    for (int c = 0; c < n_event(); ++c)
      v_rows_[static_cast<std::size_t>(i) * n_event() + c] = (vrow[c] - v_mean_[c]) / v_scale_[c];

    for (int j = 0; j < static_cast<int>(patient.clusters.size()); ++j) {
      for (int k : patient.clusters[j].obs) {
        y_std_[k] = (data.obs_value[k] - y_mean_) / y_scale_;
        const double t = data.obs_time[k];
        std::vector<double> xr(n_fixed());
        eval_terms(cx_, data.obs_covariates[k], t, 0, xr.data());
        for (int c = 0; c < n_fixed(); ++c)
          obs_x_[static_cast<std::size_t>(k) * n_fixed() + c] = (xr[c] - x_mean_[c]) / x_scale_[c];
        if (d_patient() > 0)
          eval_terms(cz_, data.obs_covariates[k], t, 0,
                     obs_z_.data() + static_cast<std::size_t>(k) * d_patient());
        if (d_level3() > 0)
          eval_terms(cre3_, data.obs_covariates[k], t, 0,
                     obs_w_.data() + static_cast<std::size_t>(k) * d_level3());
      }
      for (int m = 0; m < M1; ++m) {
        const double t = quad_time(i, m);
        const std::size_t cj = static_cast<std::size_t>(cluster_base_[i] + j) * M1 + m;
        x_row(i, j, t, 0, quad_x_.data() + cj * n_fixed());
        x_row(i, j, t, 1, quad_dx_.data() + cj * n_fixed());
        if (d_patient() > 0) {
          z_row(i, j, t, 0, quad_z_.data() + cj * d_patient());
          z_row(i, j, t, 1, quad_dz_.data() + cj * d_patient());
        }
        if (d_level3() > 0) {
          re3_row(i, j, t, 0, quad_w_.data() + cj * d_level3());
          re3_row(i, j, t, 1, quad_dw_.data() + cj * d_level3());
        }
      }
    }
    for (int m = 0; m < M1; ++m)
      spline_row(quad_time(i, m),
                 quad_spline_.data() + (static_cast<std::size_t>(i) * M1 + m) * df());
  }
}

Design Design::build(const Dataset& data, const ModelSpec& spec) {
  Design d;
  d.compile(data, spec);
  d.fit_bases();
  d.fit_standardization();
  d.build_caches();
  return d;
}

Design Design::from_artifact(const Dataset& data, const ModelSpec& spec,
                             const nlohmann::json& bases) {
  Design d;
  d.compile(data, spec);
  d.load_bases(bases);
  d.build_caches();
  return d;
}

}  // namespace hjm
