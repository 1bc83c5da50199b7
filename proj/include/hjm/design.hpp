#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hjm/bspline.hpp"
#include "hjm/dataset.hpp"
#include "hjm/formula.hpp"
#include "hjm/model_spec.hpp"
#include "hjm/orthopoly.hpp"
#include "hjm/quadrature.hpp"

namespace hjm {

// Compiled design: formulas resolved against the dataset's covariate
// columns, bases fitted (B-spline baseline from event-time quantiles,
// orthogonal polynomials from the pooled longitudinal times), optional
// standardization constants, and cached design rows at every observation
// time and at the fixed quadrature nodes of each patient's follow-up.
// Immutable after construction.
class Design {
 public:
  static Design build(const Dataset& data, const ModelSpec& spec);

  // Rebuild against (possibly new) data while reusing the bases and
  // standardization constants of a fitted model.
  static Design from_artifact(const Dataset& data, const ModelSpec& spec,
                              const nlohmann::json& bases);
  nlohmann::json serialize_bases() const;

  const Dataset& data() const { return *data_; }
  const ModelSpec& spec() const { return spec_; }
  const BSplineBasis& baseline() const { return baseline_; }
  const OrthoPolyBasis& poly() const { return poly_; }
  const QuadratureRule& rule() const { return rule_; }

  int n_fixed() const { return static_cast<int>(x_terms_.size()); }
  int n_event() const { return static_cast<int>(v_terms_.size()); }
  int d_patient() const { return static_cast<int>(z_terms_.size()); }
  // Cluster-level design in below-patient mode, group-level in above mode.
  int d_level3() const { return static_cast<int>(re3_terms_.size()); }
  int df() const { return baseline_.df(); }
  double t_max() const { return baseline_.t_max(); }

  const std::vector<std::string>& fixed_names() const { return x_names_; }
  const std::vector<std::string>& event_names() const { return v_names_; }
  std::vector<std::string> patient_re_names() const;
  std::vector<std::string> level3_re_names() const;
  double y_mean() const { return y_mean_; }
  double y_scale() const { return y_scale_; }
  const std::vector<double>& fixed_means() const { return x_mean_; }
  const std::vector<double>& fixed_scales() const { return x_scale_; }
  const std::vector<double>& event_scales() const { return v_scale_; }

  // --- on-demand rows (standardization applied; deriv 0 or 1) ---
  void x_row(int i, int j, double t, int deriv, double* out) const;
  void z_row(int i, int j, double t, int deriv, double* out) const;
  void re3_row(int i, int j, double t, int deriv, double* out) const;
  void spline_row(double t, double* out) const;
  const double* v_row(int i) const { return v_rows_.data() + i * n_event(); }

  double y_std(int k) const { return y_std_[k]; }

  // --- cached rows for the fitting hot path ---
  // Longitudinal observation k (global index).
  const double* obs_x(int k) const { return obs_x_.data() + k * n_fixed(); }
  const double* obs_z(int k) const { return obs_z_.data() + k * d_patient(); }
  const double* obs_w(int k) const { return obs_w_.data() + k * d_level3(); }

  // Quadrature node m of patient i; m == n_quad() addresses t = T_i itself.
  int n_quad() const { return rule_.count(); }
  double quad_time(int i, int m) const;
  double quad_weight(int i, int m) const;  // scaled GK weight (T_i / 2) w_m
  const double* quad_spline(int i, int m) const;
  const double* quad_x(int i, int j, int m) const;
  const double* quad_dx(int i, int j, int m) const;
  const double* quad_z(int i, int j, int m) const;
  const double* quad_dz(int i, int j, int m) const;
  const double* quad_w(int i, int j, int m) const;
  const double* quad_dw(int i, int j, int m) const;

  int cluster_base(int i) const { return cluster_base_[i]; }

 private:
  Design() = default;
  void compile(const Dataset& data, const ModelSpec& spec);
  void fit_bases();
  void load_bases(const nlohmann::json& bases);
  void fit_standardization();
  void build_caches();

  struct CompiledFactor {
    Factor::Kind kind;
    int cov_index = -1;
    int power = 1;
    int poly_index = 0;
  };
  struct CompiledTerm {
    std::vector<CompiledFactor> factors;
  };

  std::vector<CompiledTerm> compile_terms(const std::vector<Term>& terms,
                                          const std::vector<std::string>& columns,
                                          const std::string& what) const;
  void eval_terms(const std::vector<CompiledTerm>& terms, const std::vector<double>& covs,
                  double t, int deriv, double* out) const;

  const Dataset* data_ = nullptr;
  ModelSpec spec_;
  BSplineBasis baseline_;
  OrthoPolyBasis poly_;
  int poly_degree_ = 0;
  QuadratureRule rule_;

  std::vector<Term> x_terms_, z_terms_, re3_terms_, v_terms_;
  std::vector<CompiledTerm> cx_, cz_, cre3_, cv_;
  std::vector<std::string> x_names_, v_names_;
  std::vector<double> x_mean_, x_scale_, v_mean_, v_scale_;
  double y_mean_ = 0.0, y_scale_ = 1.0;

  std::vector<double> y_std_;
  std::vector<double> obs_x_, obs_z_, obs_w_;
  std::vector<double> v_rows_;
  std::vector<double> quad_spline_, quad_x_, quad_dx_, quad_z_, quad_dz_, quad_w_, quad_dw_;
  std::vector<int> cluster_base_;
};

}  // namespace hjm
