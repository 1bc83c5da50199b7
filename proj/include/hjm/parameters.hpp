#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hjm/autodiff.hpp"
#include "hjm/design.hpp"

namespace hjm {

// Lower-triangular Cholesky factor of a correlation matrix together with the
// bookkeeping the prior needs: the log Jacobian of the unconstrained
// (canonical partial correlation) transform and the LKJ(1) log density.
template <class T>
struct CorrChol {
  int dim = 0;
  std::vector<T> lower;  // row-major, dim*dim, upper part zero
  T log_jacobian{};
  T lkj_logpdf{};

  const T& at(int r, int c) const { return lower[r * dim + c]; }
};

// z = tanh(y) canonical partial correlations -> Cholesky factor.
template <class T>
CorrChol<T> corr_cholesky_transform(std::span<const T> y, int dim) {
  using std::log;
  using std::sqrt;
  using ad::square;
  CorrChol<T> out;
  out.dim = dim;
  out.lower.assign(static_cast<std::size_t>(dim) * dim, T{});
  out.log_jacobian = 0.0;
  out.lkj_logpdf = 0.0;
  std::size_t k = 0;
  for (int r = 0; r < dim; ++r) {
    T sum_sq = 0.0;
    for (int c = 0; c < r; ++c) {
      const T z = tanh(y[k]);
      const T rem = 1.0 - sum_sq;
      const T l = z * sqrt(rem);
      out.lower[r * dim + c] = l;
      out.log_jacobian = out.log_jacobian + 0.5 * log(rem) + log(1.0 - square(z));
      sum_sq = sum_sq + square(l);
      ++k;
    }
    out.lower[r * dim + r] = sqrt(1.0 - sum_sq);
    if (r > 0) out.lkj_logpdf = out.lkj_logpdf + (dim - r - 1) * log(out.lower[r * dim + r]);
  }
  return out;
}

// One random-effect covariance block on the constrained side:
// Sigma = diag(sd) * Lcorr * Lcorr' * diag(sd).
template <class T>
struct ReBlock {
  int dim = 0;
  std::vector<T> sd;
  CorrChol<T> corr;

  bool empty() const { return dim == 0; }

  // log N(v | 0, Sigma) via forward substitution against diag(sd) * Lcorr.
  T mvn_logpdf(std::span<const T> v) const {
    using std::log;
    T quad = T(0.0);
    T logdet = T(0.0);
    std::vector<T> w(dim);
    for (int r = 0; r < dim; ++r) {
      T acc = v[r];
      for (int c = 0; c < r; ++c) acc = acc - sd[r] * corr.at(r, c) * w[c];
      const T diag = sd[r] * corr.at(r, r);
      w[r] = acc / diag;
      quad = quad + ad::square(w[r]);
      logdet = logdet + log(diag);
    }
    return -0.5 * quad - logdet - 0.5 * dim * std::log(2.0 * M_PI);
  }

  // log N(v | 0, Sigma) starting from raw doubles (prediction path).
  T mvn_logpdf_raw(std::span<const double> v) const {
    std::vector<T> tv(v.begin(), v.end());
    return mvn_logpdf(std::span<const T>(tv));
  }
};

// View of one unconstrained point as the model's constrained blocks.
template <class T>
struct Params {
  std::span<const T> beta, gamma, alpha, lambda;
  T sigma{};
  ReBlock<T> re_b;   // patient level
  ReBlock<T> re_u;   // cluster level (below) -- also used for the group level (above)
  std::span<const T> b;      // n_patients * d_b
  std::span<const T> u;      // clusters * d_u (below) or groups * d_c (above)
  std::span<const T> delta;  // frailties, above mode
  T sigma_delta{};
  bool has_frailty = false;

  std::span<const T> b_i(int i) const { return b.subspan(i * re_b.dim, re_b.dim); }
  std::span<const T> u_j(int global_cluster) const {
    return u.subspan(global_cluster * re_u.dim, re_u.dim);
  }
};

// Unconstrained parameter vector layout. Offsets are fixed by the design:
// beta, gamma, alpha, lambda, log sigma, patient-RE scale block, level-3
// scale block, frailty scale, then the random effects themselves.
class ParamLayout {
 public:
  ParamLayout() = default;
  explicit ParamLayout(const Design& design);

  int size() const { return total_; }
  int n_beta() const { return n_beta_; }
  int n_gamma() const { return n_gamma_; }
  int n_alpha() const { return n_alpha_; }
  int n_lambda() const { return n_lambda_; }
  int d_b() const { return d_b_; }
  int d_u() const { return d_u_; }
  bool frailty() const { return frailty_; }

  int off_beta() const { return 0; }
  int off_gamma() const { return off_gamma_; }
  int off_alpha() const { return off_alpha_; }
  int off_lambda() const { return off_lambda_; }
  int off_log_sigma() const { return off_log_sigma_; }
  int off_log_sd_b() const { return off_log_sd_b_; }
  int off_chol_b() const { return off_chol_b_; }
  int off_log_sd_u() const { return off_log_sd_u_; }
  int off_chol_u() const { return off_chol_u_; }
  int off_log_sigma_delta() const { return off_log_sigma_delta_; }
  int off_b() const { return off_b_; }
  int off_u() const { return off_u_; }
  int off_delta() const { return off_delta_; }

  template <class T>
  Params<T> view(std::span<const T> x) const {
    using std::exp;
    Params<T> p;
    p.beta = x.subspan(0, n_beta_);
    p.gamma = x.subspan(off_gamma_, n_gamma_);
    p.alpha = x.subspan(off_alpha_, n_alpha_);
    p.lambda = x.subspan(off_lambda_, n_lambda_);
    p.sigma = exp(x[off_log_sigma_]);
    p.re_b.dim = d_b_;
    for (int k = 0; k < d_b_; ++k) p.re_b.sd.push_back(exp(x[off_log_sd_b_ + k]));
    p.re_b.corr = corr_cholesky_transform(x.subspan(off_chol_b_, n_chol_b_), d_b_);
    p.re_u.dim = d_u_;
    for (int k = 0; k < d_u_; ++k) p.re_u.sd.push_back(exp(x[off_log_sd_u_ + k]));
    p.re_u.corr = corr_cholesky_transform(x.subspan(off_chol_u_, n_chol_u_), d_u_);
    p.has_frailty = frailty_;
    if (frailty_) p.sigma_delta = exp(x[off_log_sigma_delta_]);
    p.b = x.subspan(off_b_, static_cast<std::size_t>(n_patients_) * d_b_);
    p.u = x.subspan(off_u_, static_cast<std::size_t>(n_level3_) * d_u_);
    if (frailty_) p.delta = x.subspan(off_delta_, n_groups_);
    return p;
  }

  // Names and values of the constrained (still standardized) parameters the
  // draws matrix stores: one entry per unconstrained coordinate, scale and
  // correlation entries mapped to their constrained images.
  const std::vector<std::string>& names() const { return names_; }
  std::vector<double> constrain(std::span<const double> x) const;

  int n_patients() const { return n_patients_; }
  int n_level3() const { return n_level3_; }
  int n_groups() const { return n_groups_; }

 private:
  int n_beta_ = 0, n_gamma_ = 0, n_alpha_ = 0, n_lambda_ = 0;
  int d_b_ = 0, d_u_ = 0;
  int n_chol_b_ = 0, n_chol_u_ = 0;
  int n_patients_ = 0, n_level3_ = 0, n_groups_ = 0;
  bool frailty_ = false;
  int off_gamma_ = 0, off_alpha_ = 0, off_lambda_ = 0, off_log_sigma_ = 0;
  int off_log_sd_b_ = 0, off_chol_b_ = 0, off_log_sd_u_ = 0, off_chol_u_ = 0;
  int off_log_sigma_delta_ = 0, off_b_ = 0, off_u_ = 0, off_delta_ = 0;
  int total_ = 0;
  std::vector<std::string> names_;
};

}  // namespace hjm
