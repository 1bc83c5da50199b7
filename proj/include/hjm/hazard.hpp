#pragma once

#include <span>
#include <vector>

#include "hjm/design.hpp"
#include "hjm/model.hpp"
#include "hjm/parameters.hpp"

namespace hjm {

template <class T>
struct LogPosteriorParts {
  T longitudinal{};
  T event{};
  T ranef{};
  T prior{};
  T total{};
};

namespace detail {

template <class T>
T normal_lpdf(const T& x, double scale) {
  return -0.5 * std::log(2.0 * M_PI) - std::log(scale) - ad::square(x) / (2.0 * scale * scale);
}

template <class T>
T cauchy_lpdf(const T& x, double scale) {
  using std::log1p;
  return -std::log(M_PI * scale) - log1p(ad::square(x / scale));
}

// Cached-row linear predictor at quadrature node m of patient i, cluster j.
// deriv selects the time-derivative rows (slope functional).
template <class T>
T eta_cached(const Design& dz, const Params<T>& p, int i, int j, int m, bool deriv) {
  const int jg = dz.cluster_base(i) + j;
  const int l3 = dz.spec().mode == HierarchyMode::kClusterAbovePatient
                     ? dz.data().patients[i].group_index
                     : jg;
  T v = ad::dot(std::span<const double>(deriv ? dz.quad_dx(i, j, m) : dz.quad_x(i, j, m),
                                        dz.n_fixed()),
                p.beta);
  if (dz.d_patient() > 0)
    v = v + ad::dot(std::span<const double>(deriv ? dz.quad_dz(i, j, m) : dz.quad_z(i, j, m),
                                            dz.d_patient()),
                    p.b_i(i));
  if (dz.d_level3() > 0)
    v = v + ad::dot(std::span<const double>(deriv ? dz.quad_dw(i, j, m) : dz.quad_w(i, j, m),
                                            dz.d_level3()),
                    p.u_j(l3));
  return v;
}

template <class T>
T association_cached(const Design& dz, const Params<T>& p, const ModelEval<T>& slow, int i,
                     int m) {
  const ModelSpec& spec = dz.spec();
  if (spec.shared_re) return p.alpha[0] * p.u_j(dz.data().patients[i].group_index)[0];
  T total = 0.0;
  for (int q = 0; q < spec.q(); ++q) {
    const auto& a = spec.association[q];
    if (a.functional == Functional::kAuc) {
      // the running integral has no cached rows; fall back to quadrature
      // over the on-demand path
      const double t = dz.quad_time(i, m);
      if (spec.mode == HierarchyMode::kClusterBelowPatient) {
        std::vector<T> values;
        const int n_clusters = static_cast<int>(dz.data().patients[i].clusters.size());
        for (int j = 0; j < n_clusters; ++j) values.push_back(slow.mu_integral(i, j, t));
        total = total + p.alpha[q] * summarize(std::move(values), a.summary);
      } else {
        total = total + p.alpha[q] * slow.mu_integral(i, 0, t);
      }
      continue;
    }
    const bool deriv = a.functional == Functional::kSlope;
    if (spec.mode == HierarchyMode::kClusterBelowPatient) {
      const int n_clusters = static_cast<int>(dz.data().patients[i].clusters.size());
      std::vector<T> values;
      values.reserve(n_clusters);
      for (int j = 0; j < n_clusters; ++j) values.push_back(eta_cached(dz, p, i, j, m, deriv));
      total = total + p.alpha[q] * summarize(std::move(values), a.summary);
    } else {
      total = total + p.alpha[q] * eta_cached(dz, p, i, 0, m, deriv);
    }
  }
  return total;
}

template <class T>
T log_hazard_cached(const Design& dz, const Params<T>& p, const ModelEval<T>& slow, int i,
                    int m) {
  T lh = ad::dot(std::span<const double>(dz.quad_spline(i, m), dz.df()), p.lambda);
  if (dz.n_event() > 0)
    lh = lh + ad::dot(std::span<const double>(dz.v_row(i), dz.n_event()), p.gamma);
  if (dz.spec().q() > 0) lh = lh + association_cached(dz, p, slow, i, m);
  if (p.has_frailty) lh = lh + p.delta[dz.data().patients[i].group_index];
  return lh;
}

}  // namespace detail

// sum_ijk log Normal(y_ijk | mu_ij(t_ijk), sigma^2), with per-patient terms
// reduced in a cluster-order-insensitive order.
template <class T>
T longitudinal_loglik(const Design& dz, const Params<T>& p) {
  using std::log;
  const Dataset& data = dz.data();
  T sum_sq = 0.0;
  for (int i = 0; i < data.n_patients(); ++i) {
    std::vector<T> terms;
    for (int j = 0; j < static_cast<int>(data.patients[i].clusters.size()); ++j) {
      const int jg = dz.cluster_base(i) + j;
      const int l3 = dz.spec().mode == HierarchyMode::kClusterAbovePatient
                         ? data.patients[i].group_index
                         : jg;
      for (int k : data.patients[i].clusters[j].obs) {
        T m = ad::dot(std::span<const double>(dz.obs_x(k), dz.n_fixed()), p.beta);
        if (dz.d_patient() > 0)
          m = m + ad::dot(std::span<const double>(dz.obs_z(k), dz.d_patient()), p.b_i(i));
        if (dz.d_level3() > 0)
          m = m + ad::dot(std::span<const double>(dz.obs_w(k), dz.d_level3()), p.u_j(l3));
        terms.push_back(ad::square(dz.y_std(k) - m));
      }
    }
    sum_sq = sum_sq + stable_sum(terms);
  }
  const double n = dz.data().total_obs();
  return -0.5 * n * std::log(2.0 * M_PI) - n * log(p.sigma) -
         sum_sq / (2.0 * ad::square(p.sigma));
}

// sum_i [ d_i log h_i(T_i) - H_i(T_i) ] with H by fixed-node quadrature.
template <class T>
T event_loglik(const Design& dz, const Params<T>& p) {
  using std::exp;
  const Dataset& data = dz.data();
  const ModelEval<T> slow(dz, p);
  const int M = dz.n_quad();
  T total = 0.0;
  for (int i = 0; i < data.n_patients(); ++i) {
    T trapeze = 0.0;
    for (int m = 0; m < M; ++m)
      trapeze = trapeze + dz.quad_weight(i, m) * exp(detail::log_hazard_cached(dz, p, slow, i, m));
    total = total - trapeze;
    if (data.patients[i].status == 1)
      total = total + detail::log_hazard_cached(dz, p, slow, i, M);
  }
  return total;
}

// Random-effect log densities: b_i ~ N(0, Sigma_b), u_ij ~ N(0, Sigma_u)
// (c_l ~ N(0, Sigma_c) above the patient level), delta_l ~ N(0, sigma_delta^2).
template <class T>
T ranef_logpdf(const Design& dz, const Params<T>& p) {
  const Dataset& data = dz.data();
  T total = 0.0;
  if (p.re_b.dim > 0)
    for (int i = 0; i < data.n_patients(); ++i) total = total + p.re_b.mvn_logpdf(p.b_i(i));
  if (p.re_u.dim > 0) {
    if (dz.spec().mode == HierarchyMode::kClusterBelowPatient) {
      for (int i = 0; i < data.n_patients(); ++i) {
        std::vector<T> terms;
        for (int j = 0; j < static_cast<int>(data.patients[i].clusters.size()); ++j)
          terms.push_back(p.re_u.mvn_logpdf(p.u_j(dz.cluster_base(i) + j)));
        total = total + stable_sum(terms);
      }
    } else {
      for (int l = 0; l < data.n_groups(); ++l) total = total + p.re_u.mvn_logpdf(p.u_j(l));
    }
  }
  if (p.has_frailty) {
    using std::log;
    for (std::size_t l = 0; l < p.delta.size(); ++l)
      total = total - 0.5 * std::log(2.0 * M_PI) - log(p.sigma_delta) -
              ad::square(p.delta[l]) / (2.0 * ad::square(p.sigma_delta));
  }
  return total;
}

// Weakly informative priors on the standardized scale plus the log-Jacobians
// of the log-scale and correlation-Cholesky transforms.
template <class T>
T log_prior(const Design& dz, const Params<T>& p) {
  using std::log;
  const PriorConfig& pc = dz.spec().priors;
  T total = 0.0;
  for (const auto& x : p.beta) total = total + detail::normal_lpdf(x, pc.coef_scale);
  for (const auto& x : p.gamma) total = total + detail::normal_lpdf(x, pc.coef_scale);
  for (const auto& x : p.alpha) total = total + detail::normal_lpdf(x, pc.coef_scale);
  for (const auto& x : p.lambda) total = total + detail::cauchy_lpdf(x, pc.cauchy_scale);
  // half-Cauchy scales; + log(scale) is the exp-transform Jacobian
  auto half_cauchy = [&](const T& s) {
    return std::log(2.0) + detail::cauchy_lpdf(s, pc.cauchy_scale) + log(s);
  };
  total = total + half_cauchy(p.sigma);
  for (const auto& s : p.re_b.sd) total = total + half_cauchy(s);
  for (const auto& s : p.re_u.sd) total = total + half_cauchy(s);
  if (p.has_frailty) total = total + half_cauchy(p.sigma_delta);
  total = total + p.re_b.corr.lkj_logpdf + p.re_b.corr.log_jacobian;
  total = total + p.re_u.corr.lkj_logpdf + p.re_u.corr.log_jacobian;
  return total;
}

template <class T>
LogPosteriorParts<T> log_posterior(const Design& dz, const Params<T>& p) {
  LogPosteriorParts<T> parts;
  parts.longitudinal = longitudinal_loglik(dz, p);
  parts.event = event_loglik(dz, p);
  parts.ranef = ranef_logpdf(dz, p);
  parts.prior = log_prior(dz, p);
  parts.total = parts.longitudinal + parts.event + parts.ranef + parts.prior;
  return parts;
}

}  // namespace hjm
