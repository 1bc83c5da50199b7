#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "hjm/design.hpp"
#include "hjm/error.hpp"
#include "hjm/parameters.hpp"

namespace hjm {

// Sum of a cluster-indexed bag of terms, made insensitive to the clusters'
// input order: terms are accumulated in ascending value order, so permuting
// a patient's clusters reproduces the identical floating-point result.
template <class T>
T stable_sum(std::vector<T>& terms) {
  std::sort(terms.begin(), terms.end(),
            [](const T& a, const T& b) { return ad::value_of(a) < ad::value_of(b); });
  T total = 0.0;
  for (const auto& t : terms) total = total + t;
  return total;
}

// Patient-level summary of per-cluster functional values.
template <class T>
T summarize(std::vector<T> values, Summary summary) {
  if (values.empty()) throw DomainError("summary of an empty cluster set");
  switch (summary) {
    case Summary::kSum: return stable_sum(values);
    case Summary::kAverage: return stable_sum(values) / static_cast<double>(values.size());
    case Summary::kMax: return ad::max_select(std::span<const T>(values));
    case Summary::kMin: return ad::min_select(std::span<const T>(values));
  }
  throw DomainError("unknown summary");
}

// On-demand evaluation of the longitudinal submodel and the association
// structure at arbitrary (patient, cluster, time). The fitting hot path in
// hazard.hpp uses the Design's cached rows instead; both must agree and the
// tests hold them to that.
template <class T>
class ModelEval {
 public:
  ModelEval(const Design& design, const Params<T>& params)
      : dz_(design), p_(params) {}

  // Linear predictor: x'(t) beta + z'(t) b_i + w'(t) u_ij   (below-patient)
  //                   x'(t) beta + z'(t) b_i + q'(t) c_l    (above-patient)
  T eta(int i, int j, double t) const {
    check_index(i, j);
    std::vector<double> row(std::max({dz_.n_fixed(), dz_.d_patient(), dz_.d_level3()}));
    dz_.x_row(i, j, t, 0, row.data());
    T v = ad::dot(std::span<const double>(row.data(), dz_.n_fixed()), p_.beta);
    if (dz_.d_patient() > 0) {
      dz_.z_row(i, j, t, 0, row.data());
      v = v + ad::dot(std::span<const double>(row.data(), dz_.d_patient()), p_.b_i(i));
    }
    if (dz_.d_level3() > 0) {
      dz_.re3_row(i, j, t, 0, row.data());
      v = v + ad::dot(std::span<const double>(row.data(), dz_.d_level3()), p_.u_j(level3_index(i, j)));
    }
    return v;
  }

  // Expected value; the identity link is the only enabled family.
  T mu(int i, int j, double t) const { return eta(i, j, t); }

  // Analytic d mu / d t through the time-dependent design columns.
  T mu_slope(int i, int j, double t) const {
    check_index(i, j);
    std::vector<double> row(std::max({dz_.n_fixed(), dz_.d_patient(), dz_.d_level3()}));
    dz_.x_row(i, j, t, 1, row.data());
    T v = ad::dot(std::span<const double>(row.data(), dz_.n_fixed()), p_.beta);
    if (dz_.d_patient() > 0) {
      dz_.z_row(i, j, t, 1, row.data());
      v = v + ad::dot(std::span<const double>(row.data(), dz_.d_patient()), p_.b_i(i));
    }
    if (dz_.d_level3() > 0) {
      dz_.re3_row(i, j, t, 1, row.data());
      v = v + ad::dot(std::span<const double>(row.data(), dz_.d_level3()), p_.u_j(level3_index(i, j)));
    }
    return v;
  }

  // Running integral of mu over [0, t] with the hazard module's rule.
  T mu_integral(int i, int j, double t) const {
    if (t == 0.0) return 0.0;
    return dz_.rule().integrate(t, [&](double s) { return mu(i, j, s); });
  }

  T cluster_functional(Functional f, int i, int j, double t) const {
    switch (f) {
      case Functional::kValue: return mu(i, j, t);
      case Functional::kSlope: return mu_slope(i, j, t);
      case Functional::kAuc: return mu_integral(i, j, t);
    }
    throw DomainError("unknown functional");
  }

  // Association structure sum_q alpha_q f_q(.) at time t.
  T association(int i, double t) const {
    const ModelSpec& spec = dz_.spec();
    T total = 0.0;
    if (spec.shared_re) {
      // hazard tied to the group's deviation from the average (intercept
      // component of c_l)
      return p_.alpha[0] * p_.u_j(dz_.data().patients[i].group_index)[0];
    }
    for (int q = 0; q < spec.q(); ++q) {
      const auto& a = spec.association[q];
      if (spec.mode == HierarchyMode::kClusterBelowPatient) {
        const int n_clusters = static_cast<int>(dz_.data().patients[i].clusters.size());
        std::vector<T> values;
        values.reserve(n_clusters);
        for (int j = 0; j < n_clusters; ++j)
          values.push_back(cluster_functional(a.functional, i, j, t));
        total = total + p_.alpha[q] * summarize(std::move(values), a.summary);
      } else {
        // patient-level association; no cluster summary involved
        total = total + p_.alpha[q] * cluster_functional(a.functional, i, 0, t);
      }
    }
    return total;
  }

  // log h_i(t): spline log-baseline + event covariates + association
  // (+ frailty in above-patient mode).
  T log_hazard(int i, double t) const {
    std::vector<double> row(dz_.df());
    dz_.spline_row(t, row.data());
    T lh = ad::dot(std::span<const double>(row), p_.lambda);
    if (dz_.n_event() > 0)
      lh = lh + ad::dot(std::span<const double>(dz_.v_row(i), dz_.n_event()), p_.gamma);
    if (dz_.spec().q() > 0) lh = lh + association(i, t);
    if (p_.has_frailty) lh = lh + p_.delta[dz_.data().patients[i].group_index];
    return lh;
  }

  // H_i(T) by fixed-node quadrature on [0, T].
  T cum_hazard(int i, double upper) const {
    if (!(upper > 0)) throw DomainError("cumulative hazard needs T > 0");
    using std::exp;
    return dz_.rule().integrate(upper, [&](double s) { return exp(log_hazard(i, s)); });
  }

 private:
  int level3_index(int i, int j) const {
    if (dz_.spec().mode == HierarchyMode::kClusterAbovePatient)
      return dz_.data().patients[i].group_index;
    return dz_.cluster_base(i) + j;
  }

  void check_index(int i, int j) const {
    if (i < 0 || i >= dz_.data().n_patients())
      throw DomainError("patient index out of range");
    if (j < 0 || j >= static_cast<int>(dz_.data().patients[i].clusters.size()))
      throw DomainError("cluster index out of range");
  }

  const Design& dz_;
  const Params<T>& p_;
};

}  // namespace hjm
