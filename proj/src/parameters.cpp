#include "hjm/parameters.hpp"

#include "hjm/error.hpp"

namespace hjm {

ParamLayout::ParamLayout(const Design& design) {
  const Dataset& data = design.data();
  const ModelSpec& spec = design.spec();

  n_beta_ = design.n_fixed();
  n_gamma_ = design.n_event();
  n_alpha_ = spec.q();
  n_lambda_ = design.df();
  d_b_ = design.d_patient();
  d_u_ = design.d_level3();
  n_chol_b_ = d_b_ * (d_b_ - 1) / 2;
  n_chol_u_ = d_u_ * (d_u_ - 1) / 2;
  n_patients_ = data.n_patients();
  n_groups_ = data.n_groups();
  frailty_ = spec.frailty;
  if (d_u_ > 0) {
    n_level3_ = spec.mode == HierarchyMode::kClusterBelowPatient ? data.total_clusters()
                                                                 : data.n_groups();
  }

  int off = n_beta_;
  off_gamma_ = off;
  off += n_gamma_;
  off_alpha_ = off;
  off += n_alpha_;
  off_lambda_ = off;
  off += n_lambda_;
  off_log_sigma_ = off;
  off += 1;
  off_log_sd_b_ = off;
  off += d_b_;
  off_chol_b_ = off;
  off += n_chol_b_;
  off_log_sd_u_ = off;
  off += d_u_;
  off_chol_u_ = off;
  off += n_chol_u_;
  off_log_sigma_delta_ = off;
  if (frailty_) off += 1;
  off_b_ = off;
  off += n_patients_ * d_b_;
  off_u_ = off;
  off += n_level3_ * d_u_;
  off_delta_ = off;
  if (frailty_) off += n_groups_;
  total_ = off;

  // Names of the constrained coordinates, one per unconstrained slot.
  const auto z_names = design.patient_re_names();
  const auto w_names = design.level3_re_names();
  const bool above = spec.mode == HierarchyMode::kClusterAbovePatient;
  const std::string l3 = above ? "c" : "u";
  for (const auto& n : design.fixed_names()) names_.push_back("beta[" + n + "]");
  for (const auto& n : design.event_names()) names_.push_back("gamma[" + n + "]");
  for (int q = 0; q < n_alpha_; ++q) {
    const auto& a = spec.association[q];
    std::string label = to_string(a.functional);
    if (spec.mode == HierarchyMode::kClusterBelowPatient) label += "_" + to_string(a.summary);
    if (spec.shared_re) label = "shared_re";
    names_.push_back("alpha[" + label + "]");
  }
  for (int k = 0; k < n_lambda_; ++k) names_.push_back("lambda[" + std::to_string(k + 1) + "]");
  names_.push_back("sigma");
  for (int k = 0; k < d_b_; ++k) names_.push_back("sd_b[" + z_names[k] + "]");
  for (int r = 1; r < d_b_; ++r)
    for (int c = 0; c < r; ++c)
      names_.push_back("corr_b[" + std::to_string(r + 1) + "," + std::to_string(c + 1) + "]");
  for (int k = 0; k < d_u_; ++k) names_.push_back("sd_" + l3 + "[" + w_names[k] + "]");
  for (int r = 1; r < d_u_; ++r)
    for (int c = 0; c < r; ++c)
      names_.push_back("corr_" + l3 + "[" + std::to_string(r + 1) + "," + std::to_string(c + 1) +
                       "]");
  if (frailty_) names_.push_back("sigma_delta");
  for (int i = 0; i < n_patients_; ++i)
    for (int k = 0; k < d_b_; ++k)
      names_.push_back("b[" + data.patients[i].id + "," + z_names[k] + "]");
  if (d_u_ > 0) {
    if (above) {
      for (int l = 0; l < n_level3_; ++l)
        for (int k = 0; k < d_u_; ++k)
          names_.push_back("c[" + data.group_ids[l] + "," + w_names[k] + "]");
    } else {
      for (const auto& p : data.patients)
        for (const auto& cl : p.clusters)
          for (int k = 0; k < d_u_; ++k)
            names_.push_back("u[" + p.id + "/" + cl.id + "," + w_names[k] + "]");
    }
  }
  if (frailty_)
    for (const auto& g : data.group_ids) names_.push_back("delta[" + g + "]");
  if (static_cast<int>(names_.size()) != total_)
    throw NumericalError("parameter name bookkeeping mismatch");
}

std::vector<double> ParamLayout::constrain(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  out[off_log_sigma_] = std::exp(x[off_log_sigma_]);
  for (int k = 0; k < d_b_; ++k) out[off_log_sd_b_ + k] = std::exp(x[off_log_sd_b_ + k]);
  for (int k = 0; k < d_u_; ++k) out[off_log_sd_u_ + k] = std::exp(x[off_log_sd_u_ + k]);
  if (frailty_) out[off_log_sigma_delta_] = std::exp(x[off_log_sigma_delta_]);
  // correlation coefficients R = L L' in the same (row, col) order as the
  // unconstrained slots
  auto fill_corr = [&x, &out](int dim, int off_chol) {
    if (dim < 2) return;
    std::vector<double> y(x.begin() + off_chol, x.begin() + off_chol + dim * (dim - 1) / 2);
    auto chol = corr_cholesky_transform<double>(y, dim);
    int k = 0;
    for (int r = 1; r < dim; ++r)
      for (int c = 0; c < r; ++c) {
        double rho = 0.0;
        for (int s = 0; s <= c; ++s) rho += chol.at(r, s) * chol.at(c, s);
        out[off_chol + k++] = rho;
      }
  };
  fill_corr(d_b_, off_chol_b_);
  fill_corr(d_u_, off_chol_u_);
  return out;
}

}  // namespace hjm
