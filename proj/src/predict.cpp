#include "hjm/predict.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <mutex>
#include <thread>

#include <Eigen/Dense>

#include "hjm/error.hpp"
#include "hjm/hazard.hpp"
#include "hjm/stats.hpp"

namespace hjm {

namespace {

// Log density of one patient's data and random effects given the population
// parameters: longitudinal terms, survival through the (truncated) follow-up
// window, and the random-effect prior. Everything except the patient's own
// random-effect slots acts as a constant.
template <class T>
T patient_conditional(const Design& dz, const Params<T>& p, int i) {
  using std::exp;
  using std::log;
  const Dataset& data = dz.data();
  const Patient& pt = data.patients[i];
  const ModelEval<T> slow(dz, p);

  T total = 0.0;
  int n_obs = 0;
  std::vector<T> sq;
  for (int j = 0; j < static_cast<int>(pt.clusters.size()); ++j) {
    const int jg = dz.cluster_base(i) + j;
    const int l3 =
        dz.spec().mode == HierarchyMode::kClusterAbovePatient ? pt.group_index : jg;
    for (int k : pt.clusters[j].obs) {
      T m = ad::dot(std::span<const double>(dz.obs_x(k), dz.n_fixed()), p.beta);
      if (dz.d_patient() > 0)
        m = m + ad::dot(std::span<const double>(dz.obs_z(k), dz.d_patient()), p.b_i(i));
      if (dz.d_level3() > 0)
        m = m + ad::dot(std::span<const double>(dz.obs_w(k), dz.d_level3()), p.u_j(l3));
      sq.push_back(ad::square(dz.y_std(k) - m));
      ++n_obs;
    }
  }
  if (n_obs > 0)
    total = total - 0.5 * n_obs * std::log(2.0 * M_PI) - static_cast<double>(n_obs) * log(p.sigma) -
            stable_sum(sq) / (2.0 * ad::square(p.sigma));

  const int M = dz.n_quad();
  for (int m = 0; m < M; ++m)
    total = total - dz.quad_weight(i, m) * exp(detail::log_hazard_cached(dz, p, slow, i, m));
  if (pt.status == 1) total = total + detail::log_hazard_cached(dz, p, slow, i, M);

  if (p.re_b.dim > 0) total = total + p.re_b.mvn_logpdf(p.b_i(i));
  if (p.re_u.dim > 0 && dz.spec().mode == HierarchyMode::kClusterBelowPatient) {
    std::vector<T> terms;
    for (int j = 0; j < static_cast<int>(pt.clusters.size()); ++j)
      terms.push_back(p.re_u.mvn_logpdf(p.u_j(dz.cluster_base(i) + j)));
    total = total + stable_sum(terms);
  }
  return total;
}

std::vector<int> free_slots(const Design& dz, const ParamLayout& layout, int i) {
  std::vector<int> slots;
  for (int k = 0; k < layout.d_b(); ++k) slots.push_back(layout.off_b() + i * layout.d_b() + k);
  if (dz.spec().mode == HierarchyMode::kClusterBelowPatient)
    for (int j = 0; j < static_cast<int>(dz.data().patients[i].clusters.size()); ++j)
      for (int k = 0; k < layout.d_u(); ++k)
        slots.push_back(layout.off_u() + (dz.cluster_base(i) + j) * layout.d_u() + k);
  return slots;
}

double objective(const Design& dz, const ParamLayout& layout, std::span<const double> x, int i) {
  auto p = layout.view<double>(x);
  return patient_conditional(dz, p, i);
}

// Gradient of the conditional log density with respect to the free slots.
void slot_gradient(const Design& dz, const ParamLayout& layout, std::span<const double> x, int i,
                   const std::vector<int>& slots, ad::Tape& tape, std::vector<ad::Var>& vars,
                   std::vector<double>& full, std::span<double> out) {
  tape.clear();
  vars.clear();
  vars.reserve(x.size());
  for (double v : x) vars.emplace_back(tape, v);
  auto p = layout.view<ad::Var>(std::span<const ad::Var>(vars));
  const ad::Var total = patient_conditional(dz, p, i);
  full.assign(x.size(), 0.0);
  tape.gradient(total.index(), x.size(), full);
  for (std::size_t c = 0; c < slots.size(); ++c) out[c] = full[slots[c]];
}

Eigen::MatrixXd negative_hessian(const Design& dz, const ParamLayout& layout,
                                 std::vector<double>& x, int i, const std::vector<int>& slots) {
  const int d = static_cast<int>(slots.size());
  // wide enough that a subgradient jump at a non-smooth summary kink reads
  // as O(jump/2h) curvature instead of a step-crippling O(jump/2e-5) spike;
  // central differences keep smooth curvature accurate to O(h^2)
  const double h = 1e-3;
  ad::Tape tape;
  std::vector<ad::Var> vars;
  std::vector<double> full, hi(d), lo(d);
  Eigen::MatrixXd neg_h(d, d);
  for (int c = 0; c < d; ++c) {
    const double keep = x[slots[c]];
    x[slots[c]] = keep + h;
    slot_gradient(dz, layout, x, i, slots, tape, vars, full, hi);
    x[slots[c]] = keep - h;
    slot_gradient(dz, layout, x, i, slots, tape, vars, full, lo);
    x[slots[c]] = keep;
    for (int r = 0; r < d; ++r) neg_h(r, c) = -(hi[r] - lo[r]) / (2.0 * h);
  }
  // symmetrize finite-difference noise away
  neg_h = 0.5 * (neg_h + neg_h.transpose()).eval();
  return neg_h;
}

}  // namespace

void LandmarkQuery::validate() const {
  if (!(landmark >= 0.0) || !(horizon > landmark))
    throw ValidationError("landmark query needs 0 <= landmark < horizon");
}

Dataset landmark_dataset(const Dataset& data, double landmark) {
  Dataset out;
  out.mode = data.mode;
  out.group_ids = data.group_ids;
  out.long_covariate_names = data.long_covariate_names;
  out.event_covariate_names = data.event_covariate_names;
  for (const auto& pt : data.patients) {
    if (pt.event_time <= landmark) continue;  // no longer at risk
    Patient np = pt;
    np.event_time = landmark;
    np.status = 0;
    np.clusters.clear();
    for (const auto& cl : pt.clusters) {
      Cluster nc;
      nc.id = cl.id;
      for (int k : cl.obs) {
        if (data.obs_time[k] > landmark) continue;
        nc.obs.push_back(static_cast<int>(out.obs_time.size()));
        out.obs_time.push_back(data.obs_time[k]);
        out.obs_value.push_back(data.obs_value[k]);
        out.obs_covariates.push_back(data.obs_covariates[k]);
      }
      if (!nc.obs.empty()) np.clusters.push_back(std::move(nc));
    }
    if (!np.clusters.empty()) out.patients.push_back(std::move(np));
  }
  if (out.patients.empty())
    throw ValidationError("no patient is at risk with history at the landmark");
  return out;
}

ConditionalMode conditional_random_effects(const Design& design, const ParamLayout& layout,
                                           std::vector<double>& x, int patient,
                                           std::span<const double> warm_start) {
  const auto slots = free_slots(design, layout, patient);
  const int d = static_cast<int>(slots.size());
  if (d == 0) throw DomainError("patient has no random effects to condition on");
  if (warm_start.size() == slots.size())
    for (int c = 0; c < d; ++c) x[slots[c]] = warm_start[c];

  ad::Tape tape;
  std::vector<ad::Var> vars;
  std::vector<double> full, grad(d);
  double f = objective(design, layout, x, patient);
  if (!std::isfinite(f)) throw NumericalError("conditional density not finite at the start");

  ConditionalMode result;
  result.slots = slots;
  constexpr int kMaxIter = 1000;
  constexpr int kWindow = 20;       // iterations between displacement checks
  constexpr double kDispTol = 1e-3; // net movement treated as converged
  int iter = 0;
  double gmax = 0.0, step_max = 0.0;
  std::vector<double> x_window;
  double f_window = f;
  for (; iter < kMaxIter; ++iter) {
    // non-smooth summaries create kink maxima where the gradient jumps and
    // Newton zigzags across the kink forever; a window with negligible net
    // displacement and objective gain means the mode is pinned well within
    // what the Laplace approximation can resolve
    if (iter % kWindow == 0) {
      if (!x_window.empty()) {
        double disp = 0.0;
        for (int c = 0; c < d; ++c)
          disp = std::max(disp, std::abs(x[slots[c]] - x_window[c]));
        if (disp < kDispTol && f - f_window < 1e-6 * std::max(1.0, std::abs(f))) break;
      }
      x_window.resize(d);
      for (int c = 0; c < d; ++c) x_window[c] = x[slots[c]];
      f_window = f;
    }
    slot_gradient(design, layout, x, patient, slots, tape, vars, full, grad);
    gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax < 1e-8) break;

    Eigen::MatrixXd neg_h = negative_hessian(design, layout, x, patient, slots);
    Eigen::Map<Eigen::VectorXd> g(grad.data(), d);
    Eigen::VectorXd step;
    double ridge = 0.0;
    for (;;) {
      Eigen::LLT<Eigen::MatrixXd> llt(neg_h + ridge * Eigen::MatrixXd::Identity(d, d));
      if (llt.info() == Eigen::Success) {
        step = llt.solve(g);
        break;
      }
      ridge = ridge == 0.0 ? 1e-6 : 10.0 * ridge;
      if (ridge > 1e6)
        throw NumericalError("conditional curvature is not usable; last objective " +
                             std::to_string(f));
    }

    // backtracking ascent on the Newton direction
    double scale = 1.0;
    step_max = step.lpNorm<Eigen::Infinity>();
    const std::vector<double> keep = x;
    double f_new = -std::numeric_limits<double>::infinity();
    for (int half = 0; half < 40; ++half) {
      for (int c = 0; c < d; ++c) x[slots[c]] = keep[slots[c]] + scale * step(c);
      f_new = objective(design, layout, x, patient);
      if (std::isfinite(f_new) && f_new >= f - 1e-12) break;
      scale *= 0.5;
    }
    if (!(f_new >= f - 1e-12)) {
      x = keep;  // no ascent possible along this direction
      break;
    }
    // objective stall: at a non-smooth summary kink the gradient never
    // reaches the tolerance, but a vanishing ascent step means we are at
    // the maximum for Laplace purposes
    if (f_new - f < 1e-10 * std::max(1.0, std::abs(f))) {
      f = f_new;
      break;
    }
    f = f_new;
  }
  // a small final Newton step means the mode is localized more tightly than
  // the Laplace approximation resolves, even if a kink keeps the gradient
  // from meeting its tolerance; kink steps scale with the finite-difference
  // width used for the curvature, so the cutoff sits well above it
  constexpr double kStepAccept = 5e-2;
  if (iter == kMaxIter && step_max > kStepAccept)
    throw NumericalError("conditional mode search did not converge; last objective " +
                         std::to_string(f) + ", gradient max " + std::to_string(gmax) +
                         ", step max " + std::to_string(step_max));

  Eigen::MatrixXd neg_h = negative_hessian(design, layout, x, patient, slots);
  double ridge = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
  while (llt.info() != Eigen::Success) {
    ridge = ridge == 0.0 ? 1e-8 : 10.0 * ridge;
    if (ridge > 1e6)
      throw NumericalError("conditional curvature not positive definite at the mode");
    llt = Eigen::LLT<Eigen::MatrixXd>(neg_h + ridge * Eigen::MatrixXd::Identity(d, d));
  }
  const Eigen::MatrixXd l = llt.matrixL();
  result.mode.resize(d);
  for (int c = 0; c < d; ++c) result.mode[c] = x[slots[c]];
  result.chol.assign(l.data(), l.data() + static_cast<std::size_t>(d) * d);
  result.objective = f;
  result.iterations = iter;
  return result;
}

void laplace_draw(const ConditionalMode& mode, Rng& rng, std::vector<double>& x) {
  const int d = static_cast<int>(mode.slots.size());
  Eigen::Map<const Eigen::MatrixXd> l(mode.chol.data(), d, d);
  Eigen::VectorXd z(d);
  for (int c = 0; c < d; ++c) z(c) = rng.normal();
  // covariance is the inverse negative Hessian (L L^T)^-1, so the draw is
  // mode + L^-T z
  const Eigen::VectorXd shift = l.transpose().triangularView<Eigen::Upper>().solve(z);
  for (int c = 0; c < d; ++c) x[mode.slots[c]] = mode.mode[c] + shift(c);
}

PredictionResult conditional_survival(const Dataset& data, const LoadedFit& fit,
                                      const LandmarkQuery& query, std::uint64_t seed,
                                      int threads) {
  query.validate();
  if (fit.unconstrained.empty()) throw ValidationError("fit artifact carries no draws");

  const Dataset lm = landmark_dataset(data, query.landmark);
  const Design dz = Design::from_artifact(lm, fit.spec, fit.bases);
  const ParamLayout layout(dz);
  if (static_cast<int>(fit.unconstrained.front().size()) < layout.off_b())
    throw ValidationError("fit draws are shorter than the population block");

  // In group-above-patient mode, group-level coefficients come from the fit
  // draws; group order is preserved by landmark_dataset so offsets need the
  // original layout only for the draw side.
  std::vector<int> group_src, group_dst;
  if (dz.spec().mode == HierarchyMode::kClusterAbovePatient) {
    const Design full = Design::from_artifact(data, fit.spec, fit.bases);
    const ParamLayout full_layout(full);
    const int n_u = layout.n_level3() * layout.d_u();
    for (int c = 0; c < n_u; ++c) {
      group_src.push_back(full_layout.off_u() + c);
      group_dst.push_back(layout.off_u() + c);
    }
    for (int c = 0; c < layout.n_groups(); ++c) {
      group_src.push_back(full_layout.off_delta() + c);
      group_dst.push_back(layout.off_delta() + c);
    }
    if (!layout.frailty()) group_src.resize(n_u), group_dst.resize(n_u);
  }

  std::vector<int> targets;
  if (query.patients.empty()) {
    targets.resize(lm.n_patients());
    for (int i = 0; i < lm.n_patients(); ++i) targets[i] = i;
  } else {
    for (const auto& id : query.patients) {
      const int i = lm.find_patient(id);
      if (i < 0)
        throw ValidationError("patient " + id + " is not at risk with history at the landmark");
      targets.push_back(i);
    }
  }

  const int n_draws = static_cast<int>(fit.unconstrained.size());
  PredictionResult out;
  out.landmark = query.landmark;
  out.horizon = query.horizon;
  out.rows.resize(targets.size());

  auto predict_one = [&](std::size_t t) {
    const int i = targets[t];
    std::vector<double> pis;
    pis.reserve(n_draws);
    std::vector<double> warm;
    for (int m = 0; m < n_draws; ++m) {
      std::vector<double> x(layout.size(), 0.0);
      const auto& draw = fit.unconstrained[m];
      std::copy(draw.begin(), draw.begin() + layout.off_b(), x.begin());
      for (std::size_t c = 0; c < group_src.size(); ++c) x[group_dst[c]] = draw[group_src[c]];

      auto mode = conditional_random_effects(dz, layout, x, i, warm);
      warm = mode.mode;
      Rng rng(seed, (static_cast<std::uint64_t>(i) << 24) + static_cast<std::uint64_t>(m));
      laplace_draw(mode, rng, x);

      const auto p = layout.view<double>(std::span<const double>(x));
      const ModelEval<double> eval(dz, p);
      const double gap = eval.cum_hazard(i, query.horizon) - eval.cum_hazard(i, query.landmark);
      pis.push_back(std::exp(-std::max(0.0, gap)));
    }
    PatientPrediction row;
    row.id = lm.patients[i].id;
    row.survival = mean(pis);
    row.lower = quantile(pis, 0.025);
    row.upper = quantile(pis, 0.975);
    row.n_draws = n_draws;
    out.rows[t] = std::move(row);
  };

  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(targets.size())));
  if (n_threads == 1) {
    for (std::size_t t = 0; t < targets.size(); ++t) predict_one(t);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex guard;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t t = next.fetch_add(1);
          if (t >= targets.size()) return;
          try {
            predict_one(t);
          } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

AucResult time_dependent_auc(const PredictionResult& predictions, const Dataset& data,
                             const LandmarkQuery& query) {
  query.validate();
  std::vector<double> case_risk, control_risk;
  int excluded = 0;
  for (const auto& row : predictions.rows) {
    const int i = data.find_patient(row.id);
    if (i < 0) throw ValidationError("predicted patient " + row.id + " is missing from the data");
    const Patient& pt = data.patients[i];
    const double risk = 1.0 - row.survival;
    if (pt.event_time > query.horizon) {
      control_risk.push_back(risk);
    } else if (pt.event_time > query.landmark && pt.status == 1) {
      case_risk.push_back(risk);
    } else if (pt.event_time > query.landmark) {
      ++excluded;  // censored inside the window: outcome at the horizon unknown
    }
  }
  if (case_risk.empty() || control_risk.empty())
    throw DomainError("time-dependent AUC undefined: needs at least one case and one control");

  double concordant = 0.0;
  for (double c : case_risk)
    for (double k : control_risk) concordant += c > k ? 1.0 : (c == k ? 0.5 : 0.0);

  AucResult out;
  out.cases = static_cast<int>(case_risk.size());
  out.controls = static_cast<int>(control_risk.size());
  out.excluded = excluded;
  out.auc = concordant / (static_cast<double>(out.cases) * out.controls);
  return out;
}

csv::Table predictions_to_csv(const PredictionResult& predictions) {
  csv::Table t;
  t.header = {"patient_id", "landmark", "horizon", "survival", "lower95", "upper95", "draws"};
  for (const auto& row : predictions.rows)
    t.rows.push_back({row.id, csv::format_real(predictions.landmark), csv::format_real(predictions.horizon),
                      csv::format_real(row.survival), csv::format_real(row.lower), csv::format_real(row.upper),
                      std::to_string(row.n_draws)});
  return t;
}

nlohmann::json auc_to_json(const AucResult& result, const LandmarkQuery& query) {
  return {{"landmark", query.landmark}, {"horizon", query.horizon},   {"auc", result.auc},
          {"cases", result.cases},      {"controls", result.controls}, {"excluded", result.excluded}};
}

}  // namespace hjm
