#include "hjm/fit.hpp"

#include <chrono>
#include <limits>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "hjm/error.hpp"
#include "hjm/hazard.hpp"
#include "hjm/stats.hpp"

namespace hjm {

double ModelTarget::log_density(std::span<const double> x, std::span<double> grad) {
  tape_.clear();
  vars_.clear();
  vars_.reserve(x.size());
  for (double v : x) vars_.emplace_back(tape_, v);
  try {
    auto p = layout_.view<ad::Var>(std::span<const ad::Var>(vars_));
    const ad::Var total = log_posterior(dz_, p).total;
    if (!std::isfinite(total.value())) return -std::numeric_limits<double>::infinity();
    tape_.gradient(total.index(), x.size(), grad);
    return total.value();
  } catch (const NumericalError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

std::vector<double> report_draw(const Design& design, const ParamLayout& layout,
                                std::span<const double> unconstrained) {
  std::vector<double> r = layout.constrain(unconstrained);
  const double ys = design.y_scale();

  int intercept_col = -1;
  for (int c = 0; c < layout.n_beta(); ++c)
    if (design.fixed_names()[c] == "intercept") intercept_col = c;
  for (int c = 0; c < layout.n_beta(); ++c) r[c] = ys * r[c] / design.fixed_scales()[c];
  if (intercept_col >= 0) {
    double shift = design.y_mean();
    for (int c = 0; c < layout.n_beta(); ++c)
      if (c != intercept_col) shift -= r[c] * design.fixed_means()[c];
    r[intercept_col] += shift;
  }
  for (int c = 0; c < layout.n_gamma(); ++c)
    r[layout.off_gamma() + c] /= design.event_scales()[c];
  for (int c = 0; c < layout.n_alpha(); ++c) r[layout.off_alpha() + c] /= ys;
  r[layout.off_log_sigma()] *= ys;
  for (int c = 0; c < layout.d_b(); ++c) r[layout.off_log_sd_b() + c] *= ys;
  for (int c = 0; c < layout.d_u(); ++c) r[layout.off_log_sd_u() + c] *= ys;
  const int n_b = layout.n_patients() * layout.d_b();
  for (int c = 0; c < n_b; ++c) r[layout.off_b() + c] *= ys;
  const int n_u = layout.n_level3() * layout.d_u();
  for (int c = 0; c < n_u; ++c) r[layout.off_u() + c] *= ys;
  return r;
}

std::vector<int> population_columns(const Design&, const ParamLayout& layout) {
  std::vector<int> cols(layout.off_b());
  for (int c = 0; c < layout.off_b(); ++c) cols[c] = c;
  return cols;
}

FitResult fit_model(const Design& design, const ChainConfig& config) {
  const auto start = std::chrono::steady_clock::now();

  FitResult out;
  out.spec = design.spec();
  out.bases = design.serialize_bases();
  out.layout = ParamLayout(design);
  out.names = out.layout.names();

  out.draws = nuts_sample([&design] { return std::make_unique<ModelTarget>(design); }, config);

  out.reported.resize(out.draws.draws.size());
  for (int d = 0; d < out.draws.n_draws(); ++d) {
    auto r = report_draw(design, out.layout,
                         std::span<const double>(out.draws.row(d), out.draws.dim));
    std::copy(r.begin(), r.end(),
              out.reported.begin() + static_cast<std::size_t>(d) * out.draws.dim);
  }
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::vector<SummaryRow> summarize_fit(const Design& design, const FitResult& fit) {
  const auto cols = population_columns(design, fit.layout);
  const int n = fit.draws.n_draws();
  std::vector<SummaryRow> rows;
  rows.reserve(cols.size());
  std::vector<double> vals(n), hr(n);
  for (int c : cols) {
    SummaryRow row;
    row.name = fit.names[c];
    for (int d = 0; d < n; ++d)
      vals[d] = fit.reported[static_cast<std::size_t>(d) * fit.draws.dim + c];
    row.mean = mean(vals);
    row.q025 = quantile(vals, 0.025);
    row.q975 = quantile(vals, 0.975);
    const bool is_gamma =
        c >= fit.layout.off_gamma() && c < fit.layout.off_gamma() + fit.layout.n_gamma();
    const bool is_alpha =
        c >= fit.layout.off_alpha() && c < fit.layout.off_alpha() + fit.layout.n_alpha();
    if (is_gamma || is_alpha) {
      row.hazard_scale = true;
      for (int d = 0; d < n; ++d) hr[d] = std::exp(vals[d]);
      row.hr_mean = mean(hr);
      row.hr_q025 = quantile(hr, 0.025);
      row.hr_q975 = quantile(hr, 0.975);
    }
    rows.push_back(row);
  }
  return rows;
}

csv::Table summary_to_csv(const std::vector<SummaryRow>& rows) {
  csv::Table t;
  t.header = {"parameter", "mean", "q2.5", "q97.5", "hr_mean", "hr_q2.5", "hr_q97.5"};
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.name, csv::format_real(r.mean),
                                      csv::format_real(r.q025), csv::format_real(r.q975)};
    if (r.hazard_scale) {
      cells.push_back(csv::format_real(r.hr_mean));
      cells.push_back(csv::format_real(r.hr_q025));
      cells.push_back(csv::format_real(r.hr_q975));
    } else {
      cells.insert(cells.end(), {"", "", ""});
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

csv::Table draws_to_csv(const FitResult& fit, bool reported_scale) {
  csv::Table t;
  t.header = {"chain", "draw", "lp", "divergent"};
  t.header.insert(t.header.end(), fit.names.begin(), fit.names.end());
  const auto& src = reported_scale ? fit.reported : fit.draws.draws;
  for (int d = 0; d < fit.draws.n_draws(); ++d) {
    std::vector<std::string> cells;
    cells.reserve(4 + fit.draws.dim);
    cells.push_back(std::to_string(d / fit.draws.samples + 1));
    cells.push_back(std::to_string(d % fit.draws.samples + 1));
    cells.push_back(csv::format_real(fit.draws.log_post[d]));
    cells.push_back(std::to_string(static_cast<int>(fit.draws.divergent[d])));
    for (int c = 0; c < fit.draws.dim; ++c)
      cells.push_back(csv::format_real(src[static_cast<std::size_t>(d) * fit.draws.dim + c]));
    t.rows.push_back(std::move(cells));
  }
  return t;
}

nlohmann::json diagnostics_json(const Design& design, const FitResult& fit) {
  const auto cols = population_columns(design, fit.layout);
  nlohmann::json per_param = nlohmann::json::object();
  std::vector<double> column(fit.draws.n_draws());
  for (int c : cols) {
    for (int d = 0; d < fit.draws.n_draws(); ++d)
      column[d] = fit.reported[static_cast<std::size_t>(d) * fit.draws.dim + c];
    auto diag = diagnose_scalar(column, fit.draws.chains);
    nlohmann::json entry;
    entry["rhat"] = diag.degenerate || std::isnan(diag.rhat) ? nlohmann::json()
                                                             : nlohmann::json(diag.rhat);
    entry["ess"] = diag.degenerate ? nlohmann::json() : nlohmann::json(diag.ess);
    entry["degenerate"] = diag.degenerate;
    per_param[fit.names[c]] = entry;
  }

  const int divergences = fit.draws.divergence_count();
  const double rate = static_cast<double>(divergences) / fit.draws.n_draws();
  nlohmann::json j;
  j["parameters"] = per_param;
  j["chains"] = fit.draws.chains;
  j["samples_per_chain"] = fit.draws.samples;
  j["divergences"] = divergences;
  j["divergence_rate"] = rate;
  if (rate > 0.2) j["warning"] = "divergence rate above 20%";
  j["warmup_divergences"] = fit.draws.warmup_divergences;
  j["step_size"] = fit.draws.step_size;
  j["runtime_seconds"] = fit.runtime_seconds;
  return j;
}

void save_fit(const std::string& dir, const Design& design, const FitResult& fit) {
  std::filesystem::create_directories(dir);
  nlohmann::json model;
  model["spec"] = fit.spec.to_json();
  model["bases"] = fit.bases;
  model["parameter_names"] = fit.names;
  model["chains"] = fit.draws.chains;
  model["samples_per_chain"] = fit.draws.samples;
  std::ofstream(dir + "/model.json") << model.dump(2) << "\n";
  csv::write_file(dir + "/draws.csv", draws_to_csv(fit, true));
  csv::write_file(dir + "/draws_unconstrained.csv", draws_to_csv(fit, false));
  csv::write_file(dir + "/summary.csv", summary_to_csv(summarize_fit(design, fit)));
  std::ofstream(dir + "/diagnostics.json") << diagnostics_json(design, fit).dump(2) << "\n";
}

LoadedFit load_fit(const std::string& dir) {
  std::ifstream in(dir + "/model.json");
  if (!in) throw SchemaError("cannot open " + dir + "/model.json");
  nlohmann::json model = nlohmann::json::parse(in);

  LoadedFit out;
  out.spec = ModelSpec::from_json(model.at("spec"));
  out.bases = model.at("bases");
  out.names = model.at("parameter_names").get<std::vector<std::string>>();
  out.chains = model.value("chains", 0);

  auto table = csv::read_file(dir + "/draws_unconstrained.csv");
  if (table.header.size() != out.names.size() + 4)
    throw SchemaError("draws_unconstrained.csv does not match the stored parameter names");
  out.unconstrained.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    std::vector<double> row(out.names.size());
    for (std::size_t c = 0; c < out.names.size(); ++c)
      row[c] = csv::parse_real(table.cell(r, static_cast<int>(c + 4)), out.names[c]);
    out.unconstrained.push_back(std::move(row));
  }
  return out;
}

}  // namespace hjm
