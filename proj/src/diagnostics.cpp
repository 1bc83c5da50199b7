#include "hjm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hjm/error.hpp"
#include "hjm/rng.hpp"
#include "hjm/stats.hpp"

namespace hjm {

namespace {

// Potential scale reduction on a chains x n matrix (chain-major).
double psrf(std::span<const double> v, int m, int n) {
  std::vector<double> chain_mean(m), chain_var(m);
  for (int c = 0; c < m; ++c) {
    auto seg = v.subspan(static_cast<std::size_t>(c) * n, n);
    chain_mean[c] = mean(seg);
    double ss = 0.0;
    for (double x : seg) ss += (x - chain_mean[c]) * (x - chain_mean[c]);
    chain_var[c] = ss / (n - 1.0);
  }
  const double grand = mean(chain_mean);
  double b = 0.0;
  for (double cm : chain_mean) b += (cm - grand) * (cm - grand);
  b *= n / (m - 1.0);
  const double w = mean(chain_var);
  if (w <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

// Effective sample size from chain-averaged autocorrelations with Geyer's
// initial-monotone-positive-sequence truncation.
double ess_raw(std::span<const double> v, int m, int n) {
  std::vector<double> chain_mean(m), chain_var(m);
  std::vector<std::vector<double>> acov(m, std::vector<double>(n, 0.0));
  for (int c = 0; c < m; ++c) {
    auto seg = v.subspan(static_cast<std::size_t>(c) * n, n);
    chain_mean[c] = mean(seg);
    for (int t = 0; t < n; ++t) {
      double s = 0.0;
      for (int i = 0; i + t < n; ++i)
        s += (seg[i] - chain_mean[c]) * (seg[i + t] - chain_mean[c]);
      acov[c][t] = s / n;
    }
    chain_var[c] = acov[c][0] * n / (n - 1.0);
  }
  const double grand = mean(chain_mean);
  double b_over_n = 0.0;
  if (m > 1) {
    for (double cm : chain_mean) b_over_n += (cm - grand) * (cm - grand);
    b_over_n /= (m - 1.0);
  }
  const double w = mean(chain_var);
  const double var_plus = (n - 1.0) / n * w + b_over_n;
  if (var_plus <= 0.0) return std::numeric_limits<double>::quiet_NaN();

  auto rho = [&](int t) {
    double a = 0.0;
    for (int c = 0; c < m; ++c) a += acov[c][t];
    a /= m;
    return 1.0 - (w - a) / var_plus;
  };

  // paired sums; stop at the first non-positive pair, enforce monotonicity
  double tau = 1.0;  // rho_0 counted once; pairs start at lag 1
  double prev_pair = std::numeric_limits<double>::infinity();
  for (int t = 1; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  return static_cast<double>(m) * n / tau;
}

// Rank-normalize (fractional offset rule), preserving layout.
std::vector<double> rank_normalize(std::span<const double> v) {
  auto ranks = average_ranks(v);
  const double s = static_cast<double>(v.size());
  std::vector<double> z(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    z[i] = inverse_normal_cdf((ranks[i] - 0.375) / (s + 0.25));
  return z;
}

}  // namespace

ScalarDiagnostic diagnose_scalar(std::span<const double> values, int chains) {
  if (chains < 1 || values.size() % chains != 0)
    throw ValidationError("diagnostics: values not divisible into chains");
  const int n = static_cast<int>(values.size()) / chains;
  if (n < 4) throw ValidationError("diagnostics need at least 4 draws per chain");

  ScalarDiagnostic out;
  bool constant = true;
  for (std::size_t i = 1; i < values.size() && constant; ++i)
    constant = values[i] == values[0];
  if (constant) {
    out.degenerate = true;
    out.rhat = std::numeric_limits<double>::quiet_NaN();
    out.ess = std::numeric_limits<double>::quiet_NaN();
    return out;
  }

  // split each chain in half
  const int half = n / 2;
  std::vector<double> split;
  split.reserve(static_cast<std::size_t>(2 * chains) * half);
  for (int c = 0; c < chains; ++c) {
    const double* seg = values.data() + static_cast<std::size_t>(c) * n;
    split.insert(split.end(), seg, seg + half);
    split.insert(split.end(), seg + (n - half), seg + n);
  }
  const int m = 2 * chains;

  auto z = rank_normalize(split);
  if (chains >= 2) {
    out.rhat = psrf(z, m, half);
  } else {
    out.rhat = std::numeric_limits<double>::quiet_NaN();  // single chain: unavailable
  }
  out.ess = ess_raw(split, m, half);
  return out;
}

std::vector<ScalarDiagnostic> diagnose(const PosteriorDraws& draws,
                                       const std::vector<int>& columns) {
  std::vector<ScalarDiagnostic> out;
  out.reserve(columns.size());
  std::vector<double> column(draws.n_draws());
  for (int p : columns) {
    for (int d = 0; d < draws.n_draws(); ++d) column[d] = draws.at(d, p);
    out.push_back(diagnose_scalar(column, draws.chains));
  }
  return out;
}

}  // namespace hjm
