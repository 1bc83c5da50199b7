#include "hjm/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "hjm/error.hpp"
#include "hjm/rng.hpp"

namespace hjm {

void ChainConfig::validate() const {
  if (chains < 1 || warmup < 1 || samples < 1)
    throw ValidationError("chain counts must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw ValidationError("target acceptance must lie in (0, 1)");
  if (max_tree_depth < 1) throw ValidationError("max tree depth must be positive");
}

int PosteriorDraws::divergence_count() const {
  int n = 0;
  for (auto d : divergent) n += d;
  return n;
}

namespace {

constexpr double kDivergenceGap = 1000.0;

// position/momentum/gradient triple at one end of the trajectory
struct Phase {
  std::vector<double> q, p, grad;
  double logp = 0.0;
};

struct TreeResult {
  std::vector<double> q_prop;
  double logp_prop = 0.0;
  double log_sum_w = -std::numeric_limits<double>::infinity();
  double sum_accept = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
  bool turning = false;
  std::vector<double> q_begin, p_begin;  // first state of this subtree
};

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (a > b) return a + std::log1p(std::exp(b - a));
  return b + std::log1p(std::exp(a - b));
}

class Chain {
 public:
  Chain(TargetDensity& target, const ChainConfig& cfg, Rng rng)
      : target_(target), cfg_(cfg), rng_(rng), dim_(target.dim()), inv_mass_(dim_, 1.0) {}

  void run(const std::vector<double>* init, int chain_index, PosteriorDraws& out);

 private:
  double hamiltonian(const Phase& z) const {
    double kin = 0.0;
    for (int k = 0; k < dim_; ++k) kin += z.p[k] * z.p[k] * inv_mass_[k];
    return -z.logp + 0.5 * kin;
  }

  void leapfrog(Phase& z, double direction) {
    const double eps = direction * step_;
    for (int k = 0; k < dim_; ++k) z.p[k] += 0.5 * eps * z.grad[k];
    for (int k = 0; k < dim_; ++k) z.q[k] += eps * inv_mass_[k] * z.p[k];
    z.logp = target_.log_density(z.q, z.grad);
    for (int k = 0; k < dim_; ++k) z.p[k] += 0.5 * eps * z.grad[k];
  }

  bool uturn(const std::vector<double>& q_minus, const std::vector<double>& p_minus,
             const std::vector<double>& q_plus, const std::vector<double>& p_plus) const {
    double fwd = 0.0, bwd = 0.0;
    for (int k = 0; k < dim_; ++k) {
      const double dq = q_plus[k] - q_minus[k];
      fwd += dq * inv_mass_[k] * p_plus[k];
      bwd += dq * inv_mass_[k] * p_minus[k];
    }
    return fwd < 0.0 || bwd < 0.0;
  }

  bool uturn(const Phase& minus, const Phase& plus) const {
    return uturn(minus.q, minus.p, plus.q, plus.p);
  }

  // Doubles the trajectory away from `edge`; multinomial weights relative
  // to the initial Hamiltonian h0.
  TreeResult build_tree(int depth, Phase& edge, double direction, double h0) {
    if (depth == 0) {
      leapfrog(edge, direction);
      TreeResult leaf;
      leaf.n_leapfrog = 1;
      const double h = hamiltonian(edge);
      const double dh = h0 - h;  // log weight
      if (!std::isfinite(h) || h - h0 > kDivergenceGap) {
        leaf.divergent = true;
        return leaf;
      }
      leaf.q_prop = edge.q;
      leaf.logp_prop = edge.logp;
      leaf.log_sum_w = dh;
      leaf.sum_accept = std::min(1.0, std::exp(dh));
      leaf.q_begin = edge.q;
      leaf.p_begin = edge.p;
      return leaf;
    }

    TreeResult inner = build_tree(depth - 1, edge, direction, h0);
    if (inner.divergent || inner.turning) return inner;

    TreeResult outer = build_tree(depth - 1, edge, direction, h0);
    inner.n_leapfrog += outer.n_leapfrog;
    inner.sum_accept += outer.sum_accept;
    if (outer.divergent || outer.turning) {
      inner.divergent = outer.divergent;
      inner.turning = outer.turning;
      return inner;
    }

    const double total = log_add_exp(inner.log_sum_w, outer.log_sum_w);
    if (std::log(rng_.uniform()) < outer.log_sum_w - total) {
      inner.q_prop = std::move(outer.q_prop);
      inner.logp_prop = outer.logp_prop;
    }
    inner.log_sum_w = total;
    // U-turn across the combined subtree, from its first state to `edge`
    inner.turning = direction > 0 ? uturn(inner.q_begin, inner.p_begin, edge.q, edge.p)
                                  : uturn(edge.q, edge.p, inner.q_begin, inner.p_begin);
    return inner;
  }

  // One NUTS transition; returns the average leapfrog acceptance statistic.
  double transition(Phase& z, bool& divergent, int& depth_out) {
    for (int k = 0; k < dim_; ++k) z.p[k] = rng_.normal() / std::sqrt(inv_mass_[k]);
    const double h0 = hamiltonian(z);

    Phase fwd = z, bwd = z;
    std::vector<double> q_sel = z.q;
    double logp_sel = z.logp;
    double log_sum_w = 0.0;  // weight of the initial point is exp(0)
    double sum_accept = 0.0;
    int n_leapfrog = 0;
    divergent = false;
    int depth = 0;

    while (depth < cfg_.max_tree_depth) {
      const double direction = rng_.uniform() < 0.5 ? -1.0 : 1.0;
      Phase& edge = direction > 0 ? fwd : bwd;
      TreeResult sub = build_tree(depth, edge, direction, h0);
      sum_accept += sub.sum_accept;
      n_leapfrog += sub.n_leapfrog;
      if (sub.divergent) {
        divergent = true;
        break;
      }
      if (sub.turning) break;

      // biased progressive sampling: favor the fresh subtree
      if (std::log(rng_.uniform()) < sub.log_sum_w - log_sum_w) {
        q_sel = std::move(sub.q_prop);
        logp_sel = sub.logp_prop;
      }
      log_sum_w = log_add_exp(log_sum_w, sub.log_sum_w);
      ++depth;
      if (uturn(bwd, fwd)) break;
    }

    depth_out = depth;
    if (z.q != q_sel) {
      z.q = q_sel;
      z.logp = target_.log_density(z.q, z.grad);
    }
    return n_leapfrog > 0 ? sum_accept / n_leapfrog : 0.0;
  }

  void find_initial_step(const Phase& z0) {
    step_ = 1.0;
    Phase z = z0;
    for (int k = 0; k < dim_; ++k) z.p[k] = rng_.normal() / std::sqrt(inv_mass_[k]);
    const double h0 = hamiltonian(z);
    auto probe = [&]() {
      Phase trial = z;
      leapfrog(trial, 1.0);
      const double h = hamiltonian(trial);
      return std::isfinite(h) ? h0 - h : -std::numeric_limits<double>::infinity();
    };
    double dh = probe();
    const double dir = dh > std::log(0.5) ? 1.0 : -1.0;
    for (int iter = 0; iter < 100; ++iter) {
      step_ *= dir > 0 ? 2.0 : 0.5;
      dh = probe();
      if ((dir > 0 && dh <= std::log(0.5)) || (dir < 0 && dh >= std::log(0.5))) break;
      if (step_ > 1e7 || step_ < 1e-10) break;
    }
  }

  TargetDensity& target_;
  const ChainConfig& cfg_;
  Rng rng_;
  int dim_;
  std::vector<double> inv_mass_;
  double step_ = 1.0;
};

// Warmup schedule (slow-start / expanding windows / fast tail) for the
// diagonal mass adaptation.
struct AdaptWindows {
  int init_buffer = 75, term_buffer = 50, base_window = 25;

  explicit AdaptWindows(int warmup) {
    if (init_buffer + base_window + term_buffer > warmup) {
      init_buffer = warmup / 4;
      term_buffer = warmup / 4;
      base_window = warmup - init_buffer - term_buffer;
    }
  }

  // true when iteration `it` (0-based) closes a variance-estimation window
  bool window_end(int it, int warmup) const {
    if (it < init_buffer || it >= warmup - term_buffer) return false;
    int w = base_window, end = init_buffer + w;
    while (end <= it) {
      if (end + 2 * w + term_buffer > warmup) return false;  // folded into the last window
      w *= 2;
      end += w;
    }
    return it == end - 1;
  }

  bool in_window(int it, int warmup) const {
    return it >= init_buffer && it < warmup - term_buffer;
  }
};

void Chain::run(const std::vector<double>* init, int chain_index, PosteriorDraws& out) {
  Phase z;
  z.q.assign(dim_, 0.0);
  z.p.assign(dim_, 0.0);
  z.grad.assign(dim_, 0.0);

  bool ok = false;
  for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
    if (init) {
      z.q = *init;
      if (attempt > 0)
        for (double& q : z.q) q += rng_.uniform(-1.0, 1.0);
    } else {
      for (double& q : z.q) q = rng_.uniform(-1.0, 1.0);
    }
    z.logp = target_.log_density(z.q, z.grad);
    ok = std::isfinite(z.logp);
    for (double g : z.grad) ok = ok && std::isfinite(g);
  }
  if (!ok)
    throw NumericalError("chain " + std::to_string(chain_index) +
                         ": log posterior not finite after 100 initialization attempts");

  find_initial_step(z);

  // dual averaging (Hoffman-Gelman constants)
  const double gamma = 0.05, t0 = 10.0, kappa = 0.75;
  double mu = std::log(10.0 * step_);
  double log_step_bar = 0.0, h_bar = 0.0;

  AdaptWindows windows(cfg_.warmup);
  std::vector<double> welford_mean(dim_, 0.0), welford_m2(dim_, 0.0);
  long welford_n = 0;

  bool divergent = false;
  int depth = 0;
  int da_it = 0;  // dual-averaging clock, restarted with each mass window
  for (int it = 0; it < cfg_.warmup; ++it) {
    const double accept = transition(z, divergent, depth);
    if (divergent) ++out.warmup_divergences[chain_index];

    ++da_it;
    const double eta = 1.0 / (da_it + t0);
    h_bar = (1.0 - eta) * h_bar + eta * (cfg_.target_accept - accept);
    const double log_step = mu - std::sqrt(static_cast<double>(da_it)) / gamma * h_bar;
    const double w = std::pow(static_cast<double>(da_it), -kappa);
    log_step_bar = w * log_step + (1.0 - w) * log_step_bar;
    step_ = std::exp(log_step);

    if (windows.in_window(it, cfg_.warmup)) {
      ++welford_n;
      for (int k = 0; k < dim_; ++k) {
        const double d = z.q[k] - welford_mean[k];
        welford_mean[k] += d / welford_n;
        welford_m2[k] += d * (z.q[k] - welford_mean[k]);
      }
      if (windows.window_end(it, cfg_.warmup) && welford_n > 1) {
        const double n = static_cast<double>(welford_n);
        for (int k = 0; k < dim_; ++k) {
          const double var = welford_m2[k] / (n - 1.0);
          inv_mass_[k] = n / (n + 5.0) * var + 1e-3 * (5.0 / (n + 5.0));
        }
        welford_mean.assign(dim_, 0.0);
        welford_m2.assign(dim_, 0.0);
        welford_n = 0;
        find_initial_step(z);
        mu = std::log(10.0 * step_);
        log_step_bar = std::log(step_);
        h_bar = 0.0;
        da_it = 0;
      }
    }
  }
  step_ = std::exp(log_step_bar);
  out.step_size[chain_index] = step_;

  for (int s = 0; s < cfg_.samples; ++s) {
    transition(z, divergent, depth);
    const int d = chain_index * cfg_.samples + s;
    std::copy(z.q.begin(), z.q.end(), out.draws.begin() + static_cast<std::size_t>(d) * dim_);
    out.log_post[d] = z.logp;
    out.divergent[d] = divergent ? 1 : 0;
    out.tree_depth[d] = depth;
  }
}

}  // namespace

PosteriorDraws nuts_sample(
    const std::function<std::unique_ptr<TargetDensity>()>& make_target,
    const ChainConfig& config, const std::vector<double>* init) {
  config.validate();

  PosteriorDraws out;
  {
    auto probe = make_target();
    out.dim = probe->dim();
  }
  out.chains = config.chains;
  out.samples = config.samples;
  out.draws.assign(static_cast<std::size_t>(out.n_draws()) * out.dim, 0.0);
  out.log_post.assign(out.n_draws(), 0.0);
  out.divergent.assign(out.n_draws(), 0);
  out.tree_depth.assign(out.n_draws(), 0);
  out.step_size.assign(config.chains, 0.0);
  out.warmup_divergences.assign(config.chains, 0);

  std::exception_ptr first_error;
  auto run_chain = [&](int c) {
    auto target = make_target();
    Chain chain(*target, config, Rng(config.seed, static_cast<std::uint64_t>(c) + 1));
    chain.run(init, c, out);
  };

  if (config.parallel && config.chains > 1) {
    std::vector<std::thread> threads;
    std::mutex err_mutex;
    for (int c = 0; c < config.chains; ++c)
      threads.emplace_back([&, c] {
        try {
          run_chain(c);
        } catch (...) {
          std::scoped_lock lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    for (auto& t : threads) t.join();
  } else {
    for (int c = 0; c < config.chains; ++c) run_chain(c);
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace hjm
