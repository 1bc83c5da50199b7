#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hjm {

// Differentiable unnormalized log density. One instance per chain; the
// sampler never shares an instance across threads.
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;
  virtual int dim() const = 0;
  // log density at x; the gradient is written to grad (dim() slots)
  virtual double log_density(std::span<const double> x, std::span<double> grad) = 0;
};

struct ChainConfig {
  int chains = 4;
  int warmup = 1000;
  int samples = 1000;
  std::uint64_t seed = 0;
  double target_accept = 0.8;
  int max_tree_depth = 10;
  bool parallel = true;

  void validate() const;
};

// Retained draws in unconstrained coordinates, row-major
// (chains * samples) x dim, chain-major ordering.
struct PosteriorDraws {
  int dim = 0;
  int chains = 0;
  int samples = 0;
  std::vector<double> draws;
  std::vector<double> log_post;    // per draw
  std::vector<std::uint8_t> divergent;  // per draw
  std::vector<int> tree_depth;     // per draw
  std::vector<double> step_size;   // per chain, post-adaptation
  std::vector<int> warmup_divergences;  // per chain

  int n_draws() const { return chains * samples; }
  const double* row(int d) const { return draws.data() + static_cast<std::size_t>(d) * dim; }
  double at(int d, int p) const { return row(d)[p]; }
  int divergence_count() const;
};

// Dynamic multinomial HMC with dual-averaged step size and a diagonal mass
// matrix adapted over warmup windows. `make_target` is called once per
// chain so chains can run concurrently; `init` optionally fixes the
// starting point (otherwise uniform jitter on [-1, 1] per coordinate,
// re-jittered up to 100 times until the density is finite).
PosteriorDraws nuts_sample(
    const std::function<std::unique_ptr<TargetDensity>()>& make_target,
    const ChainConfig& config, const std::vector<double>* init = nullptr);

}  // namespace hjm
