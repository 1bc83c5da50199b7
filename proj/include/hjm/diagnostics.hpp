#pragma once

#include <span>
#include <vector>

#include "hjm/nuts.hpp"

namespace hjm {

// Convergence measures for a single scalar parameter traced by several
// chains. `chains` is chain-major: chains * n values, n per chain.
struct ScalarDiagnostic {
  double rhat = 0.0;
  double ess = 0.0;
  bool degenerate = false;  // constant within every chain: both undefined
};

ScalarDiagnostic diagnose_scalar(std::span<const double> values, int chains);

// Per-parameter diagnostics for the columns of a draws matrix.
std::vector<ScalarDiagnostic> diagnose(const PosteriorDraws& draws,
                                       const std::vector<int>& columns);

}  // namespace hjm
