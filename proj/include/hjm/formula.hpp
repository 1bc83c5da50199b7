#pragma once

#include <string>
#include <vector>

namespace hjm {

// One multiplicative factor of a design term.
struct Factor {
  enum class Kind {
    kCovariate,   // named numeric column, constant in time
    kTime,        // raw time t
    kTimePower,   // t^power
    kOrthoPoly,   // column poly_index (0-based) of the orthogonalized basis
  };
  Kind kind = Kind::kCovariate;
  std::string column;
  int power = 1;
  int poly_index = 0;
  int poly_degree = 0;

  bool time_dependent() const { return kind != Kind::kCovariate; }
  bool operator==(const Factor&) const = default;
};

// Product of factors; an empty factor list is the intercept.
struct Term {
  std::vector<Factor> factors;
  std::string name() const;
  bool operator==(const Term&) const = default;
};

struct RandomEffectBlock {
  std::string level;  // "patient", "cluster", or "group"
  std::vector<Term> terms;
};

struct ParsedFormula {
  std::string response;  // empty when the formula has no left-hand side
  std::vector<Term> fixed;
  std::vector<RandomEffectBlock> random;
};

// Grammar: [response ~] term (+ term)*, where a term is either
//   primary (* primary)*        R-style crossing: all nonempty subsets
//   primary (: primary)*        a single interaction
//   ( terms | level )           random effects at a named level
// and a primary is `1`, `time`, `pow(time,k)`, `poly(time,k)` (orthogonal,
// expands to k columns), or a covariate column name.
ParsedFormula parse_formula(const std::string& text);

// Highest orthogonal-polynomial degree referenced anywhere in the terms.
int max_poly_degree(const std::vector<Term>& terms);

}  // namespace hjm
