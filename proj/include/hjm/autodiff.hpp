#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace hjm::ad {

// Reverse-mode tape over scalar operations. Nodes hold their value and a
// contiguous slice of (parent index, local partial) pairs in flat arrays;
// the reverse sweep visits each node exactly once. One tape per thread.
class Tape {
 public:
  using Index = std::uint32_t;

  void clear() {
    val_.clear();
    first_.clear();
    count_.clear();
    parent_.clear();
    partial_.clear();
  }

  std::size_t size() const { return val_.size(); }
  double value(Index i) const { return val_[i]; }

  Index input(double v) { return make_node(v, 0); }

  Index unary(double v, Index a, double da) {
    Index i = make_node(v, 1);
    parent_.push_back(a);
    partial_.push_back(da);
    return i;
  }

  Index binary(double v, Index a, double da, Index b, double db) {
    Index i = make_node(v, 2);
    parent_.push_back(a);
    partial_.push_back(da);
    parent_.push_back(b);
    partial_.push_back(db);
    return i;
  }

  Index nary(double v, std::span<const Index> parents, std::span<const double> partials) {
    Index i = make_node(v, static_cast<Index>(parents.size()));
    parent_.insert(parent_.end(), parents.begin(), parents.end());
    partial_.insert(partial_.end(), partials.begin(), partials.end());
    return i;
  }

  // Reverse sweep from `root`; the gradient with respect to the first
  // n_inputs nodes is written to grad.
  void gradient(Index root, std::size_t n_inputs, std::span<double> grad) {
    adj_.assign(val_.size(), 0.0);
    adj_[root] = 1.0;
    for (Index i = static_cast<Index>(val_.size()); i-- > 0;) {
      const double a = adj_[i];
      if (a == 0.0) continue;
      const Index f = first_[i];
      const Index e = f + count_[i];
      for (Index k = f; k < e; ++k) adj_[parent_[k]] += a * partial_[k];
    }
    for (std::size_t k = 0; k < n_inputs; ++k) grad[k] = adj_[k];
  }

 private:
  Index make_node(double v, Index nargs) {
    val_.push_back(v);
    first_.push_back(static_cast<Index>(parent_.size()));
    count_.push_back(nargs);
    return static_cast<Index>(val_.size() - 1);
  }

  std::vector<double> val_;
  std::vector<double> adj_;
  std::vector<Index> first_;
  std::vector<Index> count_;
  std::vector<Index> parent_;
  std::vector<double> partial_;
};

// A scalar that is either a recorded tape node or a plain constant (null
// tape). Constants let generic code write `T x = 0.0` for T in
// {double, Var}; arithmetic folds them without recording nodes.
class Var {
 public:
  Var() = default;
  Var(double v) : val_(v) {}  // NOLINT: implicit by design
  Var(Tape& tape, double v) : tape_(&tape), idx_(tape.input(v)), val_(v) {}
  Var(Tape* tape, Tape::Index idx, double v) : tape_(tape), idx_(idx), val_(v) {}

  double value() const { return val_; }
  bool is_const() const { return tape_ == nullptr; }
  Tape* tape() const { return tape_; }
  Tape::Index index() const { return idx_; }

 private:
  Tape* tape_ = nullptr;
  Tape::Index idx_ = 0;
  double val_ = 0.0;
};

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

inline Var operator+(const Var& a, const Var& b) {
  const double v = a.value() + b.value();
  if (a.is_const() && b.is_const()) return v;
  if (a.is_const()) return {b.tape(), b.tape()->unary(v, b.index(), 1.0), v};
  if (b.is_const()) return {a.tape(), a.tape()->unary(v, a.index(), 1.0), v};
  return {a.tape(), a.tape()->binary(v, a.index(), 1.0, b.index(), 1.0), v};
}

inline Var operator-(const Var& a, const Var& b) {
  const double v = a.value() - b.value();
  if (a.is_const() && b.is_const()) return v;
  if (a.is_const()) return {b.tape(), b.tape()->unary(v, b.index(), -1.0), v};
  if (b.is_const()) return {a.tape(), a.tape()->unary(v, a.index(), 1.0), v};
  return {a.tape(), a.tape()->binary(v, a.index(), 1.0, b.index(), -1.0), v};
}

inline Var operator-(const Var& a) {
  if (a.is_const()) return -a.value();
  return {a.tape(), a.tape()->unary(-a.value(), a.index(), -1.0), -a.value()};
}

inline Var operator*(const Var& a, const Var& b) {
  const double v = a.value() * b.value();
  if (a.is_const() && b.is_const()) return v;
  if (a.is_const()) return {b.tape(), b.tape()->unary(v, b.index(), a.value()), v};
  if (b.is_const()) return {a.tape(), a.tape()->unary(v, a.index(), b.value()), v};
  return {a.tape(), a.tape()->binary(v, a.index(), b.value(), b.index(), a.value()), v};
}

inline Var operator/(const Var& a, const Var& b) {
  const double bv = b.value();
  const double v = a.value() / bv;
  if (a.is_const() && b.is_const()) return v;
  if (a.is_const()) return {b.tape(), b.tape()->unary(v, b.index(), -v / bv), v};
  if (b.is_const()) return {a.tape(), a.tape()->unary(v, a.index(), 1.0 / bv), v};
  return {a.tape(), a.tape()->binary(v, a.index(), 1.0 / bv, b.index(), -v / bv), v};
}

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }
inline Var& operator/=(Var& a, const Var& b) { return a = a / b; }

#define HJM_AD_UNARY(NAME, VALUE_EXPR, PARTIAL_EXPR)                    \
  inline Var NAME(const Var& a) {                                      \
    const double x = a.value();                                        \
    const double v = (VALUE_EXPR);                                     \
    if (a.is_const()) return v;                                        \
    return {a.tape(), a.tape()->unary(v, a.index(), (PARTIAL_EXPR)), v}; \
  }

HJM_AD_UNARY(exp, std::exp(x), v)
HJM_AD_UNARY(log, std::log(x), 1.0 / x)
HJM_AD_UNARY(log1p, std::log1p(x), 1.0 / (1.0 + x))
HJM_AD_UNARY(sqrt, std::sqrt(x), 0.5 / v)
HJM_AD_UNARY(tanh, std::tanh(x), 1.0 - v * v)
HJM_AD_UNARY(square, x* x, 2.0 * x)
#undef HJM_AD_UNARY

inline double square(double a) { return a * a; }

inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }

// Max/min selection: the gradient follows the selected branch, the lowest
// index winning ties.
template <class T>
const T& max_select(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j)
    if (value_of(values[j]) > value_of(values[best])) best = j;
  return values[best];
}

template <class T>
const T& min_select(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < values.size(); ++j)
    if (value_of(values[j]) < value_of(values[best])) best = j;
  return values[best];
}

// Dense dot product of constant coefficients with variables: one tape node.
inline Var dot(std::span<const double> coef, std::span<const Var> vars) {
  thread_local std::vector<Tape::Index> parents;
  thread_local std::vector<double> partials;
  parents.clear();
  partials.clear();
  double total = 0.0;
  Tape* tape = nullptr;
  for (std::size_t k = 0; k < coef.size(); ++k) {
    total += coef[k] * vars[k].value();
    if (!vars[k].is_const()) {
      parents.push_back(vars[k].index());
      partials.push_back(coef[k]);
      tape = vars[k].tape();
    }
  }
  if (!tape) return total;
  return {tape, tape->nary(total, parents, partials), total};
}

inline double dot(std::span<const double> coef, std::span<const double> vars) {
  double total = 0.0;
  for (std::size_t k = 0; k < coef.size(); ++k) total += coef[k] * vars[k];
  return total;
}

}  // namespace hjm::ad
