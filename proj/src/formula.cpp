#include "hjm/formula.hpp"

#include <algorithm>
#include <cctype>

#include "hjm/error.hpp"

namespace hjm {

namespace {

std::string strip(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Splits on `sep` at paren depth zero.
std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      out.push_back(strip(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(strip(cur));
  return out;
}

// Expands a primary into one or more factors ("1" expands to none,
// poly(time,k) expands to its k columns).
std::vector<std::vector<Factor>> expand_primary(const std::string& text) {
  const std::string p = strip(text);
  if (p.empty()) throw ParseError("empty term in formula");
  if (p == "1") return {{}};
  if (p == "0") throw ParseError("`0` terms are not supported; omit the intercept instead");
  if (p == "time") {
    Factor f;
    f.kind = Factor::Kind::kTime;
    return {{f}};
  }
  auto call = [&](const std::string& fn) -> int {
    // returns k for "fn(time,k)", -1 if not this call
    if (p.rfind(fn + "(", 0) != 0 || p.back() != ')') return -1;
    std::string inner = p.substr(fn.size() + 1, p.size() - fn.size() - 2);
    auto parts = split_top(inner, ',');
    if (parts.size() != 2 || strip(parts[0]) != "time")
      throw ParseError("expected " + fn + "(time, k) in formula, got \"" + p + "\"");
    int k = 0;
    try {
      k = std::stoi(strip(parts[1]));
    } catch (...) {
      throw ParseError("bad degree in \"" + p + "\"");
    }
    if (k < 1) throw ParseError("degree must be >= 1 in \"" + p + "\"");
    return k;
  };
  if (int k = call("pow"); k > 0) {
    Factor f;
    f.kind = Factor::Kind::kTimePower;
    f.power = k;
    return {{f}};
  }
  if (int k = call("poly"); k > 0) {
    std::vector<std::vector<Factor>> cols;
    for (int j = 0; j < k; ++j) {
      Factor f;
      f.kind = Factor::Kind::kOrthoPoly;
      f.poly_index = j;
      f.poly_degree = k;
      cols.push_back({f});
    }
    return cols;
  }
  for (char c : p)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
      throw ParseError("bad token \"" + p + "\" in formula");
  Factor f;
  f.kind = Factor::Kind::kCovariate;
  f.column = p;
  return {{f}};
}

void append_unique(std::vector<Term>& terms, Term t) {
  if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(std::move(t));
}

// Cartesian product of per-primary column expansions into concrete terms.
void expand_product(const std::vector<std::string>& primaries, std::vector<Term>& out) {
  std::vector<std::vector<std::vector<Factor>>> expansions;
  for (const auto& p : primaries) expansions.push_back(expand_primary(p));
  std::vector<std::size_t> pick(expansions.size(), 0);
  while (true) {
    Term t;
    for (std::size_t i = 0; i < expansions.size(); ++i)
      for (const auto& f : expansions[i][pick[i]]) t.factors.push_back(f);
    append_unique(out, std::move(t));
    std::size_t i = 0;
    for (; i < expansions.size(); ++i) {
      if (++pick[i] < expansions[i].size()) break;
      pick[i] = 0;
    }
    if (i == expansions.size()) break;
  }
}

std::vector<Term> parse_terms(const std::string& rhs) {
  std::vector<Term> out;
  for (const auto& addend : split_top(rhs, '+')) {
    if (addend.empty()) throw ParseError("empty addend in formula \"" + rhs + "\"");
    auto crossed = split_top(addend, '*');
    if (crossed.size() > 1) {
      // R semantics: a*b expands to a + b + a:b (all nonempty subsets).
      const std::size_t n = crossed.size();
      for (std::size_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<std::string> subset;
        for (std::size_t i = 0; i < n; ++i)
          if (mask & (1u << i)) subset.push_back(crossed[i]);
        expand_product(subset, out);
      }
    } else {
      expand_product(split_top(addend, ':'), out);
    }
  }
  return out;
}

}  // namespace

std::string Term::name() const {
  if (factors.empty()) return "intercept";
  std::string out;
  for (const auto& f : factors) {
    if (!out.empty()) out += ":";
    switch (f.kind) {
      case Factor::Kind::kCovariate: out += f.column; break;
      case Factor::Kind::kTime: out += "time"; break;
      case Factor::Kind::kTimePower: out += "time^" + std::to_string(f.power); break;
      case Factor::Kind::kOrthoPoly:
        out += "poly(time," + std::to_string(f.poly_degree) + ")[" +
               std::to_string(f.poly_index + 1) + "]";
        break;
    }
  }
  return out;
}

ParsedFormula parse_formula(const std::string& text) {
  ParsedFormula out;
  std::string rhs = text;
  auto tilde = split_top(text, '~');
  if (tilde.size() == 2) {
    out.response = tilde[0];
    rhs = tilde[1];
  } else if (tilde.size() > 2) {
    throw ParseError("more than one ~ in formula");
  }
  for (const auto& addend : split_top(rhs, '+')) {
    if (addend.size() >= 2 && addend.front() == '(' && addend.back() == ')' &&
        addend.find('|') != std::string::npos) {
      std::string inner = addend.substr(1, addend.size() - 2);
      auto parts = split_top(inner, '|');
      if (parts.size() != 2) throw ParseError("bad random-effect block \"" + addend + "\"");
      RandomEffectBlock block;
      block.level = parts[1];
      if (block.level != "patient" && block.level != "cluster" && block.level != "group")
        throw ParseError("random-effect level must be patient, cluster, or group, got \"" +
                          block.level + "\"");
      block.terms = parse_terms(parts[0]);
      out.random.push_back(std::move(block));
    } else {
      for (auto& t : parse_terms(addend)) append_unique(out.fixed, std::move(t));
    }
  }
  return out;
}

int max_poly_degree(const std::vector<Term>& terms) {
  int deg = 0;
  for (const auto& t : terms)
    for (const auto& f : t.factors)
      if (f.kind == Factor::Kind::kOrthoPoly) deg = std::max(deg, f.poly_degree);
  return deg;
}

}  // namespace hjm
