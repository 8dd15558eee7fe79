#pragma once

#include <map>
#include <string>
#include <vector>

#include "cvinv/rational.hpp"

namespace cvinv {

// Sparse multivariate polynomial with rational coefficients. Variables are
// indexed 0..nvars-1; exponent vectors are trimmed of trailing zeros so that
// polynomials over different variable counts compare equal when they should.
class Poly {
 public:
  using Exponents = std::vector<int>;

  Poly() = default;
  Poly(Rational c) {  // NOLINT: constants promote
    if (!c.is_zero()) terms_[{}] = c;
  }
  Poly(std::int64_t c) : Poly(Rational(c)) {}  // NOLINT

  static Poly var(int i) {
    Exponents e(i + 1, 0);
    e[i] = 1;
    Poly p;
    p.terms_[e] = Rational(1);
    return p;
  }

  const std::map<Exponents, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool depends_on(int v) const {
    for (const auto& [e, c] : terms_)
      if (v < int(e.size()) && e[v] > 0) return true;
    return false;
  }
  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int k : e) s += k;
      d = std::max(d, s);
    }
    return d;
  }

  friend Poly operator+(Poly a, const Poly& b) {
    for (const auto& [e, c] : b.terms_) a.add_term(e, c);
    return a;
  }
  friend Poly operator-(const Poly& a) {
    Poly r;
    for (const auto& [e, c] : a.terms_) r.terms_[e] = -c;
    return r;
  }
  friend Poly operator-(const Poly& a, const Poly& b) { return a + (-b); }
  friend Poly operator*(const Poly& a, const Poly& b) {
    Poly r;
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponents e(std::max(ea.size(), eb.size()), 0);
        for (std::size_t i = 0; i < ea.size(); ++i) e[i] += ea[i];
        for (std::size_t i = 0; i < eb.size(); ++i) e[i] += eb[i];
        r.add_term(e, ca * cb);
      }
    return r;
  }
  Poly& operator+=(const Poly& o) { return *this = *this + o; }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }
  friend bool operator==(const Poly& a, const Poly& b) { return a.terms_ == b.terms_; }

  Poly pow(int n) const {
    Poly r(1);
    for (int i = 0; i < n; ++i) r = r * *this;
    return r;
  }

  // Simultaneous substitution x_i -> sub[i] for i < sub.size(); other
  // variables are left alone.
  Poly substitute(const std::vector<Poly>& sub) const {
    Poly r;
    for (const auto& [e, c] : terms_) {
      Poly t(c);
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (e[i] == 0) continue;
        t = t * (i < sub.size() ? sub[i].pow(e[i]) : var(int(i)).pow(e[i]));
      }
      r += t;
    }
    return r;
  }

  double eval(const std::vector<double>& x) const {
    double s = 0;
    for (const auto& [e, c] : terms_) {
      double t = c.to_double();
      for (std::size_t i = 0; i < e.size(); ++i)
        for (int k = 0; k < e[i]; ++k) t *= i < x.size() ? x[i] : 0.0;
      s += t;
    }
    return s;
  }

  // names[i] labels variable i; missing names print as v<i>
  std::string str(const std::vector<std::string>& names = {}) const {
    if (terms_.empty()) return "0";
    std::string out;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [e, c] = *it;
      std::string mono;
      for (std::size_t i = 0; i < e.size(); ++i) {
        if (!e[i]) continue;
        if (!mono.empty()) mono += "*";
        mono += i < names.size() ? names[i] : "v" + std::to_string(i);
        if (e[i] > 1) mono += "^" + std::to_string(e[i]);
      }
      std::string coef = c.str();
      if (!out.empty()) out += c.num() < 0 ? " - " : " + ";
      else if (c.num() < 0) out += "-";
      if (c.num() < 0) coef = (-c).str();
      if (mono.empty()) out += coef;
      else if (coef == "1") out += mono;
      else out += coef + "*" + mono;
    }
    return out;
  }

 private:
  void add_term(Exponents e, const Rational& c) {
    while (!e.empty() && e.back() == 0) e.pop_back();
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (!c.is_zero()) terms_.emplace(std::move(e), c);
      return;
    }
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
  }

  std::map<Exponents, Rational> terms_;
};

}  // namespace cvinv
