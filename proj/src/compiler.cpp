#include "cvinv/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <tuple>
#include <type_traits>

namespace cvinv {

using nlohmann::json;

namespace {

template <class C>
C q(std::int64_t n, std::int64_t d = 1) {
  if constexpr (std::is_same_v<C, double>) return double(n) / double(d);
  else return C(Rational(n, d));
}

Factor X(int m, int n = 1) { return {m, Quad::X, n}; }
Factor P(int m, int n = 1) { return {m, Quad::P, n}; }

// e^{i c P_j m}
template <class C>
Exp<C> shift(int j, const C& c, std::vector<Factor> m) {
  m.insert(m.begin(), P(j));
  return {c, std::move(m), -1};
}
template <class C>
Exp<C> phase(const C& c, std::vector<Factor> m, int helper = -1) {
  return {c, std::move(m), helper};
}

void require_distinct(const std::vector<int>& modes) {
  std::set<int> s(modes.begin(), modes.end());
  if (s.size() != modes.size()) throw Error(ErrorCode::DuplicateModes, "rule modes must be distinct");
  for (int m : modes)
    if (m < 0) throw Error(ErrorCode::InvalidArgument, "negative mode index");
}

}  // namespace

// ---- rule products ---------------------------------------------------------

template <class C>
std::vector<Exp<C>> product_xxx(int j, int k, int l, const C& d) {
  const C d3 = d * q<C>(1, 3), two = q<C>(2), m2 = q<C>(-2);
  return {shift(j, two, {X(k)}),  shift(j, two, {X(l)}),  phase(d3, {X(j, 3)}), shift(j, m2, {X(l)}),
          shift(j, m2, {X(k)}),   shift(k, two, {X(l)}),  phase(-d3, {X(k, 3)}), shift(k, m2, {X(l)}),
          shift(l, two, {X(j)}),  phase(-d3, {X(l, 3)}), shift(l, m2, {X(j)}),  shift(j, two, {X(k)}),
          phase(-d3, {X(j, 3)}), shift(j, m2, {X(k)}),  phase(d3, {X(j, 3)}),  phase(d3, {X(k, 3)}),
          phase(d3, {X(l, 3)})};
}

template <class C>
std::vector<Exp<C>> product_x2xx(int j, int k, int l, const C& d) {
  const C two = q<C>(2), m2 = q<C>(-2);
  return {shift(k, two, {X(l)}),    shift(k, two, {X(j, 2)}), phase(d, {X(k, 3)}),     shift(k, m2, {X(j, 2)}),
          shift(k, m2, {X(l)}),     shift(k, two, {X(j, 2)}), phase(-d, {X(k, 3)}),    shift(k, m2, {X(j, 2)}),
          shift(k, two, {X(l)}),    phase(-d, {X(k, 3)}),    shift(k, m2, {X(l)}),     shift(l, two, {X(j, 2)}),
          phase(-d, {X(l, 3)}),    shift(l, m2, {X(j, 2)}), phase(d, {X(k, 3)}),      phase(d, {X(j, 6)}, k),
          phase(d, {X(l, 3)})};
}

template <class C>
std::vector<Exp<C>> product_px2(int k, int j, const C& a, const C& kap) {
  // The cubic correction is -9/4 a^3 kap; the printed 3/4 leaves a residual
  // e^{i 3 a^3 kap X_j^3} (see tests).
  return {phase(kap, {P(k, 3)}),        phase(-a, {X(j), X(k)}),       phase(-kap, {P(k, 3)}),
          phase(-(a * q<C>(2)), {X(j), X(k)}), phase(kap, {P(k, 3)}),        phase(a, {X(j), X(k)}),
          phase(-kap, {P(k, 3)}),       phase(a * q<C>(2), {X(j), X(k)}), phase(a * a * a * kap * q<C>(-9, 4), {X(j, 3)})};
}

template <class C>
std::vector<Exp<C>> product_x6(int j, int k, const C& d) {
  return {shift(k, q<C>(2), {X(j, 3)}), phase(d, {X(k, 2)}), shift(k, q<C>(-2), {X(j, 3)}), phase(-d, {X(k, 2)}),
          phase(d * q<C>(-2), {X(k), X(j, 3)})};
}

template <class C>
std::vector<Exp<C>> product_px3(int k, int j, const C& a) {
  // quartic correction -a^3 (printed -2 a^3)
  return {phase(-a, {X(j, 2), P(k, 2)}), phase(a * q<C>(-2), {X(j), X(k)}), phase(a, {X(j, 2), P(k, 2)}),
          phase(a * q<C>(2), {X(j), X(k)}), phase(-(a * a * a), {X(j, 4)}, k)};
}

template <class C>
std::vector<Exp<C>> product_x2x2(int j, int k, const C& a) {
  const C a12 = a * q<C>(1, 12), a6 = a * q<C>(-1, 6);
  return {shift(j, q<C>(2), {X(k)}),  phase(a12, {X(j, 4)}, k), shift(j, q<C>(-4), {X(k)}), phase(a12, {X(j, 4)}, k),
          shift(j, q<C>(2), {X(k)}),  phase(a6, {X(j, 4)}, k),  phase(a6, {X(k, 4)}, j)};
}

template <class C>
std::vector<Exp<C>> product_x4(int k, int j, const C& a) {
  return {shift(j, q<C>(2), {X(k, 2)}), phase(a, {X(j, 2)}), shift(j, q<C>(-2), {X(k, 2)}), phase(-a, {X(j, 2)}),
          phase(a * q<C>(-2), {X(j), X(k, 2)})};
}

#define CVINV_INSTANTIATE(C)                                                                \
  template std::vector<Exp<C>> product_xxx<C>(int, int, int, const C&);                     \
  template std::vector<Exp<C>> product_x2xx<C>(int, int, int, const C&);                    \
  template std::vector<Exp<C>> product_px2<C>(int, int, const C&, const C&);                \
  template std::vector<Exp<C>> product_x6<C>(int, int, const C&);                           \
  template std::vector<Exp<C>> product_px3<C>(int, int, const C&);                          \
  template std::vector<Exp<C>> product_x2x2<C>(int, int, const C&);                         \
  template std::vector<Exp<C>> product_x4<C>(int, int, const C&);
CVINV_INSTANTIATE(double)
CVINV_INSTANTIATE(Poly)
#undef CVINV_INSTANTIATE

// ---- rewrite tree ----------------------------------------------------------

const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::Fourier: return "FOURIER";
    case GateKind::PhaseX1: return "PHASEX1";
    case GateKind::PhaseX2: return "PHASEX2";
    case GateKind::PhaseX3: return "PHASEX3";
    case GateKind::CZ: return "CZ";
  }
  return "?";
}

namespace {

Node leaf_node(const Exp<double>& e) {
  Node n;
  n.rule = "leaf";
  n.leaf = e;
  return n;
}

Node wrap_node(int m, Node inner) {
  Node n;
  n.rule = "wrap";
  n.modes = {m};
  n.children.push_back(std::move(inner));
  return n;
}

std::string mono_str(const std::vector<Factor>& mono) {
  std::string s;
  for (const Factor& f : mono)
    s += std::string(f.q == Quad::X ? "X" : "P") + std::to_string(f.mode) + "^" + std::to_string(f.power) + " ";
  return s;
}

// Map one abstract factor onto a gate-set leaf or a further rule.
Node resolve(const Exp<double>& e) {
  const auto& m = e.mono;
  auto unsupported = [&] {
    return Error(ErrorCode::UnsupportedTermDegree, "no decomposition for factor " + mono_str(m));
  };
  if (m.size() == 1) {
    const Factor& f = m[0];
    if (f.power >= 1 && f.power <= 3) return leaf_node(e);
    if (f.q == Quad::X && (f.power == 4 || f.power == 6)) {
      if (e.helper < 0) throw Error(ErrorCode::UnsupportedTermDegree, "X^4 / X^6 factor without a helper mode");
      if (f.power == 4) return expand("x4", {f.mode, e.helper}, {e.coeff});
      return expand("x6", {f.mode, e.helper}, {e.coeff});
    }
    throw unsupported();
  }
  if (m.size() != 2 || m[0].mode == m[1].mode) throw unsupported();
  if (m[0].power == 1 && m[1].power == 1) return leaf_node(e);
  // order so that a has the lower power
  Factor a = m[0], b = m[1];
  if (a.power > b.power) std::swap(a, b);
  if (a.power == 1 && b.q == Quad::X && (b.power == 2 || b.power == 3)) {
    if (a.q == Quad::X) {
      // e^{ic X_a M} = F_a e^{-ic P_a M} F_a^dag
      return wrap_node(a.mode, resolve({-e.coeff, {P(a.mode), b}, e.helper}));
    }
    if (b.power == 2) return expand("px2", {a.mode, b.mode}, {1.0, e.coeff / 3});
    const double alpha = std::sqrt(std::abs(e.coeff) / 2);
    return expand(e.coeff < 0 ? "px3_inv" : "px3", {a.mode, b.mode}, {alpha});
  }
  if (a.power == 2 && b.power == 2) {
    if (a.q == Quad::X && b.q == Quad::X) return expand("x2x2", {a.mode, b.mode}, {e.coeff});
    // F X^2 F^dag = P^2
    if (a.q == Quad::X) return wrap_node(b.mode, expand("x2x2", {a.mode, b.mode}, {e.coeff}));
    if (b.q == Quad::X) return wrap_node(a.mode, expand("x2x2", {a.mode, b.mode}, {e.coeff}));
  }
  throw unsupported();
}

template <class C>
std::vector<Exp<C>> rule_product(const std::string& rule, const std::vector<int>& md, const std::vector<C>& p) {
  auto need = [&](std::size_t nm, std::size_t np) {
    if (md.size() != nm || p.size() != np)
      throw Error(ErrorCode::InvalidArgument, "rule " + rule + " expects " + std::to_string(nm) + " modes and " +
                                                  std::to_string(np) + " params");
    require_distinct(md);
  };
  if (rule == "xxx") return need(3, 1), product_xxx<C>(md[0], md[1], md[2], p[0]);
  if (rule == "x2xx") return need(3, 1), product_x2xx<C>(md[0], md[1], md[2], p[0]);
  if (rule == "px2") return need(2, 2), product_px2<C>(md[0], md[1], p[0], p[1]);
  if (rule == "x6") return need(2, 1), product_x6<C>(md[0], md[1], p[0]);
  if (rule == "px3") return need(2, 1), product_px3<C>(md[0], md[1], p[0]);
  if (rule == "px3_inv") {
    need(2, 1);
    auto f = product_px3<C>(md[0], md[1], p[0]);
    std::reverse(f.begin(), f.end());
    for (auto& e : f) e.coeff = -e.coeff;
    return f;
  }
  if (rule == "x2x2") return need(2, 1), product_x2x2<C>(md[0], md[1], p[0]);
  if (rule == "x4") return need(2, 1), product_x4<C>(md[0], md[1], p[0]);
  throw Error(ErrorCode::InvalidArgument, "unknown rule " + rule);
}

}  // namespace

Node expand(const std::string& rule, const std::vector<int>& modes, const std::vector<double>& params) {
  for (double v : params)
    if (!std::isfinite(v)) throw Error(ErrorCode::ParamDomain, "rule " + rule + ": non-finite parameter");
  if ((rule == "px2" || rule == "px3" || rule == "px3_inv") && !params.empty() && params[0] == 0)
    throw Error(ErrorCode::ParamDomain, "rule " + rule + ": alpha = 0 degenerates the parameterization");
  Node n;
  n.rule = rule;
  n.modes = modes;
  n.params = params;
  auto prod = rule_product<double>(rule, modes, params);
  // products are in operator order; the tree is in time order
  for (auto it = prod.rbegin(); it != prod.rend(); ++it) n.children.push_back(resolve(*it));
  return n;
}

// ---- flattening ------------------------------------------------------------

namespace {

GateKind phase_kind(int power) {
  switch (power) {
    case 1: return GateKind::PhaseX1;
    case 2: return GateKind::PhaseX2;
    case 3: return GateKind::PhaseX3;
  }
  throw Error(ErrorCode::UnsupportedTermDegree, "phase gate power " + std::to_string(power));
}

struct Flattener {
  Form form;
  int n_modes;
  std::vector<Gate> out;
  std::vector<int> rot;    // universal: F-conjugation count per mode
  std::vector<int> frame;  // all-X: power of F^2 pending on the left, mod 4
  cplx ph = 1.0;

  void check_mode(int m) const {
    if (m < 0 || m >= n_modes)
      throw Error(ErrorCode::InvalidArgument, "mode " + std::to_string(m) + " outside program of " +
                                                  std::to_string(n_modes) + " modes");
  }

  void fourier(int m, int times = 1) {
    for (int i = 0; i < times; ++i) {
      Gate g;
      g.kind = GateKind::Fourier;
      g.modes[0] = m;
      out.push_back(g);
    }
  }

  void emit(const Gate& g) { out.push_back(g); }

  Gate x_gate(const std::vector<Factor>& mono, double c) {
    Gate g;
    if (mono.size() == 1) {
      g.kind = phase_kind(mono[0].power);
      g.modes[0] = mono[0].mode;
    } else {
      g.kind = GateKind::CZ;
      g.modes[0] = mono[0].mode;
      g.modes[1] = mono[1].mode;
    }
    g.param = c;
    return g;
  }

  void leaf(const Exp<double>& e) {
    for (const Factor& f : e.mono) check_mode(f.mode);
    if (form == Form::Universal) {
      double sign = 1;
      std::uint8_t bits = 0;
      for (std::size_t i = 0; i < e.mono.size(); ++i) {
        const Factor& f = e.mono[i];
        const int r = ((f.q == Quad::P ? 1 : 0) + rot[f.mode]) % 4;
        if (r >= 2 && f.power % 2) sign = -sign;
        if (r % 2) bits |= std::uint8_t(1u << i);
      }
      Gate g = x_gate(e.mono, sign * e.coeff);
      g.pframe = bits;
      emit(g);
      return;
    }
    // all-X: F (gate) F = (F gate F^dag) F^2, then commute F^2 into the frame
    std::vector<int> pmodes;
    for (const Factor& f : e.mono)
      if (f.q == Quad::P) pmodes.push_back(f.mode);
    for (int m : pmodes) frame[m] = (frame[m] + 1) % 4;
    double sign = 1;
    for (const Factor& f : e.mono)
      if (f.power % 2 && frame[f.mode] % 2) sign = -sign;
    for (int m : pmodes) fourier(m);
    emit(x_gate(e.mono, sign * e.coeff));
    for (int m : pmodes) fourier(m);
  }

  void walk(const Node& n) {
    if (n.rule == "leaf") return leaf(n.leaf);
    if (n.rule == "wrap") {
      const int m = n.modes.at(0);
      check_mode(m);
      if (form == Form::Universal) {
        rot[m] = (rot[m] + 1) % 4;
        for (const Node& c : n.children) walk(c);
        rot[m] = (rot[m] + 3) % 4;
        return;
      }
      // F B F^dag with F^dag = -F^3
      fourier(m, 3);
      for (const Node& c : n.children) walk(c);
      fourier(m);
      ph = -ph;
      return;
    }
    for (const Node& c : n.children) walk(c);
  }

  void close() {
    if (form != Form::AllX) return;
    for (int m = 0; m < n_modes; ++m)
      if (frame[m] % 2) {
        fourier(m, 2);
        frame[m] = (frame[m] + 1) % 4;
      }
    // remaining frame is F^4 = -1 on modes with frame == 2
    for (int m = 0; m < n_modes; ++m)
      if (frame[m] == 2) ph = -ph;
  }
};

}  // namespace

GateProgram flatten(const Node& root, int n_modes, Form form) {
  if (n_modes < 0) throw Error(ErrorCode::InvalidArgument, "negative mode count");
  Flattener f{form, n_modes, {}, std::vector<int>(n_modes, 0), std::vector<int>(n_modes, 0), 1.0};
  f.walk(root);
  f.close();
  GateProgram p;
  p.n_modes = n_modes;
  p.form = form;
  p.gates = std::move(f.out);
  p.provenance = root;
  p.global_phase = std::conj(f.ph);
  return p;
}

namespace {
int mode_count(const std::vector<int>& modes) { return modes.empty() ? 0 : *std::max_element(modes.begin(), modes.end()) + 1; }
}  // namespace

GateProgram decompose_xxx(int j, int k, int l, double t, Form form) {
  return flatten(expand("xxx", {j, k, l}, {t}), mode_count({j, k, l}), form);
}

GateProgram decompose_x2xx(int j, int k, int l, double t, Form form) {
  return flatten(expand("x2xx", {j, k, l}, {t}), mode_count({j, k, l}), form);
}

GateProgram decompose_sub(const std::string& name, const std::vector<int>& modes, const std::vector<double>& params,
                          Form form) {
  static const std::set<std::string> names = {"px2", "x6", "px3", "x2x2", "x4"};
  if (!names.count(name)) throw Error(ErrorCode::InvalidArgument, "unknown sub-decomposition " + name);
  return flatten(expand(name, modes, params), mode_count(modes), form);
}

// ---- symbolic verification -------------------------------------------------

SymbolicResult verify_symbolic(const std::vector<Exp<Poly>>& product, int n_modes, const Poly& target_phase) {
  SymbolicResult r;
  r.sigma.reserve(n_modes);
  for (int i = 0; i < n_modes; ++i) r.sigma.push_back(Poly::var(i));
  // left to right: U_k = U_{k-1} A_k acts as psi(x) -> e^{i Phi(x)} psi(sigma(x))
  for (std::size_t idx = 0; idx < product.size(); ++idx) {
    const Exp<Poly>& e = product[idx];
    int pmode = -1, pcount = 0;
    Poly m = e.coeff;
    for (const Factor& f : e.mono) {
      if (f.mode < 0 || f.mode >= n_modes) throw Error(ErrorCode::InvalidArgument, "factor mode out of range");
      if (f.q == Quad::P) {
        ++pcount;
        if (f.power != 1) pcount = 99;
        pmode = f.mode;
      } else {
        m = m * Poly::var(f.mode).pow(f.power);
      }
    }
    if (pcount == 0) {
      r.phase += m.substitute(r.sigma);
      continue;
    }
    if (pcount != 1 || m.depends_on(pmode))
      throw Error(ErrorCode::NotShiftPhaseClosed,
                  "factor " + std::to_string(idx) + " (" + mono_str(e.mono) + ") is not a position phase or shift");
    // e^{i c P_j m}: x_j -> x_j + c m / 2
    r.sigma[pmode] = r.sigma[pmode] + (m * Poly(Rational(1, 2))).substitute(r.sigma);
  }
  bool ident = true;
  for (int i = 0; i < n_modes; ++i)
    if (!(r.sigma[i] == Poly::var(i))) ident = false;
  const bool phase_ok = r.phase == target_phase;
  r.pass = ident && phase_ok;
  if (!ident) r.detail = "net substitution is not the identity";
  else if (!phase_ok) r.detail = "phase mismatch: residual " + (r.phase - target_phase).str();
  return r;
}

std::vector<SymbolicRule> symbolic_rules() {
  const Poly x0 = Poly::var(0), x1 = Poly::var(1), x2 = Poly::var(2), p = Poly::var(3), p2 = Poly::var(4);
  const std::vector<std::string> nd = {"x0", "x1", "x2", "d"};
  const std::vector<std::string> na = {"x0", "x1", "x2", "a", "kap"};
  std::vector<SymbolicRule> out;
  out.push_back({"xxx", product_xxx<Poly>(0, 1, 2, p), Poly(2) * p * x0 * x1 * x2, 3, nd});
  out.push_back({"x2xx", product_x2xx<Poly>(0, 1, 2, p), Poly(6) * p * x0.pow(2) * x1 * x2, 3, nd});
  out.push_back({"x6", product_x6<Poly>(0, 1, p), p * x0.pow(6), 2, nd});
  out.push_back({"x2x2", product_x2x2<Poly>(0, 1, p), p * x0.pow(2) * x1.pow(2), 2, na});
  out.push_back({"x4", product_x4<Poly>(1, 0, p), p * x1.pow(4), 2, na});
  // not shift/phase closed: P^3 and X^2 P^2 factors
  out.push_back({"px2", product_px2<Poly>(0, 1, p, p2), Poly(0), 2, na});
  out.push_back({"px3", product_px3<Poly>(0, 1, p), Poly(0), 2, na});
  return out;
}

// ---- numerics --------------------------------------------------------------

Vec coherent_amplitudes(cplx alpha, int d) {
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "coherent_amplitudes: d < 1");
  Vec v(d);
  cplx c = std::exp(-std::norm(alpha) / 2);
  for (int n = 0; n < d; ++n) {
    v[n] = c;
    c *= alpha / std::sqrt(double(n + 1));
  }
  return v;
}

namespace {

// Eigendecompositions of X^n and P^n at one cutoff, built on demand.
class QuadCache {
 public:
  const EigenDecomp<double>& get(int d, Quad q, int power) {
    const auto key = std::make_tuple(d, int(q), power);
    auto it = pow_.find(key);
    if (it != pow_.end()) return it->second;
    auto bit = base_.find({d, int(q)});
    if (bit == base_.end()) {
      const auto Q = quadrature_ops<double>(d, kHbar);
      bit = base_.emplace(std::make_pair(d, int(q)), eigh<double>(q == Quad::X ? Q.X : Q.P)).first;
    }
    EigenDecomp<double> e = bit->second;
    for (Eigen::Index i = 0; i < e.evals.size(); ++i) e.evals[i] = std::pow(e.evals[i], power);
    return pow_.emplace(key, std::move(e)).first->second;
  }
  const Vec& fourier(int d) {
    auto it = f_.find(d);
    if (it != f_.end()) return it->second;
    Vec v(d);
    for (int n = 0; n < d; ++n) v[n] = std::exp(cplx(0, std::numbers::pi / 2 * (n + 0.5)));
    return f_.emplace(d, std::move(v)).first->second;
  }

 private:
  std::map<std::tuple<int, int, int>, EigenDecomp<double>> pow_;
  std::map<std::pair<int, int>, EigenDecomp<double>> base_;
  std::map<int, Vec> f_;
};

void apply_exp_cached(const Exp<double>& e, State& s, QuadCache& cache) {
  std::vector<int> modes;
  std::vector<const EigenDecomp<double>*> parts;
  for (const Factor& f : e.mono) {
    if (f.mode < 0 || f.mode >= s.modes()) throw Error(ErrorCode::ShapeMismatch, "factor mode outside state");
    modes.push_back(f.mode);
    parts.push_back(&cache.get(s.cutoffs[f.mode], f.q, f.power));
  }
  if (e.coeff == 0) return;
  if (modes.empty()) {
    s.amp *= std::exp(cplx(0, e.coeff));
    return;
  }
  apply_product_phase<double>(s.amp, s.cutoffs, modes, parts, e.coeff);
}

void apply_program_cached(const GateProgram& prog, State& s, QuadCache& cache) {
  if (s.modes() != prog.n_modes) throw Error(ErrorCode::ShapeMismatch, "program/state mode count");
  for (const Gate& g : prog.gates) {
    if (g.kind == GateKind::Fourier) {
      const Vec& f = cache.fourier(s.cutoffs[g.modes[0]]);
      apply_mode<double>(s.amp, s.cutoffs, g.modes[0], Mat(f.asDiagonal()));
      continue;
    }
    Exp<double> e{g.param, {}, -1};
    for (int i = 0; i < g.arity(); ++i) {
      const Quad qd = (g.pframe >> i) & 1 ? Quad::P : Quad::X;
      int power = 1;
      if (g.kind == GateKind::PhaseX2) power = 2;
      if (g.kind == GateKind::PhaseX3) power = 3;
      e.mono.push_back({g.modes[i], qd, power});
    }
    apply_exp_cached(e, s, cache);
  }
  s.amp *= prog.global_phase;
}

}  // namespace

void apply_exp(const Exp<double>& e, State& s) {
  QuadCache cache;
  apply_exp_cached(e, s, cache);
}

void apply_program(const GateProgram& prog, State& s) {
  QuadCache cache;
  apply_program_cached(prog, s, cache);
}

namespace {

void check_states(int n_modes, const std::vector<int>& cutoffs, const std::vector<std::vector<cplx>>& states) {
  if (cutoffs.empty()) throw Error(ErrorCode::InvalidArgument, "verify_numeric: no cutoffs");
  for (const auto& alphas : states) {
    if (int(alphas.size()) != n_modes) throw Error(ErrorCode::ShapeMismatch, "test state mode count");
    // low-energy requirement: >= 0.999 of each mode's mass below cutoff/2
    for (cplx a : alphas) {
      const Vec v = coherent_amplitudes(a, *std::min_element(cutoffs.begin(), cutoffs.end()) / 2);
      if (v.squaredNorm() < 0.999)
        throw Error(ErrorCode::InvalidArgument, "test state too energetic for the smallest cutoff");
    }
  }
}

template <class Apply>
NumericCheck convergence(int n_modes, const Exp<double>& target, const std::vector<int>& cutoffs,
                         const std::vector<std::vector<cplx>>& states, bool require_decrease, Apply&& apply) {
  check_states(n_modes, cutoffs, states);
  NumericCheck r;
  r.cutoffs = cutoffs;
  for (int d : cutoffs) {
    QuadCache cache;
    double worst = 0;
    for (const auto& alphas : states) {
      std::vector<State> parts;
      for (cplx a : alphas) {
        Vec v = coherent_amplitudes(a, d);
        v.normalize();
        parts.emplace_back(std::vector<int>{d}, v);
      }
      State psi = n_modes ? tensor(parts) : State({}, Vec::Ones(1));
      State ref = psi;
      apply(psi, cache);
      apply_exp_cached(target, ref, cache);
      worst = std::max(worst, (psi.amp - ref.amp).norm());
    }
    r.errors.push_back(worst);
  }
  r.decreasing = true;
  for (std::size_t i = 1; i < r.errors.size(); ++i)
    if (!(r.errors[i] < r.errors[i - 1])) r.decreasing = false;
  if (require_decrease && !r.decreasing) {
    std::ostringstream os;
    os << "errors do not decrease with cutoff:";
    for (std::size_t i = 0; i < r.errors.size(); ++i) os << " " << cutoffs[i] << "->" << r.errors[i];
    throw Error(ErrorCode::TruncationDominated, os.str());
  }
  return r;
}

}  // namespace

NumericCheck verify_numeric(const GateProgram& prog, const Exp<double>& target, const std::vector<int>& cutoffs,
                            const std::vector<std::vector<cplx>>& coherent_states, bool require_decrease) {
  return convergence(prog.n_modes, target, cutoffs, coherent_states, require_decrease,
                     [&](State& s, QuadCache& c) { apply_program_cached(prog, s, c); });
}

NumericCheck verify_numeric_product(const std::vector<Exp<double>>& product, int n_modes, const Exp<double>& target,
                                   const std::vector<int>& cutoffs,
                                   const std::vector<std::vector<cplx>>& coherent_states, bool require_decrease) {
  return convergence(n_modes, target, cutoffs, coherent_states, require_decrease, [&](State& s, QuadCache& c) {
    for (auto it = product.rbegin(); it != product.rend(); ++it) apply_exp_cached(*it, s, c);
  });
}

std::vector<Exp<double>> rule_factors(const std::string& rule, const std::vector<int>& modes,
                                      const std::vector<double>& params) {
  return rule_product<double>(rule, modes, params);
}

// ---- Trotterization and costs ----------------------------------------------

GateProgram trotterize(const std::vector<TermDescriptor>& terms, double t, int K, int n_modes, Form form) {
  if (K < 1) throw Error(ErrorCode::InvalidArgument, "trotterize: K < 1");
  const double tau = t / K;
  std::vector<Node> slice;
  for (const TermDescriptor& d : terms) {
    const double c = d.coeff * tau;
    switch (d.kind) {
      case TermKind::XX:
        if (d.data_mode >= 0) throw Error(ErrorCode::UnsupportedTermDegree, "XX term with a data mode");
        slice.push_back(leaf_node({-c, {X(d.s_mode), X(d.y_mode)}, -1}));
        break;
      case TermKind::XXX: {
        Node n = expand("xxx", {d.data_mode, d.s_mode, d.y_mode}, {-c / 2});
        slice.push_back(d.fourier ? wrap_node(d.data_mode, std::move(n)) : std::move(n));
        break;
      }
      case TermKind::X2XX: {
        Node n = expand("x2xx", {d.data_mode, d.s_mode, d.y_mode}, {-c / 6});
        slice.push_back(d.fourier ? wrap_node(d.data_mode, std::move(n)) : std::move(n));
        break;
      }
      default:
        throw Error(ErrorCode::UnsupportedTermDegree, "unknown term kind");
    }
  }
  Node root;
  root.rule = "seq";
  for (int k = 0; k < K; ++k)
    for (const Node& n : slice) root.children.push_back(n);
  return flatten(root, n_modes, form);
}

CostReport cost_report(const GateProgram& prog) {
  CostReport r;
  for (const Gate& g : prog.gates) {
    ++r.by_kind[gate_kind_name(g.kind)];
    ++r.total;
  }
  return r;
}

double commutator_baseline(double precision, const BaselineModel& m) {
  if (!(precision > 0)) throw Error(ErrorCode::InvalidArgument, "precision must be positive");
  return m.gates_per_rep * m.reps_at_ref * std::pow(m.ref_precision / precision, m.exponent);
}

// ---- serialization ---------------------------------------------------------

json provenance_to_json(const Node& n) {
  if (n.rule == "leaf") {
    json mono = json::array();
    for (const Factor& f : n.leaf.mono) mono.push_back({f.mode, f.q == Quad::X ? "X" : "P", f.power});
    json j = {{"leaf", n.leaf.coeff}, {"mono", mono}};
    if (n.leaf.helper >= 0) j["helper"] = n.leaf.helper;
    return j;
  }
  if (n.rule == "wrap" || n.rule == "seq") {
    json ch = json::array();
    for (const Node& c : n.children) ch.push_back(provenance_to_json(c));
    json j = {{n.rule, ch}};
    if (n.rule == "wrap") j["mode"] = n.modes.at(0);
    return j;
  }
  return {{"rule", n.rule}, {"modes", n.modes}, {"params", n.params}};
}

Node provenance_from_json(const json& j) {
  try {
    if (j.contains("leaf")) {
      Exp<double> e{j.at("leaf").get<double>(), {}, j.value("helper", -1)};
      for (const auto& f : j.at("mono")) {
        const std::string qs = f.at(1).get<std::string>();
        if (qs != "X" && qs != "P") throw Error(ErrorCode::ParseError, "quadrature must be X or P");
        e.mono.push_back({f.at(0).get<int>(), qs == "X" ? Quad::X : Quad::P, f.at(2).get<int>()});
      }
      return leaf_node(e);
    }
    if (j.contains("wrap")) {
      if (j.at("wrap").size() != 1) throw Error(ErrorCode::ParseError, "wrap holds exactly one block");
      return wrap_node(j.at("mode").get<int>(), provenance_from_json(j.at("wrap").at(0)));
    }
    if (j.contains("seq")) {
      Node n;
      n.rule = "seq";
      for (const auto& c : j.at("seq")) n.children.push_back(provenance_from_json(c));
      return n;
    }
    return expand(j.at("rule").get<std::string>(), j.at("modes").get<std::vector<int>>(),
                  j.at("params").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("provenance: ") + e.what());
  }
}

std::uint64_t provenance_hash(const Node& n) {
  const std::string s = provenance_to_json(n).dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

bool provenance_roundtrip(const GateProgram& prog) {
  const Node back = provenance_from_json(provenance_to_json(prog.provenance));
  const GateProgram re = flatten(back, prog.n_modes, prog.form);
  return re.gates == prog.gates && re.global_phase == prog.global_phase;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw Error(ErrorCode::ParseError, "bad number '" + s + "'");
  return v;
}

int parse_mode(std::string s, bool& pframe) {
  pframe = !s.empty() && s.back() == 'p';
  if (pframe) s.pop_back();
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || v < 0) throw Error(ErrorCode::ParseError, "bad mode '" + s + "'");
  return int(v);
}

}  // namespace

std::string export_program(const GateProgram& prog) {
  std::ostringstream os;
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(provenance_hash(prog.provenance)));
  os << "# cvinv gate program v1\n";
  os << "n_modes " << prog.n_modes << "\n";
  os << "form " << (prog.form == Form::Universal ? "universal" : "allx") << "\n";
  os << "provenance_hash " << hash << "\n";
  os << "global_phase " << fmt17(prog.global_phase.real()) << " " << fmt17(prog.global_phase.imag()) << "\n";
  os << "provenance " << provenance_to_json(prog.provenance).dump() << "\n";
  for (const Gate& g : prog.gates) {
    os << gate_kind_name(g.kind) << " ";
    for (int i = 0; i < g.arity(); ++i) {
      if (i) os << ",";
      os << g.modes[i] << (((g.pframe >> i) & 1) ? "p" : "");
    }
    if (g.kind != GateKind::Fourier) os << " " << fmt17(g.param);
    os << "\n";
  }
  return os.str();
}

GateProgram import_program(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  GateProgram p;
  bool have_modes = false, have_prov = false, have_form = false;
  std::string hash_hex;
  json prov;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "n_modes") {
      if (!(ls >> p.n_modes) || p.n_modes < 0) throw Error(ErrorCode::ParseError, "bad n_modes");
      have_modes = true;
    } else if (key == "form") {
      std::string f;
      ls >> f;
      if (f == "universal") p.form = Form::Universal;
      else if (f == "allx") p.form = Form::AllX;
      else throw Error(ErrorCode::ParseError, "unknown form " + f);
      have_form = true;
    } else if (key == "provenance_hash") {
      ls >> hash_hex;
    } else if (key == "global_phase") {
      std::string re, im;
      ls >> re >> im;
      p.global_phase = {parse_double(re), parse_double(im)};
    } else if (key == "provenance") {
      try {
        prov = json::parse(line.substr(key.size() + 1));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("provenance json: ") + e.what());
      }
      have_prov = true;
    } else {
      Gate g;
      bool found = false;
      for (GateKind k : {GateKind::Fourier, GateKind::PhaseX1, GateKind::PhaseX2, GateKind::PhaseX3, GateKind::CZ})
        if (key == gate_kind_name(k)) g.kind = k, found = true;
      if (!found) throw Error(ErrorCode::ParseError, "unknown gate kind '" + key + "'");
      std::string modes, param, extra;
      ls >> modes;
      std::vector<std::string> parts;
      std::stringstream ms(modes);
      for (std::string t; std::getline(ms, t, ',');) parts.push_back(t);
      if (int(parts.size()) != g.arity()) throw Error(ErrorCode::ParseError, "wrong mode count in '" + line + "'");
      for (int i = 0; i < g.arity(); ++i) {
        bool pf = false;
        g.modes[i] = parse_mode(parts[i], pf);
        if (pf) g.pframe |= std::uint8_t(1u << i);
      }
      if (g.kind != GateKind::Fourier) {
        if (!(ls >> param)) throw Error(ErrorCode::ParseError, "missing parameter in '" + line + "'");
        g.param = parse_double(param);
      }
      if (ls >> extra) throw Error(ErrorCode::ParseError, "trailing text in '" + line + "'");
      p.gates.push_back(g);
    }
  }
  if (!have_modes || !have_form || !have_prov) throw Error(ErrorCode::ParseError, "missing header field");
  p.provenance = provenance_from_json(prov);
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(provenance_hash(p.provenance)));
  if (hash_hex != hash) throw Error(ErrorCode::ParseError, "provenance hash mismatch");
  const GateProgram re = flatten(p.provenance, p.n_modes, p.form);
  if (!(re.gates == p.gates)) throw Error(ErrorCode::ParseError, "gate list does not match its provenance");
  return p;
}

std::vector<std::string> lint(const GateProgram& prog) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < prog.gates.size(); ++i) {
    const Gate& g = prog.gates[i];
    const std::string at = "gate " + std::to_string(i) + ": ";
    if (int(g.kind) < 0 || int(g.kind) > int(GateKind::CZ)) out.push_back(at + "kind outside the gate set");
    for (int k = 0; k < g.arity(); ++k)
      if (g.modes[k] < 0 || g.modes[k] >= prog.n_modes) out.push_back(at + "mode index out of range");
    if (g.arity() == 1 && g.modes[1] != -1) out.push_back(at + "single-mode gate with a second mode");
    if (g.kind == GateKind::CZ && g.modes[0] == g.modes[1]) out.push_back(at + "CZ on a repeated mode");
    if (g.kind == GateKind::Fourier && (g.param != 0 || g.pframe)) out.push_back(at + "Fourier gate carries data");
    if (!std::isfinite(g.param)) out.push_back(at + "non-finite parameter");
    if (g.pframe >> g.arity()) out.push_back(at + "frame bit beyond arity");
    if (prog.form == Form::AllX && g.pframe) out.push_back(at + "P-frame gate in all-X form");
  }
  return out;
}

}  // namespace cvinv
