#include "doctest.h"

#include <cmath>
#include <numbers>

#include "cvinv/compiler.hpp"

using namespace cvinv;

namespace {
const Factor X0{0, Quad::X, 1}, X1{1, Quad::X, 1}, X2{2, Quad::X, 1};
const Factor P0{0, Quad::P, 1};

Poly v(int i) { return Poly::var(i); }

const SymbolicRule& rule(const std::string& name) {
  static const auto rules = symbolic_rules();
  for (const auto& r : rules)
    if (r.name == name) return r;
  throw std::runtime_error("no rule " + name);
}

State coherent(const std::vector<cplx>& alphas, int d) {
  std::vector<State> parts;
  for (cplx a : alphas) {
    Vec c = coherent_amplitudes(a, d);
    c.normalize();
    parts.emplace_back(std::vector<int>{d}, c);
  }
  return tensor(parts);
}

const std::vector<std::vector<cplx>> kStates2 = {{0.3, cplx(0, -0.2)}, {cplx(-0.1, 0.25), 0.0}};
const std::vector<std::vector<cplx>> kStates3 = {{0.3, cplx(0, -0.2), 0.4}};

// Position-grid simulation, independent of the Fock basis: X phases and CZ
// are diagonal, F is the symmetric DFT with dx^2 N = 2 pi hbar. Mode 0 is the
// fastest index. Only all-X programs (no P-frame bits).
struct Grid {
  int n, modes;
  double dx;
  RealVec x;
  Mat F;
  Grid(int n_, int modes_) : n(n_), modes(modes_), dx(std::sqrt(2 * std::numbers::pi * kHbar / n_)), x(n_), F(n_, n_) {
    for (int i = 0; i < n; ++i) x[i] = (i - n / 2) * dx;
    const cplx pre = std::polar(dx / std::sqrt(2 * std::numbers::pi * kHbar), std::numbers::pi / 4);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) F(a, b) = pre * std::polar(1.0, x[a] * x[b] / kHbar);
  }
  long size() const { return long(std::pow(n, modes)); }
  double coord(long idx, int m) const { return x[(idx / long(std::pow(n, m))) % n]; }
  void on_mode(Vec& psi, int m, const Mat& U) const {
    const long inner = long(std::pow(n, m)), outer = size() / (inner * n);
    if (inner == 1) {
      Eigen::Map<Mat> all(psi.data(), n, outer);
      all = (U * all).eval();
      return;
    }
    for (long k = 0; k < outer; ++k) {
      Eigen::Map<Mat> blk(psi.data() + k * inner * n, inner, n);
      blk = (blk * U.transpose()).eval();
    }
  }
  template <class Fn> void phase(Vec& psi, Fn f) const {
    for (long i = 0; i < size(); ++i) psi[i] *= std::polar(1.0, f(i));
  }
  Vec gaussian(const std::vector<cplx>& al) const {
    Vec psi(size());
    for (long i = 0; i < size(); ++i) {
      cplx v = 1;
      for (int m = 0; m < modes; ++m) {
        const double y = coord(i, m), x0 = std::sqrt(2 * kHbar) * al[m].real(), p0 = std::sqrt(2 * kHbar) * al[m].imag();
        v *= std::exp(cplx(-(y - x0) * (y - x0) / (2 * kHbar), p0 * y / kHbar));
      }
      psi[i] = v;
    }
    return psi.normalized();
  }
  void run(const GateProgram& prog, Vec& psi) const {
    for (const Gate& g : prog.gates) {
      switch (g.kind) {
        case GateKind::Fourier: on_mode(psi, g.modes[0], F); break;
        case GateKind::CZ:
          phase(psi, [&](long i) { return g.param * coord(i, g.modes[0]) * coord(i, g.modes[1]); });
          break;
        default: {
          const int p = g.kind == GateKind::PhaseX1 ? 1 : g.kind == GateKind::PhaseX2 ? 2 : 3;
          phase(psi, [&](long i) { return g.param * std::pow(coord(i, g.modes[0]), p); });
        }
      }
    }
    psi *= prog.global_phase;
  }
  // e^{i c prod Q^n}, P factors through F e^{i c X} F^dag
  void target(const Exp<double>& e, Vec& psi) const {
    for (const Factor& f : e.mono)
      if (f.q == Quad::P) on_mode(psi, f.mode, Mat(F.adjoint()));
    phase(psi, [&](long i) {
      double v = e.coeff;
      for (const Factor& f : e.mono) v *= std::pow(coord(i, f.mode), f.power);
      return v;
    });
    for (const Factor& f : e.mono)
      if (f.q == Quad::P) on_mode(psi, f.mode, F);
  }
};

double grid_error(const GateProgram& prog, const Exp<double>& target, int n,
                  const std::vector<std::vector<cplx>>& states) {
  const Grid g(n, prog.n_modes);
  double worst = 0;
  for (const auto& al : states) {
    Vec a = g.gaussian(al), b = a;
    g.run(prog, a);
    g.target(target, b);
    worst = std::max(worst, (a - b).norm());
  }
  return worst;
}
}  // namespace

TEST_CASE("rule products have the printed factor counts") {
  CHECK(product_xxx<double>(0, 1, 2, 0.1).size() == 17);
  CHECK(product_x2xx<double>(0, 1, 2, 0.1).size() == 17);
  CHECK(product_px2<double>(0, 1, 0.5, 0.2).size() == 9);
  CHECK(product_x6<double>(0, 1, 0.1).size() == 5);
  CHECK(product_px3<double>(0, 1, 0.1).size() == 5);
  CHECK(product_x2x2<double>(0, 1, 0.1).size() == 7);
  CHECK(product_x4<double>(1, 0, 0.1).size() == 5);
}

TEST_CASE("shift/phase algebra: single conjugation") {
  // e^{i2P0X1} e^{i d X0^3} e^{-i2P0X1} = e^{i d (x0 + x1)^3}
  const Poly d = v(2);
  std::vector<Exp<Poly>> prod = {{Poly(2), {P0, X1}, -1}, {d, {{0, Quad::X, 3}}, -1}, {Poly(-2), {P0, X1}, -1}};
  const auto r = verify_symbolic(prod, 2, d * (v(0) + v(1)).pow(3));
  CHECK(r.pass);
  CHECK(r.sigma[0] == v(0));
}

TEST_CASE("closed rules pass exactly in a formal parameter") {
  for (const char* name : {"xxx", "x2xx", "x6", "x2x2", "x4"}) {
    const auto& r = rule(name);
    const auto res = verify_symbolic(r.product, r.n_modes, r.target);
    INFO(name << ": " << res.detail << " phase " << res.phase.str(r.names));
    CHECK(res.pass);
  }
}

TEST_CASE("10% perturbation of any coefficient breaks a closed rule") {
  for (const char* name : {"xxx", "x2xx", "x6", "x2x2", "x4"}) {
    const auto& r = rule(name);
    for (std::size_t i = 0; i < r.product.size(); ++i) {
      auto p = r.product;
      p[i].coeff = p[i].coeff * Poly(Rational(11, 10));
      INFO(name << " factor " << i);
      CHECK_FALSE(verify_symbolic(p, r.n_modes, r.target).pass);
    }
  }
}

TEST_CASE("rules with P^3 or X^2 P^2 factors are not shift/phase closed") {
  for (const char* name : {"px2", "px3"}) {
    const auto& r = rule(name);
    try {
      verify_symbolic(r.product, r.n_modes, r.target);
      FAIL("expected NotShiftPhaseClosed");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::NotShiftPhaseClosed);
    }
  }
}

TEST_CASE("P_k X_j^2 rule converges with cutoff, printed cubic coefficient does not") {
  const double a = 0.5, kap = 0.2;
  const Exp<double> target{3 * a * a * kap, {P0, {1, Quad::X, 2}}, -1};
  const auto good = verify_numeric_product(rule_factors("px2", {0, 1}, {a, kap}), 2, target, {24, 32, 40}, kStates2);
  MESSAGE("px2 errors " << good.errors[0] << " " << good.errors[1] << " " << good.errors[2]);
  CHECK(good.decreasing);
  CHECK(good.errors[2] <= good.errors[0] / 2);
  CHECK(good.errors[2] < 1e-4);
  // as printed: +3/4 a^3 kap
  auto printed = rule_factors("px2", {0, 1}, {a, kap});
  printed.back().coeff = 0.75 * a * a * a * kap;
  const auto bad = verify_numeric_product(printed, 2, target, {24, 32, 40}, kStates2, false);
  // the residual e^{i 3 a^3 kap X^3} does not shrink with the cutoff
  CHECK(bad.errors[2] > 0.9 * bad.errors[0]);
  CHECK(bad.errors[2] > 1000 * good.errors[2]);
}

TEST_CASE("P_k X_j^3 rule converges with cutoff, printed quartic coefficient does not") {
  const double a = 0.5;
  const Exp<double> target{2 * a * a, {P0, {1, Quad::X, 3}}, -1};
  const auto good = verify_numeric_product(rule_factors("px3", {0, 1}, {a}), 2, target, {24, 32, 40}, kStates2);
  MESSAGE("px3 errors " << good.errors[0] << " " << good.errors[1] << " " << good.errors[2]);
  CHECK(good.decreasing);
  CHECK(good.errors[2] < 2e-3);
  auto printed = rule_factors("px3", {0, 1}, {a});
  printed.back().coeff = -2 * a * a * a;
  const auto bad = verify_numeric_product(printed, 2, target, {24, 32, 40}, kStates2, false);
  CHECK(bad.errors[2] > 0.05);
}

TEST_CASE("inverse px3 product realizes the negative coefficient") {
  const double a = 0.4;
  auto inv = rule_factors("px3_inv", {0, 1}, {a});
  const Exp<double> target{-2 * a * a, {P0, {1, Quad::X, 3}}, -1};
  CHECK(verify_numeric_product(inv, 2, target, {24, 32, 40}, kStates2).decreasing);
}

TEST_CASE("gate counts") {
  const auto u = cost_report(decompose_x2xx(0, 1, 2, 0.01));
  CHECK(u.total == 873);
  CHECK(u.by_kind.count("FOURIER") == 0);
  const auto ax = cost_report(decompose_x2xx(0, 1, 2, 0.01, Form::AllX));
  CHECK(ax.total == 1749);
  CHECK(cost_report(decompose_xxx(0, 1, 2, 0.1)).total == 17);
  CHECK(cost_report(decompose_sub("px2", {0, 1}, {1, 0.1})).total == 9);
  CHECK(cost_report(decompose_sub("x4", {1, 0}, {0.1})).total == 29);
  CHECK(cost_report(decompose_sub("x2x2", {0, 1}, {0.1})).total == 119);
  CHECK(cost_report(decompose_sub("px3", {0, 1}, {0.1})).total == 269);
  CHECK(cost_report(decompose_sub("x6", {0, 1}, {0.1})).total == 809);
}

TEST_CASE("commutator baseline") {
  CHECK(commutator_baseline(1e-3) == doctest::Approx(2.8e7).epsilon(1e-12));
  CHECK(commutator_baseline(1e-4) == doctest::Approx(2.8e9).epsilon(1e-12));
  BaselineModel lin;
  lin.exponent = 1;
  CHECK(commutator_baseline(1e-4, lin) == doctest::Approx(2.8e8).epsilon(1e-12));
  const double ratio = commutator_baseline(1e-3) / 873;
  CHECK(ratio == doctest::Approx(3.2e4).epsilon(0.01));
  CHECK_THROWS_AS(commutator_baseline(0), Error);
}

TEST_CASE("all program forms contain only gate-set kinds") {
  for (Form f : {Form::Universal, Form::AllX}) {
    CHECK(lint(decompose_x2xx(0, 1, 2, 0.01, f)).empty());
    CHECK(lint(decompose_xxx(2, 0, 1, -0.3, f)).empty());
  }
  for (const Gate& g : decompose_x2xx(0, 1, 2, 0.01, Form::AllX).gates) CHECK(g.pframe == 0);
}

TEST_CASE("lint reports malformed gates") {
  GateProgram p;
  p.n_modes = 2;
  Gate cz;
  cz.kind = GateKind::CZ;
  cz.modes[0] = cz.modes[1] = 1;
  Gate out;
  out.kind = GateKind::PhaseX1;
  out.modes[0] = 5;
  p.gates = {cz, out};
  CHECK(lint(p).size() == 2);
}

TEST_CASE("shift gate equals its Fourier-conjugated CZ expansion") {
  const Exp<double> shift{2, {P0, X1}, -1};
  Node leaf;
  leaf.rule = "leaf";
  leaf.leaf = shift;
  const GateProgram g = flatten(leaf, 2, Form::AllX);
  CHECK(g.gates.front().kind == GateKind::Fourier);
  for (const auto& alphas : kStates2) {
    State a = coherent(alphas, 30), b = a;
    apply_program(g, a);
    apply_exp(shift, b);
    CHECK((a.amp - b.amp).norm() <= 1e-10);
  }
}

TEST_CASE("universal and all-X forms agree including global phase") {
  const Exp<double> target{0.2, {X0, X1, X2}, -1};
  const auto u = verify_numeric(decompose_xxx(0, 1, 2, 0.1), target, {24, 32, 40}, kStates3);
  const auto ax = verify_numeric(decompose_xxx(0, 1, 2, 0.1, Form::AllX), target, {24, 32, 40}, kStates3);
  MESSAGE("xxx errors " << u.errors[0] << " " << u.errors[1] << " " << u.errors[2]);
  for (int i = 0; i < 3; ++i) CHECK(ax.errors[i] == doctest::Approx(u.errors[i]).epsilon(1e-6));
  CHECK(u.errors[2] < 1e-4);
}

TEST_CASE("x2xx: rule-level and flattened numerics decrease with cutoff") {
  const double t = 0.01;
  const Exp<double> target{6 * t, {{0, Quad::X, 2}, X1, X2}, -1};
  const auto rule = verify_numeric_product(rule_factors("x2xx", {0, 1, 2}, {t}), 3, target, {24, 32, 40}, kStates3);
  MESSAGE("x2xx rule errors " << rule.errors[0] << " " << rule.errors[1] << " " << rule.errors[2]);
  CHECK(rule.decreasing);
  const auto flat = verify_numeric(decompose_x2xx(0, 1, 2, t), target, {24, 32, 40}, kStates3, false);
  MESSAGE("x2xx flattened errors " << flat.errors[0] << " " << flat.errors[1] << " " << flat.errors[2]);
  CHECK(flat.decreasing);
}

TEST_CASE("flattened programs converge on a position grid") {
  const std::vector<std::vector<cplx>> s2 = {{0.5, 0.5}, {cplx(0, 0.5), -0.5}, {cplx(-0.3, 0.3), cplx(0, 0.2)}};
  const std::vector<std::vector<cplx>> s3 = {{0.5, 0.5, 0.5}, {cplx(0, 0.5), -0.5, cplx(-0.3, 0.3)}};
  auto study = [](const std::string& name, auto err, std::vector<int> ns) {
    std::vector<double> e;
    for (int n : ns) e.push_back(err(n));
    MESSAGE(name << " grid errors " << e.front() << " -> " << e.back());
    for (size_t i = 1; i < e.size(); ++i) CHECK(e[i] < e[i - 1]);
    return e.back();
  };
  const GateProgram xxx = decompose_xxx(0, 1, 2, 0.01, Form::AllX);
  CHECK(study("xxx", [&](int n) { return grid_error(xxx, {0.02, {X0, X1, X2}, -1}, n, s3); }, {48, 64, 96}) < 1e-6);
  // e^{2i P_1 X_0^2}: a strong conjugation, not a small-angle one
  const GateProgram px2 = decompose_sub("px2", {1, 0}, {1.0, 2.0 / 3}, Form::AllX);
  const Exp<double> px2_t{2.0, {{1, Quad::P, 1}, {0, Quad::X, 2}}, -1};
  CHECK(study("px2", [&](int n) { return grid_error(px2, px2_t, n, s2); }, {256, 512}) < 1e-3);
  const GateProgram x4 = decompose_sub("x4", {1, 0}, {0.01}, Form::AllX);
  CHECK(study("x4", [&](int n) { return grid_error(x4, {0.01, {{1, Quad::X, 4}}, -1}, n, s2); }, {256, 512}) < 5e-3);
}

TEST_CASE("trivial numeric checks") {
  GateProgram empty;
  empty.n_modes = 1;
  const auto r = verify_numeric(empty, {0.0, {X0}, -1}, {10, 20}, {{0.2}}, false);
  CHECK(r.errors[0] == 0);
  CHECK(r.errors[1] == 0);

  Node leaf;
  leaf.rule = "leaf";
  leaf.leaf = {0.37, {X0, X1}, -1};
  const GateProgram cz = flatten(leaf, 2, Form::Universal);
  REQUIRE(cz.gates.size() == 1);
  CHECK(cz.gates[0].kind == GateKind::CZ);
  for (int d : {8, 16, 24}) CHECK(verify_numeric(cz, leaf.leaf, {d}, kStates2).errors[0] <= 1e-10);
}

TEST_CASE("export/import round-trips bit-exactly") {
  for (Form f : {Form::Universal, Form::AllX}) {
    const GateProgram p = decompose_x2xx(2, 0, 1, 0.0123456789, f);
    const std::string text = export_program(p);
    const GateProgram q = import_program(text);
    CHECK(q.gates == p.gates);
    CHECK(q.global_phase == p.global_phase);
    CHECK(q.n_modes == p.n_modes);
    CHECK(export_program(q) == text);
    CHECK(provenance_roundtrip(p));
  }
}

TEST_CASE("import rejects tampering") {
  const std::string text = export_program(decompose_xxx(0, 1, 2, 0.1));
  // change one gate parameter
  std::string bad = text;
  const auto pos = bad.rfind("0.0333");
  REQUIRE(pos != std::string::npos);
  bad[pos + 5] = '4';
  CHECK_THROWS_AS(import_program(bad), Error);
  // change the provenance without the hash
  std::string bad2 = text;
  const auto pp = bad2.find("\"params\":[0.1");
  REQUIRE(pp != std::string::npos);
  bad2.replace(pp, 13, "\"params\":[0.2");
  CHECK_THROWS_AS(import_program(bad2), Error);
  CHECK_THROWS_AS(import_program("n_modes 1\nBOGUS 0 1\n"), Error);
}

TEST_CASE("argument errors") {
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code([] { decompose_xxx(0, 1, 1, 0.1); }) == ErrorCode::DuplicateModes);
  CHECK(code([] { decompose_sub("px3", {0, 1}, {0.0}); }) == ErrorCode::ParamDomain);
  CHECK(code([] { decompose_sub("x4", {0, 1}, {NAN}); }) == ErrorCode::ParamDomain);
  TermDescriptor bad{TermKind::XX, 1.0, 0, false, 1, 2};
  CHECK(code([&] { trotterize({bad}, 1.0, 1, 3); }) == ErrorCode::UnsupportedTermDegree);
  CHECK_THROWS_AS(trotterize({}, 1.0, 0, 1), Error);
}

TEST_CASE("trotterize: single term and commuting terms are exact") {
  const TermDescriptor a{TermKind::XX, 0.7, -1, false, 0, 1};
  const TermDescriptor b{TermKind::XX, -0.4, -1, false, 2, 3};
  const std::vector<std::vector<cplx>> st = {{0.2, cplx(0, 0.3), -0.25, 0.1}};
  for (int K : {1, 3}) {
    const GateProgram p = trotterize({a}, 1.3, K, 4);
    CHECK(p.gates.size() == std::size_t(K));
    CHECK(verify_numeric(p, {-0.7 * 1.3, {X0, X1}, -1}, {12}, st).errors[0] <= 1e-10);
  }
  const GateProgram two = trotterize({a, b}, 1.3, 1, 4);
  State s = coherent(st[0], 12), ref = s;
  apply_program(two, s);
  apply_exp({-0.7 * 1.3, {X0, X1}, -1}, ref);
  apply_exp({0.4 * 1.3, {X2, {3, Quad::X, 1}}, -1}, ref);
  CHECK((s.amp - ref.amp).norm() <= 1e-10);
}

TEST_CASE("trotterize: term structure") {
  const TermDescriptor xxx{TermKind::XXX, 0.5, 0, true, 1, 2};
  const TermDescriptor x2{TermKind::X2XX, 0.5, 0, false, 1, 2};
  const GateProgram p = trotterize({xxx, x2}, 1.0, 2, 3);
  CHECK(p.gates.size() == 2 * (17 + 873));
  CHECK(p.provenance.children.size() == 4);
  CHECK(p.provenance.children[0].rule == "wrap");
  CHECK(p.provenance.children[0].children[0].params[0] == doctest::Approx(-0.125));
  CHECK(p.provenance.children[1].params[0] == doctest::Approx(-0.5 / 12));
  CHECK(provenance_roundtrip(p));
}

TEST_CASE("first-order Trotter error scales as 1/K") {
  // H = (X1 + P1) X2 X3 at cutoff 12, per-term exponentials applied exactly
  const int d = 12;
  const double t = 1.0;
  const auto Q = quadrature_ops<double>(d, kHbar);
  const auto e_sum = eigh<double>(Q.X + Q.P);
  const auto e_x = eigh<double>(Q.X);
  const std::vector<int> cut = {d, d, d};
  const State psi = coherent({0.3, cplx(0.1, 0.2), -0.2}, d);
  Vec exact = psi.amp;
  apply_product_phase<double>(exact, cut, {0, 1, 2}, {&e_sum, &e_x, &e_x}, -t);
  std::vector<double> err;
  for (int K : {4, 8, 16}) {
    const GateProgram p = trotterize({{TermKind::XXX, 1.0, 0, false, 1, 2}, {TermKind::XXX, 1.0, 0, true, 1, 2}}, t, K, 3);
    State s = psi;
    const double tau = t / K;
    for (int k = 0; k < K; ++k) {
      apply_exp({-tau, {X0, X1, X2}, -1}, s);
      apply_exp({-tau, {P0, X1, X2}, -1}, s);
    }
    CHECK(p.gates.size() == std::size_t(K) * 34);
    err.push_back((s.amp - exact).norm());
  }
  MESSAGE("trotter errors " << err[0] << " " << err[1] << " " << err[2]);
  CHECK(err[0] / err[1] == doctest::Approx(2).epsilon(0.2));
  CHECK(err[1] / err[2] == doctest::Approx(2).epsilon(0.2));
}
