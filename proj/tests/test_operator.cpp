#include "doctest.h"

#include <algorithm>

#include "cvinv/operator.hpp"

using namespace cvinv;

namespace {
QuadraticForm zero_form(int n) {
  QuadraticForm q;
  q.a.assign(n, 0);
  q.b.assign(n, 0);
  q.alpha.assign(n, 0);
  q.beta.assign(n, 0);
  return q;
}
}  // namespace

TEST_CASE("quadratic_spec") {
  QuadraticForm q = zero_form(1);
  q.lambda = 1;
  OperatorSpec s = quadratic_spec(q);
  REQUIRE(s.terms.size() == 1);
  CHECK(s.terms[0].factors.empty());

  QuadraticForm poisson = zero_form(2);
  poisson.beta = {-4, -4};
  s = quadratic_spec(poisson);
  REQUIRE(s.terms.size() == 2);
  CHECK(s.terms[1].coeff == -4);
  CHECK(s.terms[1].factors[0] == Factor{1, Quad::P, 2});

  QuadraticForm integ = zero_form(1);
  integ.b = {1};
  s = quadratic_spec(integ);
  REQUIRE(s.terms.size() == 1);
  CHECK(s.terms[0].factors[0] == Factor{0, Quad::P, 1});

  QuadraticForm bad = zero_form(2);
  bad.b = {1};
  CHECK_THROWS_AS(quadratic_spec(bad), Error);
}

TEST_CASE("build_matrix") {
  QuadraticForm q = zero_form(1);
  q.beta = {1};
  const Mat P2 = build_matrix(quadratic_spec(q), {10});
  for (int n = 0; n <= 8; ++n) CHECK(std::abs(P2(n, n) - (2 * n + 1) / 4.0) <= 1e-14);
  CHECK(hermiticity_defect(P2) <= 1e-12);

  QuadraticForm c = zero_form(2);
  c.lambda = 2.5;
  CHECK(build_matrix(quadratic_spec(c), {3, 4}) == Mat(2.5 * Mat::Identity(12, 12)));

  q = zero_form(1);
  q.b = {1};
  const Mat a = annihilation<double>(7);
  CHECK(max_abs<double>(Mat(build_matrix(quadratic_spec(q), {7}) - Mat(cplx(0, -0.5) * (a - a.adjoint())))) <=
        1e-15);

  CHECK_THROWS_AS(build_matrix(quadratic_spec(q), {7, 7}), Error);
  OperatorSpec mixed{1, {{1.0, {{0, Quad::X, 1}, {0, Quad::P, 1}}}}};
  try {
    build_matrix(mixed, {5});
    FAIL("expected MixedQuadratureTerm");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MixedQuadratureTerm);
  }
  OperatorSpec outside{1, {{1.0, {{3, Quad::X, 1}}}}};
  CHECK_THROWS_AS(build_matrix(outside, {5}), Error);
}

TEST_CASE("build_matrix is linear in its terms") {
  OperatorSpec s1{2, {{0.7, {{0, Quad::X, 2}}}, {-1.1, {{1, Quad::P, 1}}}}};
  OperatorSpec s2{2, {{0.3, {{0, Quad::P, 1}, {1, Quad::X, 1}}}, {2.0, {}}}};
  OperatorSpec both = s1;
  both.terms.insert(both.terms.end(), s2.terms.begin(), s2.terms.end());
  const std::vector<int> c{5, 6};
  CHECK(max_abs<double>(Mat(build_matrix(both, c) - build_matrix(s1, c) - build_matrix(s2, c))) <= 1e-15);
}

TEST_CASE("build_global_hamiltonian") {
  QuadraticForm q = zero_form(1);
  q.lambda = 1;
  const Mat H = build_global_hamiltonian(quadratic_spec(q), {4}, 4, 4);
  const Mat X = quadrature_ops<double>(4, kResourceHbar).X;
  CHECK(max_abs<double>(Mat(H - kron<double>(Mat::Identity(4, 4), kron<double>(X, X)))) == 0.0);
  CHECK(hermiticity_defect(H) <= 1e-12);

  q = zero_form(1);
  q.b = {1};
  const OperatorSpec s = quadratic_spec(q);
  const Mat G = build_global_hamiltonian(s, {4}, 4, 4);
  auto eg = eigh<double>(G);
  auto ea = eigh<double>(build_matrix(s, {4}));
  auto ex = eigh<double>(X);
  std::vector<double> prod;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) prod.push_back(ea.evals[i] * ex.evals[j] * ex.evals[k]);
  std::sort(prod.begin(), prod.end());
  for (int i = 0; i < 64; ++i) CHECK(std::abs(prod[i] - eg.evals[i]) <= 1e-12);

  CHECK_THROWS_AS(build_global_hamiltonian(s, {40}, 30, 30, 4096), Error);
}

TEST_CASE("trotter_terms classification") {
  QuadraticForm q = zero_form(2);
  q.lambda = 0.5;
  q.b = {1, 0};
  q.beta = {0, -4};
  q.alpha = {2, 0};
  const auto t = trotter_terms(quadratic_spec(q));
  REQUIRE(t.size() == 4);
  CHECK(t[0].kind == TermKind::XX);
  CHECK(t[0].s_mode == 2);
  CHECK(t[0].y_mode == 3);
  CHECK(t[1].kind == TermKind::XXX);
  CHECK(t[1].fourier);
  CHECK(t[1].data_mode == 0);
  CHECK(t[2].kind == TermKind::X2XX);
  CHECK_FALSE(t[2].fourier);
  CHECK(t[3].kind == TermKind::X2XX);
  CHECK(t[3].fourier);
  CHECK(t[3].data_mode == 1);
  CHECK(t[3].coeff == -8.0);

  OperatorSpec cubic{1, {{1.0, {{0, Quad::X, 3}}}}};
  CHECK_THROWS_AS(trotter_terms(cubic), Error);
  OperatorSpec cross{2, {{1.0, {{0, Quad::X, 1}, {1, Quad::X, 1}}}}};
  CHECK_THROWS_AS(trotter_terms(cross), Error);
}

TEST_CASE("operator json round trip and shorthand") {
  const auto j = nlohmann::json::parse(R"({"lambda": 0, "beta": [-4, -4]})");
  const OperatorSpec s = spec_from_json(j);
  CHECK(s.n_modes == 2);
  CHECK(s.terms.size() == 2);
  const OperatorSpec back = spec_from_json(spec_to_json(s));
  CHECK(back.n_modes == s.n_modes);
  REQUIRE(back.terms.size() == s.terms.size());
  for (std::size_t i = 0; i < s.terms.size(); ++i) {
    CHECK(back.terms[i].coeff == s.terms[i].coeff);
    CHECK(back.terms[i].factors == s.terms[i].factors);
  }
  CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"n_modes": 1, "terms": [{"coeff": "x"}]})")), Error);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"a": [1, 2], "b": [1]})")), Error);
}
