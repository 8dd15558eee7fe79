#include "doctest.h"

#include <cmath>
#include <numbers>

#include "cvinv/kernel.hpp"
#include "cvinv/stateprep.hpp"

using namespace cvinv;

namespace {
const double kSqrtPi = std::sqrt(std::numbers::pi);

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double argmax_closed(const ApproxParams& p) {
  double best = 0, at = 0;
  for (int i = 1; i <= 20000; ++i) {
    const double a = i * 1e-4;
    const double v = f_closed(a, p);
    if (v > best) best = v, at = a;
  }
  return at;
}
}  // namespace

TEST_CASE("f_closed") {
  ApproxParams p;
  CHECK(f_closed(0.0, p) == 0.0);
  for (double a : {0.03, 0.4, 1.7, 6.0}) CHECK(f_closed(-a, p) == -f_closed(a, p));
  CHECK(f_closed(2.0, p) == doctest::Approx(0.49626).epsilon(1e-5));
  for (double a = 2.0; a <= 5.0; a += 0.01) CHECK(rel(f_closed(a, p), 1 / a) <= 0.01);
}

TEST_CASE("f_closed rises to one maximum then falls, peak moves in with L") {
  ApproxParams p;
  const double astar = argmax_closed(p);
  double prev = 0;
  for (int i = 1; i <= 20000; ++i) {
    const double a = i * 1e-4, v = f_closed(a, p);
    if (a <= astar) CHECK(v >= prev);
    else CHECK(v <= prev);
    prev = v;
  }
  ApproxParams q = p;
  q.L = 14;
  CHECK(argmax_closed(q) < astar);
}

TEST_CASE("f_finite_step") {
  CHECK(f_finite_step(0.0, 7) == 0.0);
  CHECK(f_finite_step(1.0, 7) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(f_finite_step(0.5, 100) - 2.0) <= 1e-9);
  for (double a = 2.0; a <= 5.0; a += 0.01) CHECK(rel(f_finite_step(a, 7), 1 / a) <= 0.01);
}

TEST_CASE("f_erf_smoothed") {
  CHECK(f_erf_smoothed(0.0, 1) == 0.0);
  CHECK(f_erf_smoothed(1.0, 1.0) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-14));
  CHECK(f_erf_smoothed(1.0, 1.0) == doctest::Approx(0.81650).epsilon(1e-5));
  CHECK(rel(f_erf_smoothed(1.3, 1e6), 1 / 1.3) <= 1e-11);
  for (double a : {0.1, 0.5, 1.0}) {
    const double k = 10.0 * a;  // a/k = 0.1
    const double u = a * a / (k * k);
    // sqrt(2/(2+u)) = 1 - u/4 + 3u^2/32 - ...
    const double series = (1 / a) * (1 - u / 4);
    CHECK(std::abs(f_erf_smoothed(a, k) - series) * a <= 0.1 * u * u);
    CHECK(std::abs(f_erf_smoothed(a, k) - series) * a >= 0.05 * u * u);
    // a quadratic coefficient of 1/2 misses by u/4, far outside O(u^2)
    CHECK(std::abs(f_erf_smoothed(a, k) * a - (1 - u / 2)) == doctest::Approx(u / 4).epsilon(0.02));
  }
}

TEST_CASE("f_erf_smoothed: 1% window on [2,5]") {
  // at k = 10 the relative gap at a = 5 is 1 - sqrt(2/2.25), about 5.7%
  CHECK(rel(f_erf_smoothed(5.0, 10), 0.2) == doctest::Approx(1 - std::sqrt(2 / 2.25)).epsilon(1e-12));
  // k = 25 is the smallest round slope that keeps [2,5] within 1%
  for (double a = 2.0; a <= 5.0; a += 0.01) CHECK(rel(f_erf_smoothed(a, 25), 1 / a) <= 0.01);
}

TEST_CASE("f_finite_precision_only") {
  const double d = 0.1;
  const double ref = 2 * kSqrtPi * d / (std::sqrt(1 + d * d) * (1 + d * d + d * d * d * d));
  CHECK(f_finite_precision_only(1.0, d) == doctest::Approx(ref).epsilon(1e-14));
  CHECK(f_finite_precision_only(1.0, d) == doctest::Approx(0.349204).epsilon(1e-6));
  const double r1 = f_finite_precision_only(2.0, 0.05) / 0.05, r2 = f_finite_precision_only(2.0, 0.1) / 0.1;
  CHECK(rel(r1, r2) <= 0.01);
  CHECK(f_finite_precision_only(-0.7, d) == -f_finite_precision_only(0.7, d));
  CHECK(f_finite_precision_only(0.0, d) == 0.0);
}

TEST_CASE("f_riemann against the closed form") {
  ApproxParams p;
  CHECK(std::abs(f_riemann(0.0, p)) <= 1e-10);
  for (double a : {0.5, 1.0, 2.0, 5.0}) {
    const std::complex<double> r = f_riemann(a, p);
    const double target = 2 * kSqrtPi * p.delta * f_closed(a, p);
    CHECK(std::abs(r.real() - target) / std::abs(target) <= 1e-3);
    CHECK(std::abs(r.imag()) <= 1e-6 * std::abs(r.real()));
  }
}

TEST_CASE("f_riemann converges at second order") {
  ApproxParams coarse, fine;
  coarse.grid = {150, 150, 8.0};
  fine.grid = {300, 300, 8.0};
  const double a = 1.0;
  const double exact = 2 * kSqrtPi * 0.1 * f_closed(a, coarse);
  const double e1 = std::abs(f_riemann(a, coarse).real() - exact);
  const double e2 = std::abs(f_riemann(a, fine).real() - exact);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("f_riemann_checked flags a coarse grid") {
  ApproxParams p;
  p.grid = {16, 16, 8.0};
  CHECK_THROWS_AS(f_riemann_checked(2.0, p), Error);
  ApproxParams q;
  q.grid = {300, 300, 8.0};
  const CheckedValue v = f_riemann_checked(2.0, q);
  CHECK(v.rel_change <= 1e-2);
  ApproxParams narrow;
  narrow.grid.y_halfwidth = 4;
  CHECK_THROWS_AS(f_riemann(1.0, narrow), Error);
}

TEST_CASE("g_of_a parity") {
  Vec vac = Vec::Zero(10);
  vac[0] = 1;
  for (double a : {0.3, 1.0, 3.0}) CHECK(std::abs(g_of_a(a, vac)) <= 1e-12);
  Vec mix = Vec::Zero(10);
  mix[0] = 0.6;
  mix[1] = 0.8;
  for (double a : {0.3, 1.0, 3.0}) CHECK(g_of_a(-a, mix) == doctest::Approx(-g_of_a(a, mix)).epsilon(1e-13));
  Vec bad = mix * 2.0;
  CHECK_THROWS_AS(g_of_a(1.0, bad), Error);
}

TEST_CASE("g_of_a on the exact step state tracks the finite-step kernel") {
  const StepStateTarget t = step_state_coeffs(7.0, 41);
  const Vec gamma = t.coeffs.cast<cplx>();
  for (double a = 0.5; a <= 2.0 + 1e-12; a += 0.25) {
    const double G = std::sqrt(7.0) * g_of_a(a, gamma);
    CHECK(rel(G, f_finite_step(a, 7)) <= 0.02);
  }
}

TEST_CASE("g_of_a closed y-integral agrees with 2D quadrature") {
  const StepStateTarget t = step_state_coeffs(7.0, 20);
  const Vec gamma = t.coeffs.cast<cplx>();
  ApproxParams p;
  p.grid = {600, 600, 8.0};
  for (double a : {0.5, 1.0, 2.0}) {
    const CheckedValue v = g_of_a_2d_checked(a, gamma, p);
    CHECK(std::abs(v.refined.real() - g_of_a(a, gamma)) <= 1e-4);
  }
}
