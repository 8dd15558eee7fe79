#pragma once

#include <complex>
#include <optional>

#include "cvinv/fock.hpp"

namespace cvinv {

struct QuadGrid {
  int x_points = 600;
  int y_points = 600;
  double y_halfwidth = 8.0;
};

struct ApproxParams {
  double L = 7.0;       // step width
  double delta = 0.1;   // homodyne precision
  std::optional<double> k;  // erf slope
  QuadGrid grid;

  void validate() const;
};

// F(a) including finite L and finite delta; F(0) = 0.
double f_closed(double a, const ApproxParams& p);
// (1 - exp(-a^2 L^2)) / a
double f_finite_step(double a, double L);
// (1/a) sqrt(2 / (2 + a^2/k^2))
double f_erf_smoothed(double a, double k);
// 2 sqrt(pi) delta a / (sqrt(1+delta^2)(a^2+delta^2+delta^4))
double f_finite_precision_only(double a, double delta);

// Midpoint double sum of the output-kernel integral with the full g(x,y)
// prefactor, i.e. an oracle for 2 sqrt(pi) delta F(a).
std::complex<double> f_riemann(double a, const ApproxParams& p);

struct CheckedValue {
  std::complex<double> value;    // at p.grid
  std::complex<double> refined;  // both axes doubled
  double rel_change;
};
// Throws GridTooCoarse when doubling both axes moves the result by more than
// 10 * tol (relative).
CheckedValue f_riemann_checked(double a, const ApproxParams& p, double tol = 1e-3);

// G(a) = a * int x Psi(x) exp(-a^2 x^2 / 2) dx with Psi = sum gamma_n psi_n.
double g_of_a(double a, const Vec& gamma, double hbar = kResourceHbar);
// Same quantity from the untouched (x, y) double integral on p.grid.
double g_of_a_2d(double a, const Vec& gamma, const ApproxParams& p, double hbar = kResourceHbar);
CheckedValue g_of_a_2d_checked(double a, const Vec& gamma, const ApproxParams& p,
                               double tol = 1e-4, double hbar = kResourceHbar);

}  // namespace cvinv
