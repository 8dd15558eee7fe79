#include "cvinv/kernel.hpp"

#include <cmath>
#include <numbers>

namespace cvinv {

namespace {
constexpr double kPi = std::numbers::pi;

double x_extent(int d, double hbar) {
  // comfortably past the classical turning point of the top level
  return std::sqrt(2 * hbar) * (std::sqrt(2.0 * d + 1) + 6.0);
}

RealVec psi_on(const Vec& gamma, const RealVec& x, double hbar) {
  const int d = int(gamma.size());
  RealVec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const RealVec h = hermite_all<double>(d - 1, x[i], hbar);
    out[i] = (gamma.real().dot(h));
  }
  return out;
}

void check_gamma(const Vec& gamma) {
  if (gamma.size() == 0) throw Error(ErrorCode::InvalidArgument, "g_of_a: empty coefficient vector");
  if (std::abs(gamma.squaredNorm() - 1.0) > 1e-6)
    throw Error(ErrorCode::InvalidArgument, "g_of_a: coefficients not normalized");
  if (gamma.imag().cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::InvalidArgument, "g_of_a: complex coefficients give a complex kernel");
}
}  // namespace

void ApproxParams::validate() const {
  if (!(L > 0)) throw Error(ErrorCode::InvalidArgument, "L must be positive");
  if (!(delta >= 0)) throw Error(ErrorCode::InvalidArgument, "delta must be nonnegative");
  if (k && !(*k > 0)) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (grid.x_points < 16 || grid.y_points < 16)
    throw Error(ErrorCode::InvalidArgument, "quadrature grid needs at least 16 points per axis");
}

double f_closed(double a, const ApproxParams& p) {
  if (a == 0.0) return 0.0;
  const double d2 = p.delta * p.delta;
  const double s = a * a + d2 + d2 * d2;
  return -a * std::expm1(-p.L * p.L * s / (2 * (1 + d2))) / (std::sqrt(1 + d2) * s);
}

double f_finite_step(double a, double L) {
  if (a == 0.0) return 0.0;
  return -std::expm1(-a * a * L * L) / a;
}

double f_erf_smoothed(double a, double k) {
  if (a == 0.0) return 0.0;
  return std::sqrt(2.0 / (2.0 + a * a / (k * k))) / a;
}

double f_finite_precision_only(double a, double delta) {
  const double d2 = delta * delta;
  return 2 * a * std::sqrt(kPi) * delta / (std::sqrt(1 + d2) * (a * a + d2 + d2 * d2));
}

std::complex<double> f_riemann(double a, const ApproxParams& p) {
  p.validate();
  if (p.grid.y_halfwidth < 8.0)
    throw Error(ErrorCode::InvalidArgument, "f_riemann: y half-width below 8");
  const int nx = p.grid.x_points, ny = p.grid.y_points;
  const double Y = p.grid.y_halfwidth;
  const double dx = p.L / nx, dy = 2 * Y / ny;
  const double d2 = p.delta * p.delta;

  std::vector<double> yv(ny), wy(ny);
  for (int j = 0; j < ny; ++j) {
    yv[j] = -Y + (j + 0.5) * dy;
    wy[j] = yv[j] * std::exp(-yv[j] * yv[j] * (1 + d2) / 2);
  }
  double re = 0, im = 0;
  for (int i = 0; i < nx; ++i) {
    const double x = (i + 0.5) * dx;
    double c = 0, s = 0;
    for (int j = 0; j < ny; ++j) {
      const double ph = a * x * yv[j];
      c += wy[j] * std::cos(ph);
      s += wy[j] * std::sin(ph);
    }
    const double gx = std::exp(-x * x * d2 / 2);
    // (i/sqrt(2pi)) * (c - i s) = (s + i c)/sqrt(2pi)
    re += gx * s;
    im += gx * c;
  }
  const double pref = 2 * std::sqrt(kPi) * p.delta * dx * dy / std::sqrt(2 * kPi);
  return {pref * re, pref * im};
}

CheckedValue f_riemann_checked(double a, const ApproxParams& p, double tol) {
  ApproxParams fine = p;
  fine.grid.x_points *= 2;
  fine.grid.y_points *= 2;
  CheckedValue r{f_riemann(a, p), f_riemann(a, fine), 0.0};
  const double ref = std::max(std::abs(r.refined), 1e-300);
  r.rel_change = std::abs(r.refined - r.value) / ref;
  if (std::abs(r.refined) > 1e-14 && r.rel_change > 10 * tol)
    throw Error(ErrorCode::GridTooCoarse,
                "f_riemann: grid doubling moved the result by " + std::to_string(r.rel_change));
  return r;
}

double g_of_a(double a, const Vec& gamma, double hbar) {
  check_gamma(gamma);
  const double R = x_extent(int(gamma.size()), hbar);
  const int n = 8001;
  RealVec x = RealVec::LinSpaced(n, -R, R);
  const double dx = x[1] - x[0];
  const RealVec psi = psi_on(gamma, x, hbar);
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * x[i] * psi[i] * std::exp(-a * a * x[i] * x[i] / 2);
  }
  return a * acc * dx;
}

double g_of_a_2d(double a, const Vec& gamma, const ApproxParams& p, double hbar) {
  check_gamma(gamma);
  const double R = x_extent(int(gamma.size()), hbar);
  const int nx = p.grid.x_points, ny = p.grid.y_points;
  const double Y = p.grid.y_halfwidth;
  const double dx = 2 * R / nx, dy = 2 * Y / ny;
  RealVec x(nx);
  for (int i = 0; i < nx; ++i) x[i] = -R + (i + 0.5) * dx;
  const RealVec psi = psi_on(gamma, x, hbar);
  std::vector<double> yv(ny), wy(ny);
  for (int j = 0; j < ny; ++j) {
    yv[j] = -Y + (j + 0.5) * dy;
    wy[j] = yv[j] * std::exp(-yv[j] * yv[j] / 2);
  }
  double re = 0;
  for (int i = 0; i < nx; ++i) {
    double s = 0;
    for (int j = 0; j < ny; ++j) s += wy[j] * std::sin(a * x[i] * yv[j]);
    re += psi[i] * s;
  }
  return re * dx * dy / std::sqrt(2 * kPi);
}

CheckedValue g_of_a_2d_checked(double a, const Vec& gamma, const ApproxParams& p, double tol,
                               double hbar) {
  ApproxParams fine = p;
  fine.grid.x_points *= 2;
  fine.grid.y_points *= 2;
  CheckedValue r{g_of_a_2d(a, gamma, p, hbar), g_of_a_2d(a, gamma, fine, hbar), 0.0};
  const double ref = std::max(std::abs(r.refined), 1e-300);
  r.rel_change = std::abs(r.refined - r.value) / ref;
  if (std::abs(r.refined) > 1e-14 && r.rel_change > 10 * tol)
    throw Error(ErrorCode::GridTooCoarse,
                "g_of_a: grid doubling moved the result by " + std::to_string(r.rel_change));
  return r;
}

}  // namespace cvinv
