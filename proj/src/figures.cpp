#include "cvinv/figures.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <unsupported/Eigen/FFT>

#include "cvinv/operator.hpp"

namespace cvinv {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

void approx_header(std::ostringstream& os, const ApproxParams& p) {
  os << "# L=" << num(p.L) << " delta=" << num(p.delta);
  if (p.k) os << " k=" << num(*p.k);
  os << "\n";
}

double pearson(const RealVec& a, const RealVec& b) {
  const RealVec x = a.array() - a.mean(), y = b.array() - b.mean();
  return x.dot(y) / (x.norm() * y.norm());
}

}  // namespace

Vec project_function(const std::function<double(double)>& f, int d, double R, int points, double hbar) {
  if (d < 1 || points < 3 || !(R > 0)) throw Error(ErrorCode::InvalidArgument, "project_function: bad grid");
  const double h = 2 * R / (points - 1);
  RealVec c = RealVec::Zero(d);
  for (int i = 0; i < points; ++i) {
    const double x = -R + i * h;
    const double w = (i == 0 || i == points - 1) ? 0.5 : 1.0;
    c += (w * h * f(x)) * hermite_all<double>(d - 1, x, hbar);
  }
  return c.cast<cplx>();
}

// ---- kernel curves

KernelCurves kernel_curves(const KernelCurvesConfig& cfg) {
  cfg.approx.validate();
  if (cfg.samples < 2 || !(cfg.a_max > cfg.a_min))
    throw Error(ErrorCode::InvalidArgument, "kernel curves: need samples >= 2 and a_max > a_min");
  const double k = cfg.approx.k.value_or(10.0);
  const double pref = 2 * std::sqrt(std::numbers::pi) * cfg.approx.delta;
  KernelCurves out;
  for (int i = 0; i < cfg.samples; ++i) {
    double a = cfg.a_min + (cfg.a_max - cfg.a_min) * i / (cfg.samples - 1);
    if (std::abs(a) < 1e-14) a = 0;
    KernelRow r;
    r.a = a;
    r.inv = a == 0 ? std::numeric_limits<double>::quiet_NaN() : 1 / a;
    r.f = f_closed(a, cfg.approx);
    r.oracle = cfg.oracle ? f_riemann(a, cfg.approx).real() / pref : std::numeric_limits<double>::quiet_NaN();
    r.finite_step = f_finite_step(a, cfg.approx.L);
    r.erf = f_erf_smoothed(a, k);
    if (cfg.oracle && std::abs(a) >= 0.5)
      out.max_oracle_rel = std::max(out.max_oracle_rel, std::abs(r.oracle - r.f) / std::abs(r.f));
    out.rows.push_back(r);
  }
  const int n = int(out.rows.size());
  for (int i = 0; i < n; ++i)
    if (std::abs(out.rows[i].a + out.rows[n - 1 - i].a) < 1e-12 && out.rows[i].f != -out.rows[n - 1 - i].f)
      out.antisymmetric = false;
  for (int i = 0; i <= 3000; ++i) {
    const double a = 2.0 + i * 1e-3;
    out.max_rel_err_2_5 = std::max(out.max_rel_err_2_5, std::abs(f_closed(a, cfg.approx) * a - 1.0));
  }
  return out;
}

std::string kernel_curves_csv(const KernelCurves& k, const KernelCurvesConfig& cfg) {
  std::ostringstream os;
  os << "# schema=cvinv.kernel-curves/1\n";
  os << "# units: a in inverse position units of the data mode (hbar=1/2); kernels in the same units as 1/a\n";
  approx_header(os, cfg.approx);
  os << "# erf slope k=" << num(cfg.approx.k.value_or(10.0)) << "; oracle = riemann sum / (2 sqrt(pi) delta) on "
     << cfg.approx.grid.x_points << "x" << cfg.approx.grid.y_points << "\n";
  os << "a,inv_a,F,oracle,finite_step,erf_smoothed\n";
  for (const KernelRow& r : k.rows)
    os << num(r.a) << "," << num(r.inv) << "," << num(r.f) << "," << num(r.oracle) << "," << num(r.finite_step)
       << "," << num(r.erf) << "\n";
  return os.str();
}

// ---- integration

IntegrateResult run_integrate(const IntegrateConfig& cfg) {
  cfg.approx.validate();
  if (cfg.cutoff < 2) throw Error(ErrorCode::InvalidArgument, "integrate: cutoff must be >= 2");
  const std::function<double(double)> f =
      cfg.input ? cfg.input
                : std::function<double(double)>([&](double x) {
                    return std::sin(cfg.omega * x) * std::exp(-x * x / (2 * cfg.sigma * cfg.sigma));
                  });
  const int dw = cfg.cutoff + cfg.pad;
  const Vec c = project_function(f, dw, cfg.half_width, cfg.points);

  const double h = 2 * cfg.half_width / (cfg.points - 1);
  std::vector<double> xs(cfg.points), fs(cfg.points);
  double fnorm = 0;
  for (int i = 0; i < cfg.points; ++i) {
    xs[i] = -cfg.half_width + i * h;
    fs[i] = f(xs[i]);
    fnorm += fs[i] * fs[i] * h;
  }

  IntegrateResult r;
  r.input_capture = fnorm > 0 ? c.head(cfg.cutoff).squaredNorm() / fnorm : 0;
  if (c.norm() == 0) throw Error(ErrorCode::ZeroOutput, "integrate: input function projects to zero");

  QuadraticForm q;
  q.a = {0};
  q.b = {1};
  q.alpha = {0};
  q.beta = {0};
  const Mat A = build_matrix(quadratic_spec(q), {dw});
  const InversionResult inv = apply_inverse_spectral(A, State({dw}, c), cfg.approx);
  r.raw_norm_sq = inv.raw_norm_sq;
  const Vec out = inv.output.amp.head(cfg.cutoff);

  // trapezoid antiderivative from the left edge
  std::vector<double> anti(cfg.points, 0.0);
  for (int i = 1; i < cfg.points; ++i) anti[i] = anti[i - 1] + 0.5 * (fs[i] + fs[i - 1]) * h;

  std::vector<int> idx;
  for (int i = 0; i < cfg.points; ++i)
    if (std::abs(xs[i]) <= cfg.window + 1e-12) idx.push_back(i);
  const int m = int(idx.size());
  RealVec xw(m), fw(m), aw(m);
  for (int i = 0; i < m; ++i) {
    xw[i] = xs[idx[i]];
    fw[i] = fs[idx[i]];
    aw[i] = anti[idx[i]];
  }
  aw.array() -= aw.mean();
  const Vec psi = position_wavefunction(State({cfg.cutoff}, out), {xw});
  const cplx z = (psi.adjoint() * aw.cast<cplx>())(0, 0);
  const Vec aligned = std::abs(z) > 0 ? Vec(psi * (z / std::abs(z))) : psi;
  r.correlation = pearson(aligned.real(), aw);

  for (int i = 0; i < m; i += cfg.stride) {
    r.x.conservativeResize(r.x.size() + 1);
    r.x[r.x.size() - 1] = xw[i];
  }
  const int ns = int(r.x.size());
  r.input.resize(ns);
  r.oracle.resize(ns);
  r.output.resize(ns);
  for (int i = 0; i < ns; ++i) {
    r.input[i] = fw[i * cfg.stride];
    r.oracle[i] = aw[i * cfg.stride];
    r.output[i] = aligned[i * cfg.stride];
  }
  return r;
}

std::string integrate_csv(const IntegrateResult& r, const IntegrateConfig& cfg) {
  std::ostringstream os;
  os << "# schema=cvinv.integrate/1\n";
  os << "# convention: hbar=1/2 data mode, A=P; output is the normalized wavefunction, phase aligned to the oracle\n";
  approx_header(os, cfg.approx);
  os << "# omega=" << num(cfg.omega) << " sigma=" << num(cfg.sigma) << " cutoff=" << cfg.cutoff
     << " correlation=" << num(r.correlation) << "\n";
  os << "x,input,output_re,output_im,oracle\n";
  for (Eigen::Index i = 0; i < r.x.size(); ++i)
    os << num(r.x[i]) << "," << num(r.input[i]) << "," << num(r.output[i].real()) << "," << num(r.output[i].imag())
       << "," << num(r.oracle[i]) << "\n";
  return os.str();
}

// ---- Poisson

namespace {
Eigen::MatrixXcd fft2(const Eigen::MatrixXcd& in, bool inverse) {
  Eigen::FFT<double> fft;
  const Eigen::Index n = in.rows(), m = in.cols();
  Eigen::MatrixXcd tmp(n, m), out(n, m);
  std::vector<cplx> src, dst;
  for (Eigen::Index j = 0; j < m; ++j) {
    src.assign(in.col(j).data(), in.col(j).data() + n);
    inverse ? fft.inv(dst, src) : fft.fwd(dst, src);
    for (Eigen::Index i = 0; i < n; ++i) tmp(i, j) = dst[i];
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    src.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) src[j] = tmp(i, j);
    inverse ? fft.inv(dst, src) : fft.fwd(dst, src);
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = dst[j];
  }
  return out;
}
}  // namespace

PoissonResult run_poisson(const PoissonConfig& cfg) {
  cfg.approx.validate();
  if (cfg.cutoff < 2) throw Error(ErrorCode::InvalidArgument, "poisson: cutoff must be >= 2");
  if (cfg.grid < 8 || cfg.grid % 2) throw Error(ErrorCode::InvalidArgument, "poisson: grid must be even and >= 8");
  const int d = cfg.cutoff, dw = cfg.cutoff + cfg.pad, N = cfg.grid;

  QuadraticForm q;
  q.a = {0, 0};
  q.b = {0, 0};
  q.alpha = {0, 0};
  q.beta = {-4, -4};
  const Mat A = build_matrix(quadratic_spec(q), {dw, dw});
  const InversionResult inv = apply_inverse_spectral(A, State::fock({dw, dw}, {1, 1}), cfg.approx);

  PoissonResult r;
  r.raw_norm_sq = inv.raw_norm_sq;
  Vec trunc(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) trunc[i * d + j] = inv.output.amp[i * dw + j];

  const double hx = 2 * cfg.half_width / N;
  r.x.resize(N);
  for (int i = 0; i < N; ++i) r.x[i] = -cfg.half_width + i * hx;
  // the spectral output is real for this real-symmetric problem
  const Eigen::MatrixXd u = position_wavefunction(State({d, d}, trunc), {r.x, r.x}).real();
  r.phi = -u;

  const RealVec p1 = hermite_table<double>(2, r.x, kHbar).row(1).transpose();
  r.rho = p1 * p1.transpose();

  // continuum oracle: lap u = rho with the same kernel filter on -k^2
  Eigen::MatrixXcd rk = fft2(r.rho.cast<cplx>(), false);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double k1 = 2 * std::numbers::pi * (i < N / 2 ? i : i - N) / (N * hx);
      const double k2 = 2 * std::numbers::pi * (j < N / 2 ? j : j - N) / (N * hx);
      rk(i, j) *= f_closed(-(k1 * k1 + k2 * k2), cfg.approx);
    }
  r.oracle = -fft2(rk, true).real();

  std::vector<int> win;
  for (int i = 0; i < N; ++i)
    if (std::abs(r.x[i]) <= cfg.window + 1e-12) win.push_back(i);
  double pq = 0, oo = 0, po = 0;
  for (int i : win)
    for (int j : win) {
      pq += r.phi(i, j) * r.phi(i, j);
      oo += r.oracle(i, j) * r.oracle(i, j);
      po += r.phi(i, j) * r.oracle(i, j);
    }
  // both sides keep their own sign: a flipped solution counts as a mismatch
  r.l2_diff = std::sqrt(std::max(0.0, 2 - 2 * po / std::sqrt(pq * oo)));

  r.Ex = Eigen::MatrixXd::Zero(N, N);
  r.Ey = Eigen::MatrixXd::Zero(N, N);
  double emax = 0;
  for (int i = 1; i < N - 1; ++i)
    for (int j = 1; j < N - 1; ++j) {
      r.Ex(i, j) = -(r.phi(i + 1, j) - r.phi(i - 1, j)) / (2 * hx);
      r.Ey(i, j) = -(r.phi(i, j + 1) - r.phi(i, j - 1)) / (2 * hx);
      emax = std::max(emax, std::hypot(r.Ex(i, j), r.Ey(i, j)));
    }
  const int o = N / 2;
  r.origin_field = std::hypot(r.Ex(o, o), r.Ey(o, o)) / emax;

  const int s = int(std::lround(1.0 / hx));
  r.quadrants_ok = true;
  for (int si : {-1, 1})
    for (int sj : {-1, 1}) {
      const int i = o + si * s, j = o + sj * s;
      if (!(r.phi(i, j) * r.rho(i, j) > 0)) r.quadrants_ok = false;
    }
  return r;
}

std::string poisson_csv(const PoissonResult& r, const PoissonConfig& cfg, int stride) {
  std::ostringstream os;
  os << "# schema=cvinv.poisson/1\n";
  os << "# convention: hbar=1/2 data modes, A=-4(P1^2+P2^2), input |1>|1>; phi = -(output wavefunction) so that "
        "lap phi = -rho with eps=1, arbitrary overall scale\n";
  approx_header(os, cfg.approx);
  os << "# cutoff=" << cfg.cutoff << " grid=" << cfg.grid << " stride=" << stride << " l2_diff=" << num(r.l2_diff)
     << "\n";
  os << "x,y,rho,phi,oracle_phi,Ex,Ey\n";
  const int N = int(r.x.size());
  for (int i = 0; i < N; i += stride)
    for (int j = 0; j < N; j += stride)
      os << num(r.x[i]) << "," << num(r.x[j]) << "," << num(r.rho(i, j)) << "," << num(r.phi(i, j)) << ","
         << num(r.oracle(i, j)) << "," << num(r.Ex(i, j)) << "," << num(r.Ey(i, j)) << "\n";
  return os.str();
}

// ---- verification suite

std::vector<VerifyRow> verify_suite(const std::vector<int>& cutoffs) {
  std::vector<VerifyRow> rows;
  for (const SymbolicRule& r : symbolic_rules()) {
    VerifyRow row;
    row.name = r.name;
    try {
      const SymbolicResult s = verify_symbolic(r.product, r.n_modes, r.target);
      row.method = "symbolic";
      row.pass = s.pass;
      row.detail = s.pass ? "phase " + s.phase.str(r.names) : s.detail;
      rows.push_back(row);
      continue;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotShiftPhaseClosed) throw;
    }
    // numeric fallback on low-energy product coherent states
    const std::vector<std::vector<cplx>> states = {{0.3, cplx(0, -0.2)}, {cplx(-0.1, 0.25), 0.0}};
    const Factor pk{0, Quad::P, 1};
    std::vector<Exp<double>> prod;
    Exp<double> target;
    if (r.name == "px2") {
      const double a = 0.5, kap = 0.2;
      prod = rule_factors("px2", {0, 1}, {a, kap});
      target = {3 * a * a * kap, {pk, {1, Quad::X, 2}}, -1};
      row.detail = "a=0.5 kap=0.2";
    } else {
      const double a = 0.5;
      prod = rule_factors("px3", {0, 1}, {a});
      target = {2 * a * a, {pk, {1, Quad::X, 3}}, -1};
      row.detail = "a=0.5";
    }
    const NumericCheck c = verify_numeric_product(prod, 2, target, cutoffs, states, false);
    row.method = "numeric";
    row.pass = c.decreasing;
    row.cutoffs = c.cutoffs;
    row.errors = c.errors;
    rows.push_back(row);
  }
  return rows;
}

std::string verify_suite_csv(const std::vector<VerifyRow>& rows) {
  std::ostringstream os;
  os << "# schema=cvinv.verify-decomp/1\n";
  os << "# convention: hbar=1/2, e^{i t P} shifts x by t/2; symbolic rows use exact rationals in a formal parameter, "
        "numeric rows report max state error per cutoff\n";
  os << "name,method,pass,cutoff,error,detail\n";
  for (const VerifyRow& r : rows) {
    if (r.errors.empty()) {
      os << r.name << "," << r.method << "," << (r.pass ? 1 : 0) << ",,," << r.detail << "\n";
      continue;
    }
    for (std::size_t i = 0; i < r.errors.size(); ++i)
      os << r.name << "," << r.method << "," << (r.pass ? 1 : 0) << "," << r.cutoffs[i] << "," << num(r.errors[i])
         << "," << r.detail << "\n";
  }
  return os.str();
}

// ---- state preparation

PrepareResult run_prepare(const PrepareConfig& cfg) {
  PrepareResult r;
  if (cfg.target == "single-photon") {
    r.target = single_photon(cfg.d);
  } else if (cfg.target == "step") {
    r.target = step_state_coeffs(cfg.L, cfg.d).coeffs.cast<cplx>();
  } else {
    throw Error(ErrorCode::InvalidArgument, "target must be single-photon or step");
  }
  r.opt = optimize(r.target, cfg.layers, cfg.opt);
  return r;
}

std::string prepare_history_csv(const PrepareResult& r, const PrepareConfig& cfg) {
  std::ostringstream os;
  os << "# schema=cvinv.prepare/1\n";
  os << "# target=" << cfg.target << " layers=" << cfg.layers << " d=" << cfg.d;
  if (cfg.target == "step") os << " L=" << num(cfg.L) << " (hbar=1 resource mode)";
  os << " seed=" << cfg.opt.seed << " lr=" << num(cfg.opt.lr) << " iterations=" << cfg.opt.iterations << "\n";
  os << "# best_fidelity=" << num(r.opt.best_fidelity) << " stalled=" << (r.opt.stalled ? 1 : 0) << "\n";
  os << "iteration,fidelity,best_so_far\n";
  for (std::size_t i = 0; i < r.opt.fidelity.size(); ++i)
    os << i << "," << num(r.opt.fidelity[i]) << "," << num(r.opt.best_so_far[i]) << "\n";
  return os.str();
}

}  // namespace cvinv
