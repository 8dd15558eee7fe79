#include "cvinv/pipeline.hpp"

#include <cmath>
#include <numbers>

#include "cvinv/stateprep.hpp"

namespace cvinv {

namespace {
const double kSqrtPi = std::sqrt(std::numbers::pi);

Vec ancilla_raw(double delta, int d, double hbar) {
  if (!(delta > 0)) throw Error(ErrorCode::InvalidArgument, "squeezed_ancilla: delta must be positive");
  // integrand is bounded by exp(-p^2/2 delta^2), and psi_n dies past its turning point
  const double W = std::min(12.0 * delta, std::sqrt(2 * hbar) * (std::sqrt(2.0 * d + 1) + 12.0));
  const int n = 8001;
  const double dp = 2 * W / (n - 1);
  RealVec acc = RealVec::Zero(d);
  for (int i = 0; i < n; ++i) {
    const double p = -W + i * dp;
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += (w * std::exp(-p * p / (2 * delta * delta))) * hermite_all<double>(d - 1, p, hbar);
  }
  acc *= dp / (std::pow(std::numbers::pi, 0.25) * std::sqrt(delta));
  // <n|p> = i^n psi_n(p) conjugated gives the i^n prefactor on the overlap
  Vec c(d);
  for (int k = 0; k < d; ++k) {
    static const cplx ipow[4] = {1.0, cplx(0, 1), -1.0, cplx(0, -1)};
    c[k] = ipow[k % 4] * acc[k];
  }
  return c;
}
}  // namespace

InversionResult apply_inverse_spectral(const Mat& A, const State& f_in, const ApproxParams& p) {
  if (A.rows() != f_in.amp.size())
    throw Error(ErrorCode::DimMismatch, "operator and state dimensions differ");
  if (f_in.norm() == 0) throw Error(ErrorCode::ZeroOutput, "input state is zero");
  State f = f_in;
  f.normalize();
  const EigenDecomp<double> e = eigh<double>(A);
  const Vec c = e.evecs.adjoint() * f.amp;
  const double pref = 2 * kSqrtPi * p.delta;

  InversionResult r;
  Vec w(c.size());
  double fmax = 0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double Fa = f_closed(e.evals[i], p);
    fmax = std::max(fmax, std::abs(Fa));
    w[i] = pref * Fa * c[i];
    r.spectrum_report.push_back({e.evals[i], std::norm(c[i]), Fa});
  }
  const Vec raw = e.evecs * w;
  r.raw_norm_sq = w.squaredNorm();
  if (!(r.raw_norm_sq > 1e-24 * pref * pref * std::max(fmax * fmax, 1.0)))
    throw Error(ErrorCode::ZeroOutput, "all spectral weight sits where the kernel vanishes");
  r.output = State(f.cutoffs, raw / std::sqrt(r.raw_norm_sq));
  return r;
}

Vec squeezed_ancilla(double delta, int d, double hbar) {
  Vec c = ancilla_raw(delta, d, hbar);
  return c / c.norm();
}

double squeezed_ancilla_capture(double delta, int d, double hbar) {
  return ancilla_raw(delta, d, hbar).squaredNorm();
}

namespace {
InversionResult full_sim_once(const Mat& A, const State& f, const ApproxParams& p, int d_s, int d_y,
                              const FullSimOptions& opt) {
  const long long nA = A.rows();
  const long long total = nA * d_s * d_y;
  if (total > opt.budget)
    throw Error(ErrorCode::DimensionBudgetExceeded,
                "full simulation dimension " + std::to_string(total) + " exceeds " +
                    std::to_string(opt.budget));
  if (!(p.delta > 0)) throw Error(ErrorCode::InvalidArgument, "full simulation needs delta > 0");

  Vec s;
  if (opt.source) {
    if (opt.source->size() != d_s)
      throw Error(ErrorCode::ShapeMismatch, "prepared step state size differs from d_s");
    s = *opt.source / opt.source->norm();
  } else {
    s = step_state_coeffs(p.L, d_s - 1, kResourceHbar).coeffs.cast<cplx>();
  }
  Vec one = Vec::Zero(d_y);
  one[1] = 1;

  // |f> (x) |s> (x) |1>, data block treated as one register
  const std::vector<int> cut{int(nA), d_s, d_y};
  State psi = tensor<double>({State({int(nA)}, f.amp / f.norm()), State({d_s}, s), State({d_y}, one)});

  // exp(-i A (x) X_s (x) X_y), applied in the product eigenbasis
  const EigenDecomp<double> eA = eigh<double>(A);
  const EigenDecomp<double> eS = eigh<double>(quadrature_ops<double>(d_s, kResourceHbar).X);
  const EigenDecomp<double> eY = eigh<double>(quadrature_ops<double>(d_y, kResourceHbar).X);
  apply_product_phase<double>(psi.amp, cut, {0, 1, 2}, {&eA, &eS, &eY}, -1.0);

  // project both resource registers on the homodyne state
  const Vec ds = squeezed_ancilla(p.delta, d_s), dy = squeezed_ancilla(p.delta, d_y);
  Vec out = Vec::Zero(nA);
  for (long long i = 0; i < nA; ++i) {
    cplx acc = 0;
    for (int j = 0; j < d_s; ++j) {
      const cplx* row = psi.amp.data() + (i * d_s + j) * d_y;
      cplx inner = 0;
      for (int k = 0; k < d_y; ++k) inner += std::conj(dy[k]) * row[k];
      acc += std::conj(ds[j]) * inner;
    }
    out[i] = acc;
  }

  InversionResult r;
  r.raw_norm_sq = out.squaredNorm();
  if (!(r.raw_norm_sq > 1e-30)) throw Error(ErrorCode::ZeroOutput, "post-selected state vanishes");
  r.output = State(f.cutoffs, out / std::sqrt(r.raw_norm_sq));
  const Vec c = eA.evecs.adjoint() * (f.amp / f.norm());
  for (Eigen::Index i = 0; i < c.size(); ++i)
    r.spectrum_report.push_back({eA.evals[i], std::norm(c[i]), f_closed(eA.evals[i], p)});
  return r;
}
}  // namespace

InversionResult run_full_simulation(const Mat& A, const State& f, const ApproxParams& p, int d_s,
                                    int d_y, const FullSimOptions& opt) {
  if (A.rows() != f.amp.size()) throw Error(ErrorCode::DimMismatch, "operator and state dimensions differ");
  InversionResult r = full_sim_once(A, f, p, d_s, d_y, opt);
  if (opt.convergence_tol > 0 && !opt.source) {
    const InversionResult r2 = full_sim_once(A, f, p, 2 * d_s, 2 * d_y, opt);
    const double moved = 1 - state_fidelity<double>(r.output.amp, r2.output.amp);
    if (moved > opt.convergence_tol)
      throw Error(ErrorCode::NonConvergedTruncation,
                  "doubling resource cutoffs moved the output by " + std::to_string(moved));
  }
  return r;
}

std::vector<std::pair<double, double>> success_probability_scan(const Mat& A, const State& f,
                                                                const std::vector<double>& deltas,
                                                                double L) {
  std::vector<std::pair<double, double>> out;
  for (double d : deltas) {
    if (!(d > 0)) throw Error(ErrorCode::InvalidArgument, "delta values must be positive");
    ApproxParams p;
    p.L = L;
    p.delta = d;
    out.emplace_back(d, apply_inverse_spectral(A, f, p).raw_norm_sq);
  }
  return out;
}

Eigen::MatrixXcd position_wavefunction(const State& s, const std::vector<RealVec>& grids, double hbar) {
  if (int(grids.size()) != s.modes())
    throw Error(ErrorCode::ShapeMismatch, "one grid per mode required");
  if (s.modes() == 1) {
    const Eigen::MatrixXd H = hermite_table<double>(s.cutoffs[0], grids[0], hbar);
    return H.transpose().cast<cplx>() * s.amp;
  }
  if (s.modes() == 2) {
    const Eigen::MatrixXd H1 = hermite_table<double>(s.cutoffs[0], grids[0], hbar);
    const Eigen::MatrixXd H2 = hermite_table<double>(s.cutoffs[1], grids[1], hbar);
    // amp is row-major over (n1, n2)
    const Eigen::Map<const Mat> Cm(s.amp.data(), s.cutoffs[1], s.cutoffs[0]);
    const Mat C = Cm.transpose();
    return H1.transpose().cast<cplx>() * C * H2.cast<cplx>();
  }
  throw Error(ErrorCode::ShapeMismatch, "position_wavefunction supports one or two modes");
}

}  // namespace cvinv
