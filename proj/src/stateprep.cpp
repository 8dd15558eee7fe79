#include "cvinv/stateprep.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <thread>

namespace cvinv {

using nlohmann::json;

void gauss_legendre(int n, RealVec& nodes, RealVec& weights) {
  // Golub-Welsch on the Jacobi matrix
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes = es.eigenvalues();
  weights = 2.0 * es.eigenvectors().row(0).transpose().array().square();
}

namespace {
RealVec integrate_psi(double L, int d, double hbar, int panels, const RealVec& gx, const RealVec& gw) {
  RealVec acc = RealVec::Zero(d + 1);
  const double h = L / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = p * h;
    for (Eigen::Index i = 0; i < gx.size(); ++i) {
      const double x = a + 0.5 * h * (gx[i] + 1.0);
      acc += (0.5 * h * gw[i]) * hermite_all<double>(d, x, hbar);
    }
  }
  return acc;
}
}  // namespace

StepStateTarget step_state_coeffs(double L, int d, double hbar) {
  if (!(L > 0)) throw Error(ErrorCode::InvalidArgument, "step width must be positive");
  if (d < 0) throw Error(ErrorCode::InvalidArgument, "cutoff must be >= 0");
  RealVec gx, gw;
  gauss_legendre(16, gx, gw);
  int panels = 4;
  RealVec prev = integrate_psi(L, d, hbar, panels, gx, gw);
  for (;;) {
    panels *= 2;
    RealVec cur = integrate_psi(L, d, hbar, panels, gx, gw);
    const double change = (cur - prev).cwiseAbs().maxCoeff();
    prev = std::move(cur);
    if (change < 1e-13 || panels >= 4096) break;
  }
  StepStateTarget t;
  t.L = L;
  t.d = d;
  t.coeffs = prev / std::sqrt(L);
  t.capture = t.coeffs.squaredNorm();
  t.coeffs /= std::sqrt(t.capture);
  return t;
}

Mat rotation(double phi, int d) {
  Vec diag(d);
  for (int n = 0; n < d; ++n) diag[n] = std::exp(cplx(0, phi * n));
  return diag.asDiagonal();
}

Mat kerr(double kappa, int d) {
  Vec diag(d);
  for (int n = 0; n < d; ++n) diag[n] = std::exp(cplx(0, kappa * double(n) * n));
  return diag.asDiagonal();
}

Mat squeeze(double r, double theta, int d) {
  const Mat a = annihilation<double>(d);
  const Mat a2 = a * a;
  const cplx z = std::polar(r, theta);
  // exp((z* a^2 - z a^dag^2)/2) = exp(-i H) with H Hermitian
  const Mat H = cplx(0, 1) * (std::conj(z) * a2 - z * a2.adjoint()) / 2.0;
  return expm_unitary<double>(H, 1.0);
}

Mat displacement(cplx alpha, int d) {
  const Mat a = annihilation<double>(d);
  const Mat H = cplx(0, 1) * (alpha * a.adjoint() - std::conj(alpha) * a);
  return expm_unitary<double>(H, 1.0);
}

Mat layer_unitary(const LayerParams& p, int d) {
  if (d < 4) throw Error(ErrorCode::InvalidArgument, "layer_unitary: d < 4");
  return kerr(p.kappa, d) * displacement(p.alpha, d) * rotation(p.phi2, d) *
         squeeze(p.r, p.theta, d) * rotation(p.phi1, d);
}

Vec network_state(const std::vector<LayerParams>& layers, int d) {
  if (layers.empty()) throw Error(ErrorCode::InvalidArgument, "network needs at least one layer");
  Vec v = Vec::Zero(d);
  v[0] = 1;
  for (const LayerParams& p : layers) v = layer_unitary(p, d) * v;
  return v;
}

double fidelity(const Vec& s, const Vec& t) {
  if (s.size() != t.size()) throw Error(ErrorCode::ShapeMismatch, "fidelity: cutoffs differ");
  return state_fidelity<double>(s, t);
}

Vec single_photon(int d) {
  Vec v = Vec::Zero(d);
  v[1] = 1;
  return v;
}

namespace {

constexpr int kPer = 7;  // phi1, r, theta, phi2, alpha_re, alpha_im, kappa

LayerParams unpack(const double* x) {
  return {x[0], x[1], x[2], x[3], cplx(x[4], x[5]), x[6]};
}

double wrap_angle(double a) {
  const double tp = 2 * std::numbers::pi;
  double w = std::fmod(a, tp);
  if (w <= -std::numbers::pi) w += tp;
  if (w > std::numbers::pi) w -= tp;
  return w;
}

struct LayerCache {
  Mat S, D;
};

// U v for one layer, reusing squeeze/displacement matrices when unchanged.
Vec apply_layer(const LayerParams& p, const Mat& S, const Mat& D, const Vec& v) {
  const int d = int(v.size());
  Vec w(d);
  for (int n = 0; n < d; ++n) w[n] = std::exp(cplx(0, p.phi1 * n)) * v[n];
  w = S * w;
  for (int n = 0; n < d; ++n) w[n] *= std::exp(cplx(0, p.phi2 * n));
  w = D * w;
  for (int n = 0; n < d; ++n) w[n] *= std::exp(cplx(0, p.kappa * double(n) * n));
  return w;
}

Vec apply_layer_adjoint(const LayerParams& p, const Mat& S, const Mat& D, const Vec& v) {
  const int d = int(v.size());
  Vec w(d);
  for (int n = 0; n < d; ++n) w[n] = std::exp(cplx(0, -p.kappa * double(n) * n)) * v[n];
  w = D.adjoint() * w;
  for (int n = 0; n < d; ++n) w[n] *= std::exp(cplx(0, -p.phi2 * n));
  w = S.adjoint() * w;
  for (int n = 0; n < d; ++n) w[n] *= std::exp(cplx(0, -p.phi1 * n));
  return w;
}

double penalty(const std::vector<double>& x, const OptConfig& c) {
  double pen = 0;
  for (std::size_t i = 0; i < x.size(); i += kPer) {
    const double r = std::abs(x[i + 1]);
    const double al = std::hypot(x[i + 4], x[i + 5]);
    if (r > c.penalty_threshold) pen += (r - c.penalty_threshold) * (r - c.penalty_threshold);
    if (al > c.penalty_threshold) pen += (al - c.penalty_threshold) * (al - c.penalty_threshold);
  }
  return c.penalty_weight * pen;
}

}  // namespace

LayerParams canonical(const LayerParams& p) {
  LayerParams q = p;
  if (q.r < 0) {
    q.r = -q.r;
    q.theta += std::numbers::pi;
  }
  q.phi1 = wrap_angle(q.phi1);
  q.phi2 = wrap_angle(q.phi2);
  q.theta = wrap_angle(q.theta);
  return q;
}

OptResult optimize(const Vec& target_in, int n_layers, const OptConfig& cfg) {
  if (n_layers < 1) throw Error(ErrorCode::InvalidArgument, "optimize: need at least one layer");
  if (std::abs(target_in.norm() - 1.0) > 1e-8)
    throw Error(ErrorCode::InvalidArgument, "optimize: target must have unit norm");
  const Vec target = target_in;
  const int d = int(target.size());
  const int np = n_layers * kPer;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> nd(0.0, cfg.init_scale);
  std::vector<double> x(np);
  for (double& v : x) v = nd(rng);

  std::vector<double> m(np, 0.0), v2(np, 0.0), grad(np, 0.0);
  OptResult res;
  std::vector<double> best_x = x;
  double best = -1;

  for (int it = 0; it < cfg.iterations; ++it) {
    // forward states and backward-propagated target
    std::vector<LayerParams> lp(n_layers);
    std::vector<LayerCache> cache(n_layers);
    for (int l = 0; l < n_layers; ++l) {
      lp[l] = unpack(&x[l * kPer]);
      cache[l].S = squeeze(lp[l].r, lp[l].theta, d);
      cache[l].D = displacement(lp[l].alpha, d);
    }
    std::vector<Vec> fwd(n_layers + 1), bwd(n_layers + 1);
    fwd[0] = Vec::Zero(d);
    fwd[0][0] = 1;
    for (int l = 0; l < n_layers; ++l) fwd[l + 1] = apply_layer(lp[l], cache[l].S, cache[l].D, fwd[l]);
    bwd[n_layers] = target;
    for (int l = n_layers - 1; l >= 0; --l)
      bwd[l] = apply_layer_adjoint(lp[l], cache[l].S, cache[l].D, bwd[l + 1]);

    const double fid = std::norm(target.dot(fwd[n_layers]));
    res.fidelity.push_back(fid);
    if (fid > best) {
      best = fid;
      best_x = x;
    }
    res.best_so_far.push_back(best);
    if (it + 1 == cfg.iterations) break;

    auto fid_with = [&](int idx, double val) {
      const int l = idx / kPer, k = idx % kPer;
      double xs[kPer];
      for (int q = 0; q < kPer; ++q) xs[q] = x[l * kPer + q];
      xs[k] = val;
      const LayerParams p = unpack(xs);
      Mat S, D;
      const Mat* Sp = &cache[l].S;
      const Mat* Dp = &cache[l].D;
      if (k == 1 || k == 2) {
        S = squeeze(p.r, p.theta, d);
        Sp = &S;
      }
      if (k == 4 || k == 5) {
        D = displacement(p.alpha, d);
        Dp = &D;
      }
      return std::norm(bwd[l + 1].dot(apply_layer(p, *Sp, *Dp, fwd[l])));
    };
    auto grad_range = [&](int lo, int hi) {
      for (int i = lo; i < hi; ++i) {
        const double h = cfg.fd_step;
        const double fp = fid_with(i, x[i] + h), fm = fid_with(i, x[i] - h);
        std::vector<double> xa = x, xb = x;
        xa[i] += h;
        xb[i] -= h;
        const double pp = penalty(xa, cfg), pm = penalty(xb, cfg);
        grad[i] = (-(fp - fm) + (pp - pm)) / (2 * h);
      }
    };
    const int nt = std::max(1, std::min(cfg.threads, np));
    if (nt == 1) {
      grad_range(0, np);
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < nt; ++t) pool.emplace_back(grad_range, np * t / nt, np * (t + 1) / nt);
      for (auto& th : pool) th.join();
    }
    const double b1t = 1 - std::pow(cfg.beta1, it + 1), b2t = 1 - std::pow(cfg.beta2, it + 1);
    for (int i = 0; i < np; ++i) {
      m[i] = cfg.beta1 * m[i] + (1 - cfg.beta1) * grad[i];
      v2[i] = cfg.beta2 * v2[i] + (1 - cfg.beta2) * grad[i] * grad[i];
      x[i] -= cfg.lr * (m[i] / b1t) / (std::sqrt(v2[i] / b2t) + cfg.eps);
    }
  }

  res.best_fidelity = best;
  for (int l = 0; l < n_layers; ++l) res.layers.push_back(canonical(unpack(&best_x[l * kPer])));
  const std::size_t n = res.best_so_far.size();
  const std::size_t tail = std::max<std::size_t>(1, n / 5);
  if (n > tail) res.stalled = res.best_so_far.back() - res.best_so_far[n - 1 - tail] < 1e-6;
  return res;
}

json layers_to_json(const std::vector<LayerParams>& layers) {
  json j = json::array();
  for (const LayerParams& p : layers)
    j.push_back({{"phi1", p.phi1}, {"r", p.r}, {"theta", p.theta}, {"phi2", p.phi2},
                 {"alpha_re", p.alpha.real()}, {"alpha_im", p.alpha.imag()}, {"kappa", p.kappa}});
  return j;
}

std::vector<LayerParams> layers_from_json(const json& j) {
  std::vector<LayerParams> out;
  try {
    for (const auto& e : j) {
      LayerParams p;
      p.phi1 = e.at("phi1").get<double>();
      p.r = e.at("r").get<double>();
      p.theta = e.at("theta").get<double>();
      p.phi2 = e.at("phi2").get<double>();
      p.alpha = cplx(e.at("alpha_re").get<double>(), e.at("alpha_im").get<double>());
      p.kappa = e.at("kappa").get<double>();
      out.push_back(p);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return out;
}

}  // namespace cvinv
