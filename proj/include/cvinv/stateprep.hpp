#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cvinv/fock.hpp"

namespace cvinv {

struct LayerParams {
  double phi1 = 0, r = 0, theta = 0, phi2 = 0;
  cplx alpha = 0;
  double kappa = 0;
  bool operator==(const LayerParams&) const = default;
};

struct StepStateTarget {
  double L = 0;
  int d = 0;
  RealVec coeffs;      // n = 0..d, renormalized
  double capture = 0;  // sum of squared raw coefficients before renormalizing
};

// c_n = L^{-1/2} int_0^L psi_n(x) dx, n = 0..d.
StepStateTarget step_state_coeffs(double L, int d, double hbar = kResourceHbar);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, RealVec& nodes, RealVec& weights);

Mat rotation(double phi, int d);
Mat squeeze(double r, double theta, int d);
Mat displacement(cplx alpha, int d);
Mat kerr(double kappa, int d);
// K(kappa) D(alpha) R(phi2) S(r, theta) R(phi1)
Mat layer_unitary(const LayerParams& p, int d);

Vec network_state(const std::vector<LayerParams>& layers, int d);
double fidelity(const Vec& s, const Vec& t);
Vec single_photon(int d);

struct OptConfig {
  int iterations = 2000;
  double lr = 0.02;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double fd_step = 1e-4;
  double penalty_weight = 1.0;
  double penalty_threshold = 2.0;
  double init_scale = 0.1;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct OptResult {
  std::vector<LayerParams> layers;  // best seen
  double best_fidelity = 0;
  std::vector<double> fidelity;     // per iteration, before the update
  std::vector<double> best_so_far;
  bool stalled = false;
};

OptResult optimize(const Vec& target, int n_layers, const OptConfig& cfg);

// r >= 0, angles in (-pi, pi]
LayerParams canonical(const LayerParams& p);

nlohmann::json layers_to_json(const std::vector<LayerParams>& layers);
std::vector<LayerParams> layers_from_json(const nlohmann::json& j);

}  // namespace cvinv
