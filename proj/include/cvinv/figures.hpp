#pragma once

// Example problems shared by the CLI and the acceptance runner. Each run
// returns plain data plus a CSV rendering so reruns can be compared byte for
// byte.

#include <functional>
#include <string>
#include <vector>

#include "cvinv/compiler.hpp"
#include "cvinv/kernel.hpp"
#include "cvinv/pipeline.hpp"
#include "cvinv/stateprep.hpp"

namespace cvinv {

// c_n = int f(x) psi_n(x) dx on a uniform grid over [-R, R].
Vec project_function(const std::function<double(double)>& f, int d, double R, int points,
                     double hbar = kHbar);

// ---- kernel curves -------------------------------------------------------

struct KernelCurvesConfig {
  ApproxParams approx;  // k defaults to 10 when unset
  double a_min = -5, a_max = 5;
  int samples = 201;
  bool oracle = true;  // include the Riemann-sum column
};

struct KernelRow {
  double a, inv, f, oracle, finite_step, erf;
};

struct KernelCurves {
  std::vector<KernelRow> rows;
  double max_rel_err_2_5 = 0;  // closed form vs 1/a on a dense scan of [2, 5]
  double max_oracle_rel = 0;   // over rows with |a| >= 0.5
  bool antisymmetric = true;
};

KernelCurves kernel_curves(const KernelCurvesConfig& cfg);
std::string kernel_curves_csv(const KernelCurves& k, const KernelCurvesConfig& cfg);

// ---- 1D integration, A = P -------------------------------------------------

struct IntegrateConfig {
  double omega = 5, sigma = 1.8;
  int cutoff = 60;
  int pad = 0;  // extra working cutoff, output truncated back to cutoff
  ApproxParams approx;
  double half_width = 12;  // projection grid
  int points = 24001;
  double window = 6;  // comparison window |x| <= window
  int stride = 10;    // CSV sampling stride inside the window
  double threshold = 0.99;
  // alternative input (x -> f); omega/sigma ignored when set
  std::function<double(double)> input;
};

struct IntegrateResult {
  RealVec x, input, oracle;   // window samples, oracle mean-removed
  Vec output;                 // wavefunction on x, phase aligned to the oracle
  double correlation = 0;     // Pearson, real part after alignment
  double raw_norm_sq = 0;
  double input_capture = 0;   // sum |c_n|^2 / int f^2
};

IntegrateResult run_integrate(const IntegrateConfig& cfg);
std::string integrate_csv(const IntegrateResult& r, const IntegrateConfig& cfg);

// ---- 2D Poisson, A = -4 (P1^2 + P2^2), input |1>|1> ----------------------

struct PoissonConfig {
  int cutoff = 24;
  int pad = 0;
  ApproxParams approx;
  int grid = 256;          // oracle FFT grid and output sample grid
  double half_width = 8;   // grid covers [-half_width, half_width)
  double window = 4;       // L2 comparison window
  double tolerance = 0.05;
};

struct PoissonResult {
  RealVec x;
  Eigen::MatrixXd rho, phi, oracle, Ex, Ey;  // phi = -(output wavefunction), solves lap phi = -rho
  double l2_diff = 0;        // normalized, on the window
  double origin_field = 0;   // |E(0,0)| / max |E|
  bool quadrants_ok = false;
  double raw_norm_sq = 0;
};

PoissonResult run_poisson(const PoissonConfig& cfg);
std::string poisson_csv(const PoissonResult& r, const PoissonConfig& cfg, int stride = 4);

// ---- decomposition verification suite -----------------------------------

struct VerifyRow {
  std::string name;
  std::string method;  // "symbolic" or "numeric"
  bool pass = false;
  std::string detail;
  std::vector<int> cutoffs;
  std::vector<double> errors;
};

// Five closed rules checked symbolically, px2 and px3 by cutoff convergence.
std::vector<VerifyRow> verify_suite(const std::vector<int>& cutoffs = {24, 32, 40});
std::string verify_suite_csv(const std::vector<VerifyRow>& rows);

// ---- state preparation ----------------------------------------------------

struct PrepareConfig {
  std::string target = "single-photon";  // or "step"
  int layers = 8;
  int d = 14;      // single photon: register dimension; step: cutoff (n = 0..d)
  double L = 7;    // step width
  OptConfig opt;
};

struct PrepareResult {
  Vec target;
  OptResult opt;
};

PrepareResult run_prepare(const PrepareConfig& cfg);
std::string prepare_history_csv(const PrepareResult& r, const PrepareConfig& cfg);

}  // namespace cvinv
