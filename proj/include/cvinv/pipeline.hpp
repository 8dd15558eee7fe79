#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cvinv/fock.hpp"
#include "cvinv/kernel.hpp"

namespace cvinv {

struct SpectrumEntry {
  double eigenvalue;
  double weight;  // |<v|f>|^2
  double kernel;  // F(eigenvalue)
};

struct InversionResult {
  State output;          // unit norm, phase as produced
  double raw_norm_sq = 0;
  std::vector<SpectrumEntry> spectrum_report;
};

InversionResult apply_inverse_spectral(const Mat& A, const State& f, const ApproxParams& p);

// Homodyne p = 0 state of precision delta in the Fock basis (n < d).
Vec squeezed_ancilla(double delta, int d, double hbar = kResourceHbar);
// Same coefficients before renormalizing: the captured norm at this cutoff.
double squeezed_ancilla_capture(double delta, int d, double hbar = kResourceHbar);

struct FullSimOptions {
  long long budget = 20000;
  // prepared step state (size d_s); empty = exact truncated step
  std::optional<Vec> source;
  // > 0: rerun with doubled resource cutoffs and require 1 - fidelity <= tol
  double convergence_tol = -1;
};

InversionResult run_full_simulation(const Mat& A, const State& f, const ApproxParams& p, int d_s,
                                    int d_y, const FullSimOptions& opt = {});

std::vector<std::pair<double, double>> success_probability_scan(const Mat& A, const State& f,
                                                                const std::vector<double>& deltas,
                                                                double L);

// Single mode: N x 1. Two modes: N1 x N2. Wavefunction in the hbar = 1/2 frame.
Eigen::MatrixXcd position_wavefunction(const State& s, const std::vector<RealVec>& grids,
                                       double hbar = kHbar);

}  // namespace cvinv
