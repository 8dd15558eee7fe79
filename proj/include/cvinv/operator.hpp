#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "cvinv/fock.hpp"

namespace cvinv {

enum class Quad { X, P };

struct Factor {
  int mode = 0;
  Quad q = Quad::X;
  int power = 1;
  bool operator==(const Factor&) const = default;
};

struct Term {
  double coeff = 0;
  std::vector<Factor> factors;  // empty: constant term
};

struct OperatorSpec {
  int n_modes = 1;
  std::vector<Term> terms;
};

// lambda 1 + sum_j a_j X_j + b_j P_j + alpha_j X_j^2 + beta_j P_j^2
struct QuadraticForm {
  double lambda = 0;
  std::vector<double> a, b, alpha, beta;
};

OperatorSpec quadratic_spec(const QuadraticForm& q);

// Throws MixedQuadratureTerm / InvalidArgument on malformed specs.
void validate(const OperatorSpec& spec);

Mat build_matrix(const OperatorSpec& spec, const std::vector<int>& cutoffs);

// Dense A (x) X_s (x) X_y, resource quadratures at kResourceHbar.
inline constexpr long long kDenseBudget = 4096;
Mat build_global_hamiltonian(const OperatorSpec& spec, const std::vector<int>& cutoffs, int d_s,
                             int d_y, long long budget = kDenseBudget);

enum class TermKind { XX, XXX, X2XX };

// One term of A X_s X_y, expressed in gate-set units (hbar = 1/2 on every
// mode). Resource quadratures carry hbar = 1, so coeff absorbs a factor 2.
struct TermDescriptor {
  TermKind kind;
  double coeff;
  int data_mode = -1;  // -1 for the constant term
  bool fourier = false;  // data factor is P: compile as X then conjugate
  int s_mode = 0, y_mode = 0;
};

std::vector<TermDescriptor> trotter_terms(const OperatorSpec& spec);

const char* term_kind_name(TermKind k);

// {n_modes, terms:[{coeff, factors:[{mode, quad, power}]}]} or the
// quadratic shorthand {lambda, a, b, alpha, beta}.
OperatorSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const OperatorSpec& spec);

}  // namespace cvinv
