#pragma once

// Exact decompositions of e^{i t X_j X_k X_l} and e^{i t X_j^2 X_k X_l} into
// the gate set {F, e^{itX}, e^{itX^2}, e^{itX^3}, e^{itX1X2}}, Trotterization
// of A X_s X_y, and verification (exact shift/phase algebra or truncated
// numerics).
//
// Conventions: hbar = 1/2, F = e^{i pi/2 (n + 1/2)}, F X F^dag = P,
// F P F^dag = -X, F^4 = -1, e^{i theta P} translates x by theta/2. Products are written
// as operators (rightmost acts first); gate lists are in time order.

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "cvinv/fock.hpp"
#include "cvinv/operator.hpp"
#include "cvinv/poly.hpp"

namespace cvinv {

// e^{i coeff prod_m Q_m^{n_m}}. `helper` names the spare mode that quartic
// and sextic single-mode phases need for their decomposition.
template <class C>
struct Exp {
  C coeff;
  std::vector<Factor> mono;
  int helper = -1;
};

// ---- rule products, one template for numeric and symbolic coefficients ---

// e^{i 2 d X_j X_k X_l}: 17 factors
template <class C> std::vector<Exp<C>> product_xxx(int j, int k, int l, const C& d);
// e^{i 6 d X_j^2 X_k X_l}: 17 factors, the X_j^6 factor uses k as helper
template <class C> std::vector<Exp<C>> product_x2xx(int j, int k, int l, const C& d);
// e^{i 3 a^2 kap P_k X_j^2}: 9 factors (cubic coefficient -9/4 a^3 kap)
template <class C> std::vector<Exp<C>> product_px2(int k, int j, const C& a, const C& kap);
// e^{i d X_j^6} with helper k: 5 factors
template <class C> std::vector<Exp<C>> product_x6(int j, int k, const C& d);
// e^{2 i a^2 P_k X_j^3}: 5 factors (quartic coefficient -a^3)
template <class C> std::vector<Exp<C>> product_px3(int k, int j, const C& a);
// e^{i a X_j^2 X_k^2}: 7 factors
template <class C> std::vector<Exp<C>> product_x2x2(int j, int k, const C& a);
// e^{i a X_k^4} with helper j: 5 factors
template <class C> std::vector<Exp<C>> product_x4(int k, int j, const C& a);

// ---- gates and programs ----------------------------------------------------

enum class GateKind { Fourier, PhaseX1, PhaseX2, PhaseX3, CZ };
const char* gate_kind_name(GateKind k);

struct Gate {
  GateKind kind = GateKind::Fourier;
  int modes[2] = {-1, -1};
  double param = 0;
  // bit i set: mode i is addressed in the Fourier-conjugated frame
  // (X -> P). Only the universal form uses this; the all-X form has none.
  std::uint8_t pframe = 0;

  int arity() const { return kind == GateKind::CZ ? 2 : 1; }
  bool operator==(const Gate& o) const {
    return kind == o.kind && modes[0] == o.modes[0] && modes[1] == o.modes[1] && param == o.param &&
           pframe == o.pframe;
  }
};

// Rewrite tree. Rule nodes (xxx, x2xx, px2, px3, x6, x2x2, x4, cz) are fully
// determined by (rule, modes, params); wrap/seq nodes hold children; leaf
// nodes hold one abstract factor. Children are in time order.
struct Node {
  std::string rule;
  std::vector<int> modes;
  std::vector<double> params;
  std::vector<Node> children;
  Exp<double> leaf{0.0, {}, -1};
};

enum class Form { Universal, AllX };

struct GateProgram {
  int n_modes = 0;
  Form form = Form::Universal;
  std::vector<Gate> gates;
  Node provenance;
  // target = global_phase * (g_N ... g_1)
  cplx global_phase = 1.0;
};

// Expand a rule node into its subtree.
Node expand(const std::string& rule, const std::vector<int>& modes, const std::vector<double>& params);
GateProgram flatten(const Node& root, int n_modes, Form form);

// e^{i 2 t X_j X_k X_l}
GateProgram decompose_xxx(int j, int k, int l, double t, Form form = Form::Universal);
// e^{i 6 t X_j^2 X_k X_l}
GateProgram decompose_x2xx(int j, int k, int l, double t, Form form = Form::Universal);
// name in {px2, x6, px3, x2x2, x4}; modes and params follow the product_* signatures
GateProgram decompose_sub(const std::string& name, const std::vector<int>& modes, const std::vector<double>& params,
                          Form form = Form::Universal);

// ---- verification ----------------------------------------------------------

struct SymbolicResult {
  bool pass = false;
  std::vector<Poly> sigma;  // x_i -> sigma[i]
  Poly phase;
  std::string detail;
};

// Variables 0..n_modes-1 are positions; any later variables are formal
// parameters. Throws NotShiftPhaseClosed if a factor is neither a pure
// X-phase nor a single P_j times an X-polynomial free of x_j.
SymbolicResult verify_symbolic(const std::vector<Exp<Poly>>& product, int n_modes, const Poly& target_phase);

struct SymbolicRule {
  std::string name;
  std::vector<Exp<Poly>> product;
  Poly target;  // phase polynomial of the left-hand side
  int n_modes = 3;
  std::vector<std::string> names;  // variable labels for printing
};
// The rules in symbolic form on modes (0, 1, 2) with formal parameters after
// the position variables. Includes px2 and px3, which are not closed.
std::vector<SymbolicRule> symbolic_rules();

struct NumericCheck {
  std::vector<int> cutoffs;
  std::vector<double> errors;
  bool decreasing = false;
};

// max over product coherent states of |U_prog psi - e^{i target} psi| at each
// cutoff. Throws TruncationDominated if errors do not strictly decrease and
// `require_decrease` is set.
NumericCheck verify_numeric(const GateProgram& prog, const Exp<double>& target, const std::vector<int>& cutoffs,
                            const std::vector<std::vector<cplx>>& coherent_states, bool require_decrease = true);

// e^{-|a|^2/2} a^n / sqrt(n!), n < d (not renormalized)
Vec coherent_amplitudes(cplx alpha, int d);

// Same check for an abstract product (operator order), each factor applied as
// an exact exponential of truncated quadratures. This isolates the identity
// from the truncation error of its recursive gate expansion.
NumericCheck verify_numeric_product(const std::vector<Exp<double>>& product, int n_modes, const Exp<double>& target,
                                   const std::vector<int>& cutoffs,
                                   const std::vector<std::vector<cplx>>& coherent_states,
                                   bool require_decrease = true);
// Abstract product of a named rule (as in decompose_sub, plus xxx, x2xx).
std::vector<Exp<double>> rule_factors(const std::string& rule, const std::vector<int>& modes,
                                      const std::vector<double>& params);

// Apply the program to a state in a truncated space (all modes at `cutoffs`).
void apply_program(const GateProgram& prog, State& s);
// e^{i c prod Q^n} applied through the product eigenbasis of truncated quadratures.
void apply_exp(const Exp<double>& e, State& s);

// ---- Trotterization and costs ----------------------------------------------

// First-order product for exp(-i t sum_terms coeff * term) with K slices.
GateProgram trotterize(const std::vector<TermDescriptor>& terms, double t, int K, int n_modes,
                       Form form = Form::Universal);

struct CostReport {
  std::map<std::string, long long> by_kind;
  long long total = 0;
};
CostReport cost_report(const GateProgram& prog);

struct BaselineModel {
  double gates_per_rep = 28;
  double reps_at_ref = 1e6;
  double ref_precision = 1e-3;
  double exponent = 2;  // repetitions ~ precision^-exponent
};
double commutator_baseline(double precision, const BaselineModel& m = {});

// ---- serialization ---------------------------------------------------------

nlohmann::json provenance_to_json(const Node& n);  // rule nodes without children
Node provenance_from_json(const nlohmann::json& j);   // re-expands rule nodes
std::uint64_t provenance_hash(const Node& n);
bool provenance_roundtrip(const GateProgram& prog);

std::string export_program(const GateProgram& prog);
GateProgram import_program(const std::string& text);

// Empty when clean; otherwise one message per problem.
std::vector<std::string> lint(const GateProgram& prog);

}  // namespace cvinv
