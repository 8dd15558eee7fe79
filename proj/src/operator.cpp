#include "cvinv/operator.hpp"

#include <set>

namespace cvinv {

using nlohmann::json;

OperatorSpec quadratic_spec(const QuadraticForm& q) {
  const std::size_t n = q.a.size();
  if (n == 0 || q.b.size() != n || q.alpha.size() != n || q.beta.size() != n)
    throw Error(ErrorCode::InvalidArgument, "quadratic form arrays must share a length >= 1");
  OperatorSpec s;
  s.n_modes = int(n);
  if (q.lambda != 0) s.terms.push_back({q.lambda, {}});
  for (int j = 0; j < int(n); ++j) {
    if (q.a[j] != 0) s.terms.push_back({q.a[j], {{j, Quad::X, 1}}});
    if (q.b[j] != 0) s.terms.push_back({q.b[j], {{j, Quad::P, 1}}});
    if (q.alpha[j] != 0) s.terms.push_back({q.alpha[j], {{j, Quad::X, 2}}});
    if (q.beta[j] != 0) s.terms.push_back({q.beta[j], {{j, Quad::P, 2}}});
  }
  return s;
}

void validate(const OperatorSpec& spec) {
  if (spec.n_modes < 1) throw Error(ErrorCode::InvalidArgument, "operator needs at least one mode");
  for (const Term& t : spec.terms) {
    std::set<int> seen;
    for (const Factor& f : t.factors) {
      if (f.mode < 0 || f.mode >= spec.n_modes)
        throw Error(ErrorCode::ModeCountMismatch, "factor mode outside 0..n_modes-1");
      if (f.power < 1) throw Error(ErrorCode::InvalidArgument, "factor power must be >= 1");
      if (!seen.insert(f.mode).second)
        throw Error(ErrorCode::MixedQuadratureTerm,
                    "mode " + std::to_string(f.mode) + " appears twice in one term");
    }
  }
}

Mat build_matrix(const OperatorSpec& spec, const std::vector<int>& cutoffs) {
  if (int(cutoffs.size()) != spec.n_modes)
    throw Error(ErrorCode::ModeCountMismatch, "cutoff list length differs from n_modes");
  validate(spec);
  const long long n = total_dim(cutoffs);
  std::vector<Quadratures<double>> q;
  for (int c : cutoffs) q.push_back(quadrature_ops<double>(c, kHbar));

  Mat A = Mat::Zero(n, n);
  for (const Term& t : spec.terms) {
    Mat prod = Mat::Identity(1, 1);
    for (int m = 0; m < spec.n_modes; ++m) {
      Mat op = Mat::Identity(cutoffs[m], cutoffs[m]);
      for (const Factor& f : t.factors) {
        if (f.mode != m) continue;
        const Mat& base = f.q == Quad::X ? q[m].X : q[m].P;
        for (int k = 0; k < f.power; ++k) op = (op * base).eval();
      }
      prod = kron<double>(prod, op);
    }
    A += t.coeff * prod;
  }
  return A;
}

Mat build_global_hamiltonian(const OperatorSpec& spec, const std::vector<int>& cutoffs, int d_s,
                             int d_y, long long budget) {
  const long long total = total_dim(cutoffs) * d_s * d_y;
  if (total > budget)
    throw Error(ErrorCode::DimensionBudgetExceeded,
                "global dimension " + std::to_string(total) + " exceeds " + std::to_string(budget));
  const Mat A = build_matrix(spec, cutoffs);
  const Mat Xs = quadrature_ops<double>(d_s, kResourceHbar).X;
  const Mat Xy = quadrature_ops<double>(d_y, kResourceHbar).X;
  return kron<double>(A, kron<double>(Xs, Xy));
}

const char* term_kind_name(TermKind k) {
  switch (k) {
    case TermKind::XX: return "XX";
    case TermKind::XXX: return "XXX";
    case TermKind::X2XX: return "X2XX";
  }
  return "?";
}

std::vector<TermDescriptor> trotter_terms(const OperatorSpec& spec) {
  validate(spec);
  // X_s X_y at hbar = 1 equals 2 X_s X_y at hbar = 1/2
  const double scale = kResourceHbar / kHbar;
  std::vector<TermDescriptor> out;
  const int s = spec.n_modes, y = spec.n_modes + 1;
  for (const Term& t : spec.terms) {
    TermDescriptor d{TermKind::XX, t.coeff * scale, -1, false, s, y};
    if (t.factors.size() > 1)
      throw Error(ErrorCode::UnsupportedTermDegree, "multi-mode terms are outside the quadratic class");
    if (t.factors.size() == 1) {
      const Factor& f = t.factors[0];
      if (f.power > 2) throw Error(ErrorCode::UnsupportedTermDegree, "power above 2");
      d.kind = f.power == 1 ? TermKind::XXX : TermKind::X2XX;
      d.data_mode = f.mode;
      d.fourier = f.q == Quad::P;
    }
    out.push_back(d);
  }
  return out;
}

OperatorSpec spec_from_json(const json& j) {
  try {
    if (j.contains("terms")) {
      OperatorSpec s;
      s.n_modes = j.at("n_modes").get<int>();
      for (const auto& jt : j.at("terms")) {
        Term t;
        t.coeff = jt.at("coeff").get<double>();
        for (const auto& jf : jt.value("factors", json::array())) {
          Factor f;
          f.mode = jf.at("mode").get<int>();
          const std::string q = jf.at("quad").get<std::string>();
          if (q == "X") f.q = Quad::X;
          else if (q == "P") f.q = Quad::P;
          else throw Error(ErrorCode::ParseError, "quad must be \"X\" or \"P\"");
          f.power = jf.value("power", 1);
          t.factors.push_back(f);
        }
        s.terms.push_back(std::move(t));
      }
      validate(s);
      return s;
    }
    QuadraticForm q;
    q.lambda = j.value("lambda", 0.0);
    std::size_t n = 0;
    for (const char* key : {"a", "b", "alpha", "beta"})
      if (j.contains(key)) n = std::max(n, j.at(key).size());
    if (j.contains("n_modes")) n = std::max<std::size_t>(n, j.at("n_modes").get<int>());
    if (n == 0) n = 1;
    auto arr = [&](const char* key) {
      std::vector<double> v = j.value(key, std::vector<double>{});
      if (v.empty()) v.assign(n, 0.0);
      if (v.size() != n) throw Error(ErrorCode::ParseError, std::string("array length mismatch: ") + key);
      return v;
    };
    q.a = arr("a");
    q.b = arr("b");
    q.alpha = arr("alpha");
    q.beta = arr("beta");
    return quadratic_spec(q);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

json spec_to_json(const OperatorSpec& spec) {
  json j;
  j["n_modes"] = spec.n_modes;
  j["terms"] = json::array();
  for (const Term& t : spec.terms) {
    json jt;
    jt["coeff"] = t.coeff;
    jt["factors"] = json::array();
    for (const Factor& f : t.factors)
      jt["factors"].push_back({{"mode", f.mode}, {"quad", f.q == Quad::X ? "X" : "P"}, {"power", f.power}});
    j["terms"].push_back(jt);
  }
  return j;
}

}  // namespace cvinv
