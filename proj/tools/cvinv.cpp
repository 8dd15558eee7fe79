// Command-line front end. Every subcommand takes an optional JSON config file
// plus --set key=value overrides, writes data tables, summary.json and a plot
// script into --out, and exits 0 (ok), 2 (config), 3 (tolerance), 4 (budget).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cvinv/compiler.hpp"
#include "cvinv/figures.hpp"
#include "cvinv/operator.hpp"

using namespace cvinv;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2, kExitTolerance = 3, kExitBudget = 4;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Defaults, then the config file, then --set overrides. Unknown keys are
// rejected so that typos cannot silently fall back to defaults.
json load_config(json defaults, const std::string& path, const std::vector<std::string>& sets) {
  auto merge = [&](const json& src, const std::string& where) {
    for (const auto& [k, v] : src.items()) {
      if (!defaults.contains(k)) throw ConfigError("unknown key '" + k + "' in " + where);
      defaults[k] = v;
    }
  };
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config parse: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    merge(j, path);
  }
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq), raw = s.substr(eq + 1);
    json v;
    try {
      v = json::parse(raw);
    } catch (const json::exception&) {
      v = raw;  // bare strings
    }
    merge(json{{key, v}}, "--set");
  }
  return defaults;
}

template <class T>
T get(const json& c, const char* key) {
  try {
    return c.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

ApproxParams approx_from(const json& c) {
  ApproxParams p;
  p.L = get<double>(c, "L");
  p.delta = get<double>(c, "delta");
  if (!c.at("k").is_null()) p.k = get<double>(c, "k");
  return p;
}

void write_file(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << body;
}

void write_summary(const fs::path& dir, const std::string& cmd, const json& cfg, const json& results) {
  json s = {{"schema", "cvinv.summary/1"}, {"command", cmd}, {"config", cfg}, {"results", results}};
  write_file(dir / "summary.json", s.dump(2) + "\n");
}

std::string plot_script(const std::string& csv, const std::string& body, const std::string& read_opts = "") {
  return "#!/usr/bin/env python3\n"
         "# Generated plot script; reads " + csv + " from this directory.\n"
         "import os\nimport numpy as np\nimport matplotlib\nmatplotlib.use('Agg')\nimport matplotlib.pyplot as plt\n"
         "here = os.path.dirname(os.path.abspath(__file__))\n"
         "with open(os.path.join(here, '" + csv + "')) as fh:\n"
         "    rows = [line for line in fh if not line.startswith('#')]\n"
         "d = np.genfromtxt(rows, delimiter=',', names=True" + read_opts + ")\n" +
         body;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

// ---- subcommands ----------------------------------------------------------

int cmd_kernel_curves(const json& c, const fs::path& out) {
  KernelCurvesConfig k;
  k.approx = approx_from(c);
  k.a_min = get<double>(c, "a_min");
  k.a_max = get<double>(c, "a_max");
  k.samples = get<int>(c, "samples");
  k.oracle = get<bool>(c, "oracle");
  const KernelCurves r = kernel_curves(k);
  write_file(out / "kernel_curves.csv", kernel_curves_csv(r, k));
  write_file(out / "plot.py",
             plot_script("kernel_curves.csv",
                         "fig, ax = plt.subplots()\n"
                         "m = np.abs(d['a']) > 0.05\n"
                         "ax.plot(d['a'][m], d['inv_a'][m], 'k--', label='1/a')\n"
                         "for col in ['F', 'oracle', 'finite_step', 'erf_smoothed']:\n"
                         "    ax.plot(d['a'], d[col], label=col)\n"
                         "ax.set_ylim(-5, 5); ax.set_xlabel('a'); ax.legend()\n"
                         "fig.savefig(os.path.join(here, 'kernel_curves.png'), dpi=150)\n"));
  const double tol = get<double>(c, "tolerance");
  const bool ok = r.max_rel_err_2_5 <= tol && (!k.oracle || r.max_oracle_rel <= 1e-3);
  write_summary(out, "kernel-curves", c,
                {{"max_rel_err_2_5", r.max_rel_err_2_5},
                 {"max_oracle_rel", r.max_oracle_rel},
                 {"antisymmetric", r.antisymmetric},
                 {"pass", ok}});
  std::cout << "max |F - 1/a| / |1/a| on [2,5] = " << num(r.max_rel_err_2_5) << " (tolerance " << tol << ")\n";
  if (k.oracle) std::cout << "max oracle relative gap (|a| >= 0.5) = " << num(r.max_oracle_rel) << "\n";
  return ok ? 0 : kExitTolerance;
}

int cmd_integrate(const json& c, const fs::path& out) {
  IntegrateConfig k;
  k.approx = approx_from(c);
  k.omega = get<double>(c, "omega");
  k.sigma = get<double>(c, "sigma");
  k.cutoff = get<int>(c, "cutoff");
  k.pad = get<int>(c, "pad");
  k.window = get<double>(c, "window");
  k.threshold = get<double>(c, "threshold");
  if (get<std::string>(c, "input") == "gaussian") {
    const double s = k.sigma;
    k.input = [s](double x) { return std::exp(-x * x / (2 * s * s)); };
  } else if (get<std::string>(c, "input") != "sin-gauss") {
    throw ConfigError("input must be sin-gauss or gaussian");
  }
  const IntegrateResult r = run_integrate(k);
  write_file(out / "integrate.csv", integrate_csv(r, k));
  write_file(out / "plot.py", plot_script("integrate.csv",
                                          "fig, ax = plt.subplots(2, 1, sharex=True)\n"
                                          "ax[0].plot(d['x'], d['input']); ax[0].set_ylabel('f(x)')\n"
                                          "o = d['oracle'] / np.max(np.abs(d['oracle']))\n"
                                          "w = d['output_re'] / np.max(np.abs(d['output_re']))\n"
                                          "ax[1].plot(d['x'], o, 'k--', label='antiderivative')\n"
                                          "ax[1].plot(d['x'], w, label='output (re)')\n"
                                          "ax[1].set_xlabel('x'); ax[1].legend()\n"
                                          "fig.savefig(os.path.join(here, 'integrate.png'), dpi=150)\n"));
  const bool ok = r.correlation >= k.threshold;
  write_summary(out, "integrate", c,
                {{"correlation", r.correlation},
                 {"raw_norm_sq", r.raw_norm_sq},
                 {"input_capture", r.input_capture},
                 {"pass", ok}});
  std::cout << "correlation with antiderivative = " << num(r.correlation) << " (threshold " << k.threshold << ")\n";
  return ok ? 0 : kExitTolerance;
}

int cmd_poisson(const json& c, const fs::path& out) {
  PoissonConfig k;
  k.approx = approx_from(c);
  k.cutoff = get<int>(c, "cutoff");
  if (k.cutoff < 20) throw ConfigError("poisson needs cutoff >= 20");
  k.pad = get<int>(c, "pad");
  k.grid = get<int>(c, "grid");
  k.half_width = get<double>(c, "half_width");
  k.window = get<double>(c, "window");
  k.tolerance = get<double>(c, "tolerance");
  const PoissonResult r = run_poisson(k);
  write_file(out / "poisson.csv", poisson_csv(r, k));
  write_file(out / "plot.py",
             plot_script("poisson.csv",
                         "n = int(round(np.sqrt(len(d))))\n"
                         "X = d['x'].reshape(n, n); Y = d['y'].reshape(n, n)\n"
                         "fig, ax = plt.subplots(1, 2, figsize=(10, 4.5))\n"
                         "ax[0].contourf(X, Y, d['rho'].reshape(n, n), 30); ax[0].set_title('rho')\n"
                         "ax[1].contourf(X, Y, d['phi'].reshape(n, n), 30)\n"
                         "s = 4\n"
                         "ax[1].quiver(X[::s, ::s], Y[::s, ::s], d['Ex'].reshape(n, n)[::s, ::s], "
                         "d['Ey'].reshape(n, n)[::s, ::s])\n"
                         "ax[1].set_title('phi, E')\n"
                         "fig.savefig(os.path.join(here, 'poisson.png'), dpi=150)\n"));
  const bool ok = r.l2_diff <= k.tolerance && r.origin_field <= 1e-6 && r.quadrants_ok;
  write_summary(out, "poisson", c,
                {{"l2_diff", r.l2_diff},
                 {"origin_field_rel", r.origin_field},
                 {"quadrants_ok", r.quadrants_ok},
                 {"raw_norm_sq", r.raw_norm_sq},
                 {"pass", ok}});
  std::cout << "L2 difference vs oracle = " << num(r.l2_diff) << " (tolerance " << k.tolerance << ")\n"
            << "|E(0,0)| / max|E| = " << num(r.origin_field) << "\n"
            << "quadrant signs match: " << (r.quadrants_ok ? "yes" : "no") << "\n";
  return ok ? 0 : kExitTolerance;
}

int cmd_compile(const json& c, const fs::path& out) {
  OperatorSpec spec;
  try {
    spec = spec_from_json(c.at("operator"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("operator: ") + e.what());
  }
  const auto terms = trotter_terms(spec);
  const double t = get<double>(c, "t");
  const int K = get<int>(c, "K");
  const int n_modes = spec.n_modes + 2;
  BaselineModel bm;
  bm.exponent = get<double>(c, "baseline_exponent");
  const double precision = get<double>(c, "precision");
  json counts = json::object();
  for (Form f : {Form::Universal, Form::AllX}) {
    const std::string name = f == Form::Universal ? "universal" : "allx";
    const GateProgram p = trotterize(terms, t, K, n_modes, f);
    const auto problems = lint(p);
    if (!problems.empty()) throw std::runtime_error("lint: " + problems.front());
    write_file(out / ("program_" + name + ".txt"), export_program(p));
    const CostReport r = cost_report(p);
    counts[name] = {{"total", r.total}, {"by_kind", r.by_kind}};
    std::cout << name << " gates: " << r.total << "\n";
  }
  const double base = commutator_baseline(precision, bm);
  const double ratio = base / counts["universal"]["total"].get<double>();
  write_summary(out, "compile", c,
                {{"counts", counts},
                 {"commutator_baseline", base},
                 {"ratio_baseline_over_universal", ratio},
                 {"n_modes", n_modes},
                 {"resource_modes", {spec.n_modes, spec.n_modes + 1}}});
  std::cout << "commutator baseline at precision " << precision << ": " << num(base) << " gates (ratio "
            << num(ratio) << ")\n";
  return 0;
}

int cmd_verify(const json& c, const fs::path& out) {
  const auto rows = verify_suite(get<std::vector<int>>(c, "cutoffs"));
  write_file(out / "verify.csv", verify_suite_csv(rows));
  bool ok = true;
  json res = json::array();
  for (const VerifyRow& r : rows) {
    ok = ok && r.pass;
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " [" << r.method << "] ";
    if (r.errors.empty()) std::cout << r.detail;
    for (std::size_t i = 0; i < r.errors.size(); ++i) std::cout << " d=" << r.cutoffs[i] << ":" << num(r.errors[i]);
    std::cout << "\n";
    res.push_back({{"name", r.name}, {"method", r.method}, {"pass", r.pass}, {"errors", r.errors}});
  }
  write_file(out / "plot.py",
             plot_script("verify.csv",
                         "m = d['method'] == 'numeric'\n"
                         "fig, ax = plt.subplots()\n"
                         "for name in sorted(set(d['name'][m])):\n"
                         "    s = d['name'] == name\n"
                         "    ax.semilogy(d['cutoff'][s], d['error'][s], 'o-', label=str(name))\n"
                         "ax.set_xlabel('cutoff'); ax.set_ylabel('max state error'); ax.legend()\n"
                         "fig.savefig(os.path.join(here, 'verify.png'), dpi=150)\n",
                         ", dtype=None, encoding='utf-8'"));
  write_summary(out, "verify-decomp", c, {{"rows", res}, {"pass", ok}});
  return ok ? 0 : kExitTolerance;
}

int cmd_prepare(const json& c, const fs::path& out) {
  PrepareConfig k;
  k.target = get<std::string>(c, "target");
  k.layers = get<int>(c, "layers");
  k.d = get<int>(c, "d");
  k.L = get<double>(c, "L");
  if (c.at("seed").is_null()) throw ConfigError("prepare needs an explicit seed");
  k.opt.seed = get<std::uint64_t>(c, "seed");
  k.opt.iterations = get<int>(c, "iterations");
  k.opt.lr = get<double>(c, "lr");
  k.opt.init_scale = get<double>(c, "init_scale");
  k.opt.penalty_weight = get<double>(c, "penalty_weight");
  k.opt.threads = get<int>(c, "threads");
  double threshold = get<double>(c, "threshold");
  if (threshold < 0) threshold = k.target == "step" ? 0.95 : 0.999;
  const PrepareResult r = run_prepare(k);
  write_file(out / "history.csv", prepare_history_csv(r, k));
  write_file(out / "layers.json", layers_to_json(r.opt.layers).dump(2) + "\n");
  write_file(out / "plot.py", plot_script("history.csv",
                                          "fig, ax = plt.subplots()\n"
                                          "ax.semilogy(d['iteration'], 1 - d['best_so_far'])\n"
                                          "ax.set_xlabel('iteration'); ax.set_ylabel('1 - best fidelity')\n"
                                          "fig.savefig(os.path.join(here, 'history.png'), dpi=150)\n"));
  const bool ok = r.opt.best_fidelity >= threshold;
  write_summary(out, "prepare", c,
                {{"best_fidelity", r.opt.best_fidelity}, {"stalled", r.opt.stalled}, {"threshold", threshold},
                 {"pass", ok}});
  std::cout << "best fidelity " << num(r.opt.best_fidelity) << " (threshold " << threshold << ")"
            << (r.opt.stalled ? ", stalled" : "") << "\n";
  return ok ? 0 : kExitTolerance;
}

json approx_defaults() { return {{"L", 7.0}, {"delta", 0.1}, {"k", nullptr}}; }

json with_approx(json j) {
  const json a = approx_defaults();
  for (const auto& [k, v] : a.items()) j[k] = v;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-variable linear-system inversion: figures, gate compiler, state preparation"};
  app.require_subcommand(1);

  struct Sub {
    std::string name, help;
    json defaults;
    int (*run)(const json&, const fs::path&);
    std::string config{}, out = ".";
    std::vector<std::string> sets{};
    CLI::App* app = nullptr;
  };
  const json x2xx_toy = {{"n_modes", 1}, {"terms", {{{"coeff", 1.0}, {"factors", {{{"mode", 0}, {"quad", "X"}, {"power", 2}}}}}}}};
  std::vector<Sub> subs = {
      {"kernel-curves", "F(a), its oracle and the simplified kernels over an a-range",
       with_approx({{"a_min", -5.0}, {"a_max", 5.0}, {"samples", 201}, {"oracle", true}, {"tolerance", 0.01}}),
       cmd_kernel_curves},
      {"integrate", "1D integration with A = P",
       with_approx({{"omega", 5.0}, {"sigma", 1.8}, {"cutoff", 60}, {"pad", 0}, {"window", 6.0},
                    {"threshold", 0.99}, {"input", "sin-gauss"}}),
       cmd_integrate},
      {"poisson", "2D Poisson problem with A = -4(P1^2 + P2^2) and input |1>|1>",
       with_approx({{"cutoff", 24}, {"pad", 0}, {"grid", 256}, {"half_width", 8.0}, {"window", 4.0},
                    {"tolerance", 0.05}}),
       cmd_poisson},
      {"compile", "Trotterize exp(-i A X_s X_y t) into the gate set",
       {{"operator", x2xx_toy}, {"t", 1.0}, {"K", 1}, {"precision", 1e-3}, {"baseline_exponent", 2.0}},
       cmd_compile},
      {"verify-decomp", "Verify every decomposition rule", {{"cutoffs", {24, 32, 40}}}, cmd_verify},
      {"prepare", "Optimize a layered circuit for a resource state",
       {{"target", "single-photon"}, {"layers", 8}, {"d", 14}, {"L", 7.0}, {"seed", 1}, {"iterations", 2000},
        {"lr", 0.02}, {"init_scale", 0.1}, {"penalty_weight", 1.0}, {"threads", 1}, {"threshold", -1.0}},
       cmd_prepare},
  };
  std::string target_flag;
  int layers_flag = -1;
  for (Sub& s : subs) {
    s.app = app.add_subcommand(s.name, s.help);
    s.app->add_option("-c,--config", s.config, "JSON config file");
    s.app->add_option("-s,--set", s.sets, "override, key=value (value parsed as JSON when possible)");
    s.app->add_option("-o,--out", s.out, "output directory");
    if (s.name == "prepare") {
      s.app->add_option("--target", target_flag, "single-photon or step");
      s.app->add_option("--layers", layers_flag, "number of layers");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  for (Sub& s : subs) {
    if (!s.app->parsed()) continue;
    try {
      if (s.name == "prepare") {
        if (!target_flag.empty()) s.sets.push_back("target=\"" + target_flag + "\"");
        if (layers_flag > 0) s.sets.push_back("layers=" + std::to_string(layers_flag));
      }
      const json cfg = load_config(s.defaults, s.config, s.sets);
      fs::create_directories(s.out);
      return s.run(cfg, s.out);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      switch (e.code()) {
        case ErrorCode::DimensionBudgetExceeded: return kExitBudget;
        case ErrorCode::NonConvergedTruncation:
        case ErrorCode::TruncationDominated: return kExitTolerance;
        default: return kExitConfig;
      }
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}
