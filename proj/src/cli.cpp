#include "kamdnlw/cli.hpp"

#include <boost/crc.hpp>
#include <boost/version.hpp>
#include <Eigen/Core>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "kamdnlw/dynamics.hpp"
#include "kamdnlw/normal_form.hpp"
#include "kamdnlw/qp_solver.hpp"
#include "kamdnlw/spectral.hpp"
#include "kamdnlw/suites.hpp"

#ifndef KAMDNLW_VERSION
#define KAMDNLW_VERSION "0.0.0"
#endif

namespace kamdnlw::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;
const double PI = std::numbers::pi;

/// A config section: rejects unknown keys and records every value it hands out,
/// defaults included.
class Block {
 public:
  Block(const json& root, const std::string& name, std::set<std::string> allowed)
      : name_(name) {
    if (!root.contains(name)) return;
    src_ = root.at(name);
    if (!src_.is_object()) throw ConfigError(name + ": expected an object");
    for (const auto& [key, v] : src_.items())
      if (!allowed.count(key)) throw ConfigError(name + ": unknown key '" + key + "'");
  }

  template <class T>
  T get(const std::string& key, T def) {
    T value = def;
    if (src_.contains(key)) {
      try {
        value = src_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw ConfigError(name_ + "." + key + ": " + e.what());
      }
    }
    effective[key] = value;
    return value;
  }

  bool has(const std::string& key) const { return src_.contains(key); }

  json effective = json::object();

 private:
  std::string name_;
  json src_ = json::object();
};

struct Artifact {
  std::string name;
  std::string body;
  bool csv = false;
  json object;  ///< for JSON artifacts
};

struct Run {
  std::string command;
  json config;
  json effective = json::object();
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::vector<Artifact> artifacts;
  int status = kExitOk;

  void csv(const std::string& name, const std::string& body) {
    artifacts.push_back({name, body, true, {}});
  }
  void write_json(const std::string& name, json object) {
    artifacts.push_back({name, {}, false, std::move(object)});
  }
};

/// Sections a subcommand does not read are allowed so one file can drive several
/// subcommands; unknown names are rejected.
void check_top_level(const json& config) {
  static const std::set<std::string> known{"seed",         "model",      "nonlinearity", "newton",
                                           "algebra",      "birkhoff",   "homological",  "melnikov",
                                           "asymptotics",  "continuation", "simulate",   "lyapunov",
                                           "nonexistence"};
  for (const auto& [key, v] : config.items())
    if (!known.count(key)) throw ConfigError("config: unknown section '" + key + "'");
}

ModelParams read_model(Run& run) {
  const json src = run.config.value("model", json::object());
  if (!src.is_object()) throw ConfigError("model: expected an object");
  static const std::set<std::string> keys{"mass", "sites", "xi", "grid_N", "truncation"};
  for (const auto& [key, v] : src.items())
    if (!keys.count(key)) throw ConfigError("model: unknown key '" + key + "'");
  const ModelParams p = model_params_from_json(src);
  run.effective["model"] = to_json_value(p);
  return p;
}

NonlinearitySpec read_nonlinearity(Run& run) {
  const json src = run.config.value("nonlinearity", json::object());
  if (!src.is_object()) throw ConfigError("nonlinearity: expected an object");
  for (const auto& [key, v] : src.items())
    if (key != "leading" && key != "hot") throw ConfigError("nonlinearity: unknown key '" + key + "'");
  const NonlinearitySpec g = nonlinearity_from_json(src);
  run.effective["nonlinearity"] = to_json_value(g);
  return g;
}

NewtonOptions read_newton(Run& run) {
  Block b(run.config, "newton", {"L", "tol", "max_iter", "fd_step"});
  NewtonOptions o;
  o.L = b.get("L", o.L);
  o.tol = b.get("tol", o.tol);
  o.max_iter = b.get("max_iter", o.max_iter);
  o.fd_step = b.get("fd_step", o.fd_step);
  o.threads = run.threads;
  if (o.L < 1) throw ConfigError("newton.L must be >= 1");
  if (!(o.tol > 0) || !(o.fd_step > 0)) throw ConfigError("newton: tol and fd_step must be positive");
  if (o.max_iter < 1) throw ConfigError("newton.max_iter must be >= 1");
  run.effective["newton"] = b.effective;
  return o;
}

template <class F>
std::string to_text(F&& writer) {
  std::ostringstream os;
  writer(os);
  return os.str();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

// ------------------------------------------------------------------ commands

void cmd_algebra_check(Run& run, std::ostream& out) {
  check_top_level(run.config);
  Block b(run.config, "algebra",
          {"monomials", "bracket_trials", "penalization_trials", "sites", "j_max", "k_max", "d_max",
           "sym_sites", "sym_fields", "sym_points"});
  AlgebraSuiteOptions a;
  a.seed = run.seed;
  a.monomials = b.get("monomials", a.monomials);
  a.bracket_trials = b.get("bracket_trials", a.bracket_trials);
  a.penalization_trials = b.get("penalization_trials", a.penalization_trials);
  a.plus_sites = b.get("sites", a.plus_sites);
  a.trunc.j_max = b.get("j_max", a.trunc.j_max);
  a.trunc.k_max = b.get("k_max", a.trunc.k_max);
  a.trunc.d_max = b.get("d_max", a.trunc.d_max);
  SymmetrizationSuiteOptions s;
  s.seed = run.seed + 1;
  s.plus_sites = b.get("sym_sites", s.plus_sites);
  s.fields = b.get("sym_fields", s.fields);
  s.points = b.get("sym_points", s.points);
  require(a.monomials >= 0 && a.bracket_trials >= 0 && a.penalization_trials >= 0 && s.fields >= 0 &&
              s.points >= 0,
          "algebra: counts must be nonnegative");
  SiteSet(a.plus_sites);
  SiteSet(s.plus_sites);
  run.effective["algebra"] = b.effective;

  const auto ar = algebra_suite(a);
  const auto sr = symmetrization_suite(s);
  const bool pass = ar.key_mismatches == 0 && ar.adjoint_coeff_error <= 1e-12 &&
                    ar.antisymmetry_error <= 1e-10 && ar.jacobi_error <= 1e-10 &&
                    ar.penalization_violations == 0 && sr.max_error < 1e-12 && sr.all_reversible;
  run.write_json("algebra_check.json",
                 {{"algebra", to_json_value(ar)}, {"symmetrization", to_json_value(sr)}, {"pass", pass}});
  out << "algebra-check: " << (pass ? "pass" : "FAIL") << " (adjoint " << ar.adjoint_coeff_error
      << ", jacobi " << ar.jacobi_error << ", penalization violations " << ar.penalization_violations
      << ", symmetrization " << sr.max_error << ")\n";
  if (!pass) run.status = kExitNumerical;
}

void cmd_birkhoff(Run& run, std::ostream& out) {
  check_top_level(run.config);
  const auto p = read_model(run);
  const auto g = read_nonlinearity(run);
  Block b(run.config, "birkhoff", {"divisor_floor"});
  const double floor = b.get("divisor_floor", 1e-8);
  require(floor > 0, "birkhoff.divisor_floor must be positive");
  run.effective["birkhoff"] = b.effective;

  const auto nf = birkhoff_third_order(p, g, floor);
  json j = json::parse(to_json(nf));
  run.write_json("normal_form.json", j);
  std::ostringstream os;
  os << std::setprecision(17) << "j,lambda,Omega,tangential\n";
  for (int jj = 0; jj <= p.truncation.j_max; ++jj) {
    const bool tang = p.sites.contains(jj);
    const double w = tang ? nf.omega_of(jj) : nf.Omega.at(jj);
    os << jj << ',' << lambda_j(p.mass, jj) << ',' << w << ',' << (tang ? 1 : 0) << '\n';
  }
  run.csv("frequencies.csv", os.str());
  out << "birkhoff: twist condition " << nf.twist_condition << ", a " << nf.a_const << '\n';
}

void cmd_homological(Run& run, std::ostream& out) {
  check_top_level(run.config);
  const auto p = read_model(run);
  Block b(run.config, "homological", {"trials", "terms", "field", "divisor_floor"});
  const int trials = b.get("trials", 50);
  const int terms = b.get("terms", 30);
  const std::string field = b.get("field", std::string());
  const double floor = b.get("divisor_floor", 1e-8);
  require(trials >= 0 && terms >= 0, "homological: counts must be nonnegative");
  require(floor > 0, "homological.divisor_floor must be positive");
  run.effective["homological"] = b.effective;

  if (!field.empty()) {
    std::ifstream in(field);
    if (!in) throw ConfigError("homological.field: cannot read '" + field + "'");
    std::stringstream text;
    text << in.rdbuf();
    VectorField P;
    try {
      P = from_json(text.str());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("homological.field: ") + e.what());
    }
    if (!(P.sites() == p.sites)) throw ConfigError("homological.field: sites differ from model.sites");
    const auto nf = NormalForm::linear(p.sites, p.mass, P.truncation().j_max);
    const auto sol = solve_homological(nf, P, floor);
    const auto N = as_vector_field(nf, P.truncation());
    const NormContext ctx;
    const double normP = majorant_norm(P, ctx);
    const double res = majorant_norm(lie_bracket(N, sol.F) + P - sol.resonant - sol.skipped, ctx);
    run.write_json("F.json", json::parse(to_json(sol.F)));
    run.write_json("resonant.json", json::parse(to_json(sol.resonant)));
    run.write_json("skipped.json", json::parse(to_json(sol.skipped)));
    run.write_json("homological.json", {{"relative_residual", normP > 0 ? res / normP : 0.0},
                                        {"resonant_terms", sol.resonant.size()},
                                        {"skipped_terms", sol.skipped.size()},
                                        {"reversible_input", check_reversible(P)}});
    out << "homological: relative residual " << (normP > 0 ? res / normP : 0.0) << '\n';
    return;
  }

  HomologicalSuiteOptions h;
  h.seed = run.seed;
  h.plus_sites = p.sites.plus_sites();
  h.trunc = p.truncation;
  h.mass = p.mass;
  h.trials = trials;
  h.terms = terms;
  const auto rep = homological_suite(h);
  const bool pass = rep.max_relative_residual <= 1e-10 && rep.max_imag_diagonal <= 1e-12;
  json j = to_json_value(rep);
  j["pass"] = pass;
  run.write_json("homological.json", j);
  out << "homological: " << (pass ? "pass" : "FAIL") << " (residual " << rep.max_relative_residual
      << ", imaginary diagonal " << rep.max_imag_diagonal << ")\n";
  if (!pass) run.status = kExitNumerical;
}

void cmd_melnikov(Run& run, std::ostream& out) {
  check_top_level(run.config);
  const auto p = read_model(run);
  const auto g = read_nonlinearity(run);
  Block b(run.config, "melnikov", {"scales", "samples", "gamma", "tau", "k_max", "j_max"});
  const auto scales = b.get("scales", std::vector<double>{1e-2, 1e-3, 1e-4});
  const auto samples = b.get<std::size_t>("samples", 1000);
  const double gamma = b.get("gamma", 1e-2);
  const double tau = b.get("tau", default_tau(p.sites));
  const int k_max = b.get("k_max", 8);
  const int j_max = b.get("j_max", p.truncation.j_max);
  require(!scales.empty(), "melnikov.scales must not be empty");
  for (double s : scales) require(s > 0, "melnikov.scales must be positive");
  require(samples > 0 && gamma > 0 && tau >= 0 && k_max >= 0, "melnikov: invalid scan parameters");
  require(j_max >= 1 && j_max <= p.truncation.j_max, "melnikov.j_max must lie in [1, model J_max]");
  run.effective["melnikov"] = b.effective;

  const auto nf = birkhoff_third_order(p, g);
  std::vector<MelnikovReport> reps;
  json dens = json::array();
  bool nondecreasing = true;
  for (double s : scales) {
    reps.push_back(melnikov_density(nf, s, samples, gamma, tau, k_max, j_max, run.threads));
    dens.push_back({{"scale", s}, {"density", reps.back().density}, {"samples", reps.back().samples}});
    if (reps.size() > 1 && reps.back().density < reps[reps.size() - 2].density) nondecreasing = false;
  }
  run.csv("density.csv", to_text([&](std::ostream& os) { write_density_csv(os, reps); }));
  run.write_json("melnikov.json", {{"gamma", gamma}, {"tau", tau}, {"scans", dens},
                                   {"nondecreasing", nondecreasing}});
  out << "melnikov-scan: densities";
  for (const auto& r : reps) out << ' ' << r.density;
  out << '\n';
}

void cmd_asymptotics(Run& run, std::ostream& out) {
  check_top_level(run.config);
  const auto p = read_model(run);
  const auto g = read_nonlinearity(run);
  Block b(run.config, "asymptotics", {"lo", "hi"});
  const int lo = b.get("lo", 8);
  const int hi = b.get("hi", 32);
  require(lo >= 1 && hi > lo + 5, "asymptotics: need 1 <= lo and hi > lo + 5");
  require(hi <= p.truncation.j_max, "asymptotics.hi exceeds model truncation j_max");
  run.effective["asymptotics"] = b.effective;

  std::map<int, double> lam, Om;
  for (int j = 1; j <= hi; ++j) lam[j] = lambda_j(p.mass, j);
  const auto nf = birkhoff_third_order(p, g);
  for (const auto& [j, v] : nf.Omega)
    if (j > 0 && j <= hi) Om[j] = v;
  const auto r0 = asymptotic_fit(lam, p.mass, lo, hi);
  const auto r1 = asymptotic_fit(Om, p.mass, lo, hi);
  double xi_max = 0;
  for (double x : p.xi) xi_max = std::max(xi_max, x);
  run.csv("asymptotics_unperturbed.csv", to_text([&](std::ostream& os) { write_asymptotics_csv(os, lam, r0); }));
  run.csv("asymptotics.csv", to_text([&](std::ostream& os) { write_asymptotics_csv(os, Om, r1); }));
  run.write_json("asymptotics.json",
                 {{"unperturbed", {{"a", r0.a_const}, {"sup_j_r", r0.sup_j_r},
                                   {"bound", p.mass * p.mass / (8.0 * lo)}}},
                  {"birkhoff", {{"a", r1.a_const}, {"sup_j_r", r1.sup_j_r}, {"bound", 10 * xi_max}}}});
  out << "asymptotics: a(0) " << r0.a_const << ", a(xi) " << r1.a_const << ", sup|j r_j| " << r1.sup_j_r << '\n';
}

json newton_json(const NewtonResult& r) {
  json j = json::parse(to_json(r.sol));
  j["residual"] = r.residual;
  j["galerkin_residual"] = r.galerkin_residual;
  j["iterations"] = r.iterations;
  j["history"] = r.history;
  return j;
}

void cmd_qp_solve(Run& run, std::ostream& out) {
  check_top_level(run.config);
  const auto p = read_model(run);
  const auto g = read_nonlinearity(run);
  const auto o = read_newton(run);
  const auto r = newton_qp(linear_solution(p, o.L), p, g, o);
  run.write_json("qp_solution.json", newton_json(r));
  std::ostringstream os;
  os << std::setprecision(17) << "iter,residual\n";
  for (std::size_t k = 0; k < r.history.size(); ++k) os << k << ',' << r.history[k] << '\n';
  run.csv("newton_history.csv", os.str());
  out << "qp-solve: residual " << r.residual << " after " << r.iterations << " iterations, omega";
  for (double w : r.sol.omega) out << ' ' << std::setprecision(15) << w;
  out << '\n';
}

void cmd_continuation(Run& run, std::ostream& out) {
  check_top_level(run.config);
  const auto p = read_model(run);
  const auto g = read_nonlinearity(run);
  const auto o = read_newton(run);
  Block b(run.config, "continuation", {"xi_path", "max_halvings"});
  const auto path = b.get("xi_path", std::vector<std::vector<double>>{p.xi});
  const int halvings = b.get("max_halvings", 4);
  require(!path.empty(), "continuation.xi_path must not be empty");
  for (const auto& xi : path) {
    require(xi.size() == p.xi.size(), "continuation.xi_path: each point needs one xi per site");
    for (double x : xi) require(x > 0, "continuation.xi_path: amplitudes must be positive");
  }
  require(halvings >= 0, "continuation.max_halvings must be >= 0");
  run.effective["continuation"] = b.effective;

  const auto res = continuation(p, g, path, o, halvings);
  run.csv("continuation.csv", to_text([&](std::ostream& os) { write_continuation_csv(os, res); }));
  json pts = json::array(), fails = json::array();
  for (const auto& pt : res.path)
    pts.push_back({{"xi", pt.xi}, {"omega", pt.sol.omega}, {"residual", pt.residual}, {"iterations", pt.iterations}});
  for (const auto& f : res.failures) fails.push_back({{"xi", f.xi}, {"reason", f.reason}});
  run.write_json("continuation.json", {{"points", pts}, {"failures", fails}});
  out << "continuation: " << res.path.size() << " points, " << res.failures.size() << " failures\n";
  if (!res.failures.empty()) run.status = kExitNumerical;
}

FieldState random_state(std::size_t N, std::uint64_t seed, double amp, int modes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, amp);
  FieldState s{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)};
  const auto xs = spectral::abscissae(N);
  for (int j = 0; j <= modes; ++j) {
    const double a = nd(rng), b = nd(rng), c = nd(rng), d = nd(rng);
    for (std::size_t n = 0; n < N; ++n) {
      s.y[n] += a * std::cos(j * xs[n]) + b * std::sin(j * xs[n]);
      s.v[n] += c * std::cos(j * xs[n]) + d * std::sin(j * xs[n]);
    }
  }
  return s;
}

std::size_t read_grid(Block& b, std::size_t def) {
  const auto N = b.get<std::size_t>("grid", def);
  require(N >= 4 && (N & (N - 1)) == 0, "grid must be a power of two >= 4");
  return N;
}

void emit_trajectory(Run& run, const Trajectory& traj) {
  run.csv("trajectory.csv", to_text([&](std::ostream& os) { write_trajectory_csv(os, traj); }));
  run.csv("final_field.csv", to_text([&](std::ostream& os) { write_field_csv(os, traj.states.back()); }));
}

void cmd_simulate(Run& run, std::ostream& out) {
  check_top_level(run.config);
  const auto p = read_model(run);
  const auto g = read_nonlinearity(run);
  Block b(run.config, "simulate", {"T", "dt", "grid", "store_every", "cfl", "adapt_c", "blow_up_threshold",
                                   "initial", "amplitude", "modes", "y0", "v0", "perturbation"});
  const double T = b.get("T", 10.0);
  const double dt = b.get("dt", 0.01);
  const std::size_t N = read_grid(b, 64);
  IntegrateOptions opt;
  opt.store_every = b.get<std::size_t>("store_every", 10);
  opt.cfl = b.get("cfl", opt.cfl);
  opt.adapt_c = b.get("adapt_c", opt.adapt_c);
  opt.blow_up_threshold = b.get("blow_up_threshold", opt.blow_up_threshold);
  const std::string init = b.get("initial", std::string("linear"));
  require(T > 0 && dt > 0, "simulate: T and dt must be positive");
  require(dt <= opt.cfl * 2 * PI / static_cast<double>(N), "simulate: dt violates the CFL bound");
  require(init == "linear" || init == "qp" || init == "random" || init == "constant",
          "simulate.initial must be linear, qp, random or constant");
  FieldState s0;
  NewtonOptions o;
  if (init == "qp") o = read_newton(run);
  if (init == "random") {
    const double amp = b.get("amplitude", 0.05);
    const int modes = b.get("modes", 3);
    require(amp >= 0 && modes >= 0, "simulate: amplitude and modes must be nonnegative");
    s0 = random_state(N, run.seed, amp, modes);
  } else if (init == "constant") {
    const double y0 = b.get("y0", 0.0), v0 = b.get("v0", 1.0), eps = b.get("perturbation", 0.0);
    s0 = {std::vector<double>(N, y0), std::vector<double>(N)};
    const auto xs = spectral::abscissae(N);
    for (std::size_t n = 0; n < N; ++n) s0.v[n] = v0 + eps * std::cos(xs[n]);
  }
  run.effective["simulate"] = b.effective;

  if (init == "linear" || init == "qp") {
    const QPSolution sol = init == "linear" ? linear_solution(p) : newton_qp(linear_solution(p, o.L), p, g, o).sol;
    auto [y, v] = sol.grid_state(0.0, N);
    s0 = {std::move(y), std::move(v)};
  }
  const auto traj = integrate(s0, g, p.mass, T, dt, opt);
  emit_trajectory(run, traj);
  const auto& d0 = traj.diagnostics.front();
  const auto& d1 = traj.diagnostics.back();
  run.write_json("simulate.json", {{"t_end", traj.times.back()},
                                   {"blow_up", traj.blow_up},
                                   {"blow_up_time", traj.blow_up_time},
                                   {"uniform_steps", traj.uniform},
                                   {"energy_start", d0.energy},
                                   {"energy_end", d1.energy}});
  out << "simulate: t_end " << traj.times.back() << (traj.blow_up ? " (blow-up)" : "") << ", energy drift "
      << std::abs(d1.energy - d0.energy) << '\n';
}

void cmd_lyapunov(Run& run, std::ostream& out) {
  check_top_level(run.config);
  const auto p = read_model(run);
  const auto g = read_nonlinearity(run);
  Block b(run.config, "lyapunov", {"T", "dt", "renorm_interval", "grid", "solution"});
  const double T = b.get("T", 1000.0);
  LyapunovOptions lo;
  lo.dt = b.get("dt", lo.dt);
  lo.renorm_interval = b.get("renorm_interval", lo.renorm_interval);
  lo.grid = b.get<std::size_t>("grid", lo.grid);
  lo.seed = run.seed;
  const std::string which = b.get("solution", std::string("newton"));
  require(T > 1, "lyapunov.T must exceed 1");
  require(lo.dt >= 0 && lo.renorm_interval > 0, "lyapunov: dt >= 0 and renorm_interval > 0 required");
  require(lo.grid == 0 || (lo.grid >= 4 && (lo.grid & (lo.grid - 1)) == 0), "lyapunov.grid must be 0 or a power of two");
  require(which == "newton" || which == "linear", "lyapunov.solution must be newton or linear");
  const auto o = which == "newton" ? read_newton(run) : NewtonOptions{};
  run.effective["lyapunov"] = b.effective;

  const QPSolution sol = which == "linear" ? linear_solution(p) : newton_qp(linear_solution(p, o.L), p, g, o).sol;
  const auto r = lyapunov_exponent(sol, p, g, T, lo);
  std::ostringstream os;
  os << std::setprecision(17) << "t,chi,bound\n";
  for (const auto& [t, chi] : r.history) os << t << ',' << chi << ',' << 5 * std::log(t) / t << '\n';
  run.csv("lyapunov.csv", os.str());
  run.write_json("lyapunov.json", {{"T", r.T}, {"chi", r.chi}, {"scale", r.scale}, {"error_bar", r.error_bar},
                                   {"fit_C", r.fit_C}, {"zero", r.zero}});
  out << "lyapunov-exponent: chi(" << r.T << ") = " << r.chi << ", 5 log T / T = " << 5 * r.scale
      << (r.zero ? " (zero)" : " (nonzero)") << '\n';
}

json identity_json(const IdentityReport& rep) {
  return {{"max_error", rep.max_error}, {"max_flux", rep.max_flux}, {"monotone", rep.monotone},
          {"worst_decrease", rep.worst_decrease}};
}

std::string identity_csv(const IdentityReport& rep) {
  std::ostringstream os;
  os << std::setprecision(17) << "t,numeric,flux\n";
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    os << rep.times[k] << ',' << rep.numeric[k] << ',' << rep.flux[k] << '\n';
  return os.str();
}

void cmd_nonexistence(Run& run, const std::string& kind, std::ostream& out) {
  check_top_level(run.config);
  Block b(run.config, "nonexistence", {"p", "q", "mass", "T", "dt", "grid", "amplitude", "modes", "f",
                                       "v0", "perturbation", "store_every"});
  const bool mean_kind = kind == "blowup" || kind == "average";
  const int p = b.get("p", mean_kind ? 2 : 3);
  const double mass = b.get("mass", 0.0);
  require(p >= 1, "nonexistence.p must be >= 1");
  require(mass >= 0, "nonexistence.mass must be nonnegative");

  if (kind == "average") {
    const int q = b.get("q", 2);
    require(q >= 1, "nonexistence.q must be >= 1");
    auto params = read_model(run);
    const auto o = read_newton(run);
    run.effective["nonexistence"] = b.effective;
    params.mass = mass;
    const auto g = NonlinearitySpec::of({GTerm{1.0, 0, p, 0}});
    // linear standing wave of y_tt - y_xx + m y = 0 (m = 0 allowed here)
    const auto& plus = params.sites.plus_sites();
    QPSolution cand(plus, params.xi, o.L, params.truncation.j_max);
    for (std::size_t s = 0; s < plus.size(); ++s) {
      std::vector<int> e(plus.size(), 0);
      e[s] = 1;
      cand.omega[s] = std::sqrt(plus[s] * plus[s] + mass);
      cand.at(e, plus[s]) = std::sqrt(8 * params.xi[s]) / cand.omega[s];
    }
    json j;
    try {
      const auto r = newton_qp(cand, params, g, o);
      cand = r.sol;
      j["newton_converged"] = true;
      j["residual"] = r.residual;
    } catch (const NumericalFailure& e) {
      j["newton_converged"] = false;
      j["reason"] = e.what();
    }
    const auto rep = mean_average_diagnostic(cand, p, q);
    j["avg_yx_p"] = rep.avg_yx_p;
    j["avg_yt_q"] = rep.avg_yt_q;
    j["p"] = p;
    j["q"] = q;
    run.write_json("average.json", j);
    out << "nonexistence average: <y_x^" << p << "> = " << rep.avg_yx_p << ", Newton "
        << (j["newton_converged"].get<bool>() ? "converged" : "failed") << '\n';
    return;
  }

  const double T = b.get("T", kind == "blowup" ? 2.0 : 10.0);
  const double dt = b.get("dt", 0.01);
  const std::size_t N = read_grid(b, kind == "blowup" ? 64 : 32);
  IntegrateOptions opt;
  opt.store_every = b.get<std::size_t>("store_every", 1);
  require(T > 0 && dt > 0, "nonexistence: T and dt must be positive");
  require(dt <= opt.cfl * 2 * PI / static_cast<double>(N), "nonexistence: dt violates the CFL bound");

  if (kind == "blowup") {
    const double v0 = b.get("v0", 1.0), eps = b.get("perturbation", 0.1);
    run.effective["nonexistence"] = b.effective;
    FieldState s0{std::vector<double>(N, 0.0), std::vector<double>(N)};
    const auto xs = spectral::abscissae(N);
    for (std::size_t n = 0; n < N; ++n) s0.v[n] = v0 + eps * std::cos(xs[n]);
    const auto traj = integrate(s0, NonlinearitySpec::of({GTerm{1.0, 0, 0, p}}), mass, T, dt, opt);
    const auto rep = blow_up_certificate(traj);
    emit_trajectory(run, traj);
    std::ostringstream os;
    os << std::setprecision(17) << "t,observed,predicted\n";
    for (std::size_t k = 0; k < rep.times.size(); ++k)
      os << rep.times[k] << ',' << rep.observed[k] << ',' << rep.predicted[k] << '\n';
    run.csv("blowup.csv", os.str());
    run.write_json("blowup.json", {{"w0", rep.w0}, {"inconclusive", rep.inconclusive}, {"flagged", rep.flagged},
                                   {"t_flag", rep.t_flag}, {"bound_holds", rep.bound_holds},
                                   {"min_margin", rep.min_margin}});
    out << "nonexistence blowup: " << (rep.flagged ? "flagged at t = " : "not flagged by t = ")
        << (rep.flagged ? rep.t_flag : traj.times.back())
        << (rep.inconclusive ? " (inconclusive: mean velocity <= 0)" : "") << '\n';
    return;
  }

  const double amp = b.get("amplitude", 0.05);
  const int modes = b.get("modes", 3);
  require(amp >= 0 && modes >= 0, "nonexistence: amplitude and modes must be nonnegative");
  std::vector<GTerm> fterms;
  if (kind == "H") {
    for (const auto& c : b.get("f", std::vector<double>{})) {
      // f[i] is the coefficient of y^(i+1)
      fterms.push_back(GTerm{c, static_cast<int>(fterms.size()) + 1, 0, 0});
    }
  }
  run.effective["nonexistence"] = b.effective;
  std::vector<GTerm> gterms{kind == "M" ? GTerm{1.0, 0, p, 0} : GTerm{1.0, 0, 0, p}};
  for (const auto& t : fterms)
    if (t.coeff != 0) gterms.push_back(t);
  const auto g = NonlinearitySpec::of(gterms);
  opt.potential = fterms;
  const auto traj = integrate(random_state(N, run.seed, amp, modes), g, mass, T, dt, opt);
  if (traj.blow_up) throw NumericalFailure("nonexistence: run blew up; reduce amplitude or T");
  if (!traj.uniform) throw NumericalFailure("nonexistence: adaptive steps were taken; reduce amplitude or dt");
  emit_trajectory(run, traj);
  const auto rep = kind == "M" ? dM_dt_identity(traj, p) : dH_dt_identity(traj, p, NonlinearitySpec::of(fterms));
  run.csv(kind == "M" ? "identity_M.csv" : "identity_H.csv", identity_csv(rep));
  json j = identity_json(rep);
  if (kind == "M") {
    // cos x at rest: flux int sin^{p+1}
    FieldState c{std::vector<double>(N), std::vector<double>(N, 0.0)};
    const auto xs = spectral::abscissae(N);
    for (std::size_t n = 0; n < N; ++n) c.y[n] = std::cos(xs[n]);
    j["cos_example"] = {{"numeric", dM_dt_at(c, g, mass, 1e-3)}, {"flux", flux_M(c, p)}};
  }
  run.write_json(kind == "M" ? "nonexistence_M.json" : "nonexistence_H.json", j);
  out << "nonexistence " << kind << ": identity error " << rep.max_error << ", monotone "
      << (rep.monotone ? "yes" : "no") << '\n';
}

// ------------------------------------------------------------------ plumbing

std::string versions_line() {
  return std::string("kamdnlw=") + KAMDNLW_VERSION;
}

json versions() {
  return {{"kamdnlw", KAMDNLW_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"boost", BOOST_LIB_VERSION},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__}};
}

unsigned resolve_threads(int flag) {
  if (flag > 0) return static_cast<unsigned>(flag);
  if (flag < 0) throw ConfigError("--threads must be >= 1");
  if (const char* env = std::getenv("KAMDNLW_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 4096) throw ConfigError("KAMDNLW_THREADS must be a positive integer");
    return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  return j;
}

void write_file(const fs::path& path, const std::string& body) {
  const fs::path tmp = path.string() + ".part";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << body;
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_artifacts(const Run& run, const std::string& out_dir, const std::string& hash) {
  fs::create_directories(out_dir);
  const std::string header = "# kamdnlw " + run.command + " config_hash=" + hash +
                             " seed=" + std::to_string(run.seed) + " " + versions_line() + "\n";
  json names = json::array();
  for (const auto& a : run.artifacts) {
    if (a.csv) {
      write_file(fs::path(out_dir) / a.name, header + a.body);
    } else {
      json obj = a.object;
      obj["config_hash"] = hash;
      write_file(fs::path(out_dir) / a.name, obj.dump(2) + "\n");
    }
    names.push_back(a.name);
  }
  const json prov = {{"command", run.command},
                     {"config_hash", hash},
                     {"seed", run.seed},
                     {"threads", run.threads},
                     {"status", run.status},
                     {"versions", versions()},
                     {"config", run.effective},
                     {"artifacts", names}};
  write_file(fs::path(out_dir) / "provenance.json", prov.dump(2) + "\n");
}

}  // namespace

std::string config_hash(const std::string& canonical) {
  boost::crc_32_type crc;
  crc.process_bytes(canonical.data(), canonical.size());
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << crc.checksum();
  return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reversible KAM machinery for the derivative nonlinear wave equation"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  int threads = 0;
  std::int64_t seed = -1;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads (default: KAMDNLW_THREADS or all cores)");
  app.add_option("--seed", seed, "seed for sampling (overrides the config)");

  const std::vector<std::pair<std::string, std::string>> commands{
      {"algebra-check", "vector-field algebra property suite"},
      {"birkhoff", "third-order Birkhoff normal form frequencies"},
      {"homological", "homological equation solver checks"},
      {"melnikov-scan", "Melnikov good-set density over box scales"},
      {"asymptotics", "normal frequency asymptotics fit"},
      {"qp-solve", "Newton solve for a quasi-periodic standing wave"},
      {"continuation", "continuation of quasi-periodic solutions in the amplitudes"},
      {"simulate", "time integration with functional diagnostics"},
      {"lyapunov-exponent", "finite-time Lyapunov exponent along a solution"},
      {"nonexistence", "Lyapunov-functional and blow-up certificates"}};
  std::string kind;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    if (name == "nonexistence")
      sub->add_option("kind", kind, "M, H, blowup or average")
          ->required()
          ->check(CLI::IsMember({"M", "H", "blowup", "average"}));
  }

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  try {
    run.config = load_config(config_path);
    run.threads = resolve_threads(threads);
    if (seed >= 0) {
      run.seed = static_cast<std::uint64_t>(seed);
    } else if (run.config.contains("seed")) {
      if (!run.config.at("seed").is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
      run.seed = run.config.at("seed").get<std::uint64_t>();
    }
    if (run.command == "nonexistence") run.command += " " + kind;

    const std::string& c = app.get_subcommands().front()->get_name();
    if (c == "algebra-check") cmd_algebra_check(run, out);
    else if (c == "birkhoff") cmd_birkhoff(run, out);
    else if (c == "homological") cmd_homological(run, out);
    else if (c == "melnikov-scan") cmd_melnikov(run, out);
    else if (c == "asymptotics") cmd_asymptotics(run, out);
    else if (c == "qp-solve") cmd_qp_solve(run, out);
    else if (c == "continuation") cmd_continuation(run, out);
    else if (c == "simulate") cmd_simulate(run, out);
    else if (c == "lyapunov-exponent") cmd_lyapunov(run, out);
    else cmd_nonexistence(run, kind, out);

    run.effective["seed"] = run.seed;
    const json hashed = {{"command", run.command}, {"config", run.effective}};
    write_artifacts(run, out_dir, config_hash(hashed.dump()));
    return run.status;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const AliasingError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace kamdnlw::cli
