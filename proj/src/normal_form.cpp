#include "kamdnlw/normal_form.hpp"

#include <boost/random/sobol.hpp>
#include <cmath>
#include <limits>
#include <ostream>
#include <thread>

#include "json.hpp"

namespace kamdnlw {

namespace {

constexpr cplx I_UNIT{0.0, 1.0};

std::vector<double> zeros(std::size_t n) { return std::vector<double>(n, 0.0); }

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t t = 0; t < a.size(); ++t) s += a[t] * b[t];
  return s;
}

ExponentMap remove_one(ExponentMap e, int j) {
  auto it = e.find(j);
  if (it == e.end()) return e;
  if (--it->second == 0) e.erase(it);
  return e;
}

void emit_row(std::ostream& out, std::initializer_list<double> values) {
  char buf[40];
  bool first = true;
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << (first ? "" : ",") << buf;
    first = false;
  }
  out << '\n';
}

}  // namespace

// ---------------------------------------------------------------- NormalForm

NormalForm NormalForm::linear(const SiteSet& sites, double mass, int j_max) {
  NormalForm nf;
  nf.sites = sites;
  nf.mass = mass;
  const std::size_t d = sites.plus_sites().size();
  nf.xi = zeros(d);
  for (int j : sites.sites()) {
    nf.omega.push_back(lambda_j(mass, j));
    nf.omega_slope[j] = zeros(d);
  }
  for (int j = -j_max; j <= j_max; ++j) {
    if (sites.contains(j)) continue;
    nf.Omega[j] = lambda_j(mass, j);
    nf.Omega_slope[j] = zeros(d);
  }
  nf.twist = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  nf.twist_condition = std::numeric_limits<double>::infinity();
  return nf;
}

NormalForm NormalForm::at(const std::vector<double>& xi_new) const {
  if (xi_new.size() != sites.plus_sites().size())
    throw std::invalid_argument("NormalForm::at: xi has the wrong size");
  NormalForm out = *this;
  out.xi = xi_new;
  for (std::size_t s = 0; s < sites.n(); ++s) {
    const int j = sites.sites()[s];
    out.omega[s] = lambda_j(mass, j) + dot(omega_slope.at(j), xi_new);
  }
  for (auto& [j, v] : out.Omega) v = lambda_j(mass, j) + dot(Omega_slope.at(j), xi_new);
  return out;
}

double NormalForm::omega_of(int j) const {
  const auto s = sites.index_of(j);
  if (!s) throw std::out_of_range("omega_of: site is not tangential");
  return omega[*s];
}

VectorField as_vector_field(const NormalForm& nf, const Truncation& trunc) {
  VectorField N(nf.sites, trunc);
  for (std::size_t s = 0; s < nf.sites.n(); ++s)
    N.add(make_key(nf.sites, {Axis::x, nf.sites.sites()[s]}), nf.omega[s]);
  for (const auto& [j, Om] : nf.Omega) {
    if (std::abs(j) > trunc.j_max) continue;
    MonomialKey kz = make_key(nf.sites, {Axis::z, j});
    kz.alpha[j] = 1;
    N.add(kz, -I_UNIT * Om);
    MonomialKey kb = make_key(nf.sites, {Axis::zbar, j});
    kb.beta[j] = 1;
    N.add(kb, I_UNIT * Om);
  }
  return N;
}

// ---------------------------------------------------------------- homological equation

cplx ad_eigenvalue(const VectorField& N, const Monomial& m) {
  if (m.coeff == cplx{}) throw ContractViolation("ad_eigenvalue: zero monomial");
  VectorField single = N.empty_like();
  single.add(m);
  const VectorField B = lie_bracket(N, single);
  if (B.empty()) return 0.0;
  if (B.size() != 1 || B.terms().begin()->first != m.key)
    throw ContractViolation("ad_eigenvalue: bracket is not proportional to the monomial");
  return B.terms().begin()->second / m.coeff;
}

cplx divisor(const NormalForm& nf, const MonomialKey& key) {
  double w = 0;
  for (std::size_t s = 0; s < key.k.size(); ++s) w += key.k[s] * nf.omega.at(s);
  for (const auto& [j, e] : key.alpha) w -= e * nf.Omega.at(j);
  for (const auto& [j, e] : key.beta) w += e * nf.Omega.at(j);
  if (key.component.axis == Axis::z) w += nf.Omega.at(key.component.index);
  if (key.component.axis == Axis::zbar) w -= nf.Omega.at(key.component.index);
  return -I_UNIT * w;
}

HomologicalSolution solve_homological(const NormalForm& N, const VectorField& P,
                                      double divisor_floor) {
  HomologicalSolution out{P.empty_like(), P.empty_like(), P.empty_like()};
  for (const auto& [key, c] : P.terms()) {
    if (in_symmetrization_family(key, P.sites())) {
      out.resonant.add(key, c);
      continue;
    }
    const cplx d = divisor(N, key);
    if (std::abs(d) < divisor_floor) out.skipped.add(key, c);
    else out.F.add(key, -c / d);
  }
  return out;
}

// ---------------------------------------------------------------- Birkhoff step

bool is_integrable_cubic(const MonomialKey& key) {
  if (l1(key.k) != 0 || l1(key.i) != 0) return false;
  const int q = key.component.index;
  if (key.component.axis == Axis::z)
    return key.alpha.count(q) && total(key.beta) == 1 && remove_one(key.alpha, q) == key.beta;
  if (key.component.axis == Axis::zbar)
    return key.beta.count(q) && total(key.alpha) == 1 && remove_one(key.beta, q) == key.alpha;
  return false;
}

VectorField birkhoff_resonant_cubic(const ModelParams& params, const NonlinearitySpec& g,
                                    double divisor_floor) {
  const Truncation trunc{params.truncation.j_max, params.truncation.k_max, 3};
  const VectorField X = tuc_field(params.mass, g, trunc, false);
  const NormalForm N0 = NormalForm::linear(SiteSet{}, params.mass, trunc.j_max);
  // One homological step: the cubic terms with nonzero divisor are removed by the
  // generator F = -c/d; only the resonant part survives at cubic order.
  VectorField R = X.empty_like();
  for (const auto& [key, c] : X.terms())
    if (std::abs(divisor(N0, key)) < divisor_floor) R.add(key, c);
  return R;
}

NormalForm birkhoff_third_order(const ModelParams& params, const NonlinearitySpec& g,
                                double divisor_floor) {
  params.validate();
  const int J = params.truncation.j_max;
  const SiteSet& sites = params.sites;
  const auto& plus = sites.plus_sites();
  const std::size_t d = plus.size();

  NormalForm nf = NormalForm::linear(sites, params.mass, J);
  const VectorField R = birkhoff_resonant_cubic(params, g, divisor_floor);

  std::map<int, std::vector<double>> slope;
  for (const auto& [key, c] : R.terms()) {
    if (!is_integrable_cubic(key)) {
      nf.near_resonances.push_back({c, key});
      continue;
    }
    if (key.component.axis != Axis::z) continue;
    // z_q |z_c|^2: on the torus |z_c|^2 = xi_|c| for tangential c, 0 otherwise.
    const int cidx = key.beta.begin()->first;
    if (!sites.contains(cidx)) continue;
    const cplx rate = I_UNIT * c;
    if (std::abs(rate.imag()) > 1e-12 * std::max(1.0, std::abs(rate)))
      throw SymmetryViolation("birkhoff_third_order: complex frequency correction");
    const int q = key.component.index;
    auto& row = slope.try_emplace(q, zeros(d)).first->second;
    for (std::size_t t = 0; t < d; ++t)
      if (plus[t] == std::abs(cidx)) row[t] += rate.real();
  }
  for (auto& [j, row] : nf.omega_slope)
    if (slope.count(j)) row = slope[j];
  for (auto& [j, row] : nf.Omega_slope)
    if (slope.count(j)) row = slope[j];

  nf = nf.at(params.xi);
  for (std::size_t s = 0; s < d; ++s)
    for (std::size_t t = 0; t < d; ++t)
      nf.twist(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) =
          nf.omega_slope.at(plus[s])[t];
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(nf.twist);
  const auto sv = svd.singularValues();
  nf.twist_condition = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1)
                                             : std::numeric_limits<double>::infinity();

  if (J >= 15) {
    std::map<int, double> positive;
    for (const auto& [j, v] : nf.Omega)
      if (j > 0) positive[j] = v;
    nf.a_const = asymptotic_fit(positive, params.mass, 8, std::min(32, J)).a_const;
  }
  return nf;
}

NormalForm frequency_correction(const VectorField& P, const NormalForm& N) {
  if (!(P.sites() == N.sites))
    throw std::invalid_argument("frequency_correction: site sets differ");
  NormalForm out = N;
  auto real_or_throw = [](cplx v, const char* what) {
    if (std::abs(v.imag()) > 1e-12) throw SymmetryViolation(std::string("frequency_correction: ") + what);
    return v.real();
  };
  for (const auto& [key, c] : P.terms()) {
    if (l1(key.k) != 0 || l1(key.i) != 0) continue;
    const int q = key.component.index;
    if (key.component.axis == Axis::x && key.alpha.empty() && key.beta.empty()) {
      out.omega[*N.sites.index_of(q)] += real_or_throw(c, "non-real tangential shift");
    } else if (key.component.axis == Axis::z && key.beta.empty() && key.alpha.size() == 1 &&
               key.alpha.begin()->first == q && key.alpha.begin()->second == 1) {
      out.Omega.at(q) += real_or_throw(I_UNIT * c, "non-real normal frequency correction");
    }
  }
  return out;
}

// ---------------------------------------------------------------- asymptotics

ToeplitzDecomposition toeplitz_decompose(const std::map<int, double>& P_diag, int lo, int hi,
                                         double threshold) {
  if (hi - lo + 1 < 8) throw std::invalid_argument("toeplitz_decompose: window needs >= 8 indices");
  if (lo <= 0) throw std::invalid_argument("toeplitz_decompose: window must be positive");
  ToeplitzDecomposition out;
  const int mid = (lo + hi + 1) / 2;
  out.fit_window = {mid, hi};
  const int n = hi - mid + 1;
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (int r = 0; r < n; ++r) {
    const int j = mid + r;
    A(r, 0) = 1.0;
    A(r, 1) = 1.0 / j;
    b(r) = P_diag.at(j);
  }
  const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
  out.T_value = sol(0);
  out.tail = sol(1);
  out.fit_residual = (A * sol - b).cwiseAbs().maxCoeff();
  out.toeplitz = out.fit_residual <= threshold;
  for (int j = lo; j <= hi; ++j) {
    out.R_diag[j] = P_diag.at(j) - out.T_value;
    out.sup_j_R = std::max(out.sup_j_R, std::abs(j * out.R_diag[j]));
  }
  return out;
}

AsymptoticReport asymptotic_fit(const std::map<int, double>& Omega, double m, int lo, int hi) {
  if (hi - lo + 1 < 8) throw std::invalid_argument("asymptotic_fit: window needs >= 8 indices");
  if (lo <= 0) throw std::invalid_argument("asymptotic_fit: window must be positive");
  const int powers[] = {1, 3, 5, 7, 9};
  const int n = hi - lo + 1;
  Eigen::MatrixXd A(n, 6);
  Eigen::VectorXd b(n);
  for (int r = 0; r < n; ++r) {
    const int j = lo + r;
    const double t = static_cast<double>(lo) / j;
    A(r, 0) = 1.0;
    for (int p = 0; p < 5; ++p) A(r, p + 1) = std::pow(t, powers[p]);
    b(r) = Omega.at(j) - j - m / (2.0 * j);
  }
  const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
  AsymptoticReport out;
  out.a_const = sol(0);
  out.tail.assign(sol.data() + 1, sol.data() + 6);
  for (int j = lo; j <= hi; ++j) {
    const double r = Omega.at(j) - j - out.a_const - m / (2.0 * j);
    out.residual[j] = r;
    out.sup_j_r = std::max(out.sup_j_r, std::abs(j * r));
  }
  return out;
}

// ---------------------------------------------------------------- Melnikov

namespace {

void enumerate_k(std::size_t dim, int budget, std::vector<int>& cur,
                 std::vector<std::vector<int>>& out) {
  if (cur.size() == dim) {
    if (l1(cur) > 0) out.push_back(cur);
    return;
  }
  for (int v = -budget; v <= budget; ++v) {
    cur.push_back(v);
    enumerate_k(dim, budget - std::abs(v), cur, out);
    cur.pop_back();
  }
}

struct MelnikovData {
  std::vector<std::vector<int>> ks;
  std::vector<int> normals;
};

MelnikovData melnikov_data(const NormalForm& nf, int k_max, int j_max) {
  MelnikovData md;
  std::vector<int> cur;
  enumerate_k(nf.sites.plus_sites().size(), k_max, cur, md.ks);
  for (int i = 0; i <= j_max; ++i)
    if (!nf.sites.contains(i)) md.normals.push_back(i);
  return md;
}

MelnikovReport run_check(const NormalForm& nf, const MelnikovData& md, double gamma, double tau,
                         bool record) {
  MelnikovReport rep;
  const auto& plus = nf.sites.plus_sites();
  std::vector<double> w(plus.size());
  for (std::size_t s = 0; s < plus.size(); ++s) w[s] = nf.omega_of(plus[s]);
  std::vector<double> Om;
  for (int i : md.normals) Om.push_back(nf.Omega.at(i));

  auto scan = [&](const std::vector<int>& k, double wk, double thr) {
    for (std::size_t a = 0; a < Om.size(); ++a)
      for (std::size_t b = 0; b < Om.size(); ++b) {
        if (k.empty() && a == b) continue;
        ++rep.checked;
        const double v = wk + Om[a] - Om[b];
        if (std::abs(v) < thr) {
          if (record) rep.violations.push_back({k.empty() ? std::vector<int>(plus.size(), 0) : k,
                                                md.normals[a], md.normals[b], v});
          else rep.violations.resize(1);
        }
      }
  };
  scan({}, 0.0, gamma);
  for (const auto& k : md.ks) {
    double wk = 0;
    for (std::size_t s = 0; s < k.size(); ++s) wk += k[s] * w[s];
    scan(k, wk, gamma / (1.0 + std::pow(l1(k), tau)));
  }
  return rep;
}

}  // namespace

double default_tau(const SiteSet& sites) { return 2.0 * (static_cast<double>(sites.n()) + 1.0); }

MelnikovReport melnikov_check(const NormalForm& nf, double gamma, double tau, int k_max,
                              int j_max) {
  if (!(gamma > 0) || !(tau > 1)) throw std::invalid_argument("melnikov_check: need gamma > 0, tau > 1");
  auto rep = run_check(nf, melnikov_data(nf, k_max, j_max), gamma, tau, true);
  rep.gamma = gamma;
  rep.tau = tau;
  rep.k_max = k_max;
  rep.j_max = j_max;
  rep.samples = 1;
  rep.density = rep.violations.empty() ? 1.0 : 0.0;
  return rep;
}

MelnikovReport melnikov_density(const NormalForm& nf, double scale, std::size_t samples,
                                double gamma, double tau, int k_max, int j_max,
                                unsigned threads) {
  if (!(gamma > 0) || !(tau > 1)) throw std::invalid_argument("melnikov_density: need gamma > 0, tau > 1");
  if (!(scale > 0) || samples == 0) throw std::invalid_argument("melnikov_density: empty box");
  const std::size_t d = nf.sites.plus_sites().size();
  boost::random::sobol engine(d);
  const double norm = static_cast<double>(engine.max()) + 1.0;
  std::vector<std::vector<double>> points(samples, std::vector<double>(d));
  for (auto& p : points)
    for (auto& v : p) v = scale * (1.0 - static_cast<double>(engine()) / norm);

  const MelnikovData md = melnikov_data(nf, k_max, j_max);
  std::vector<char> good(samples, 0);
  std::vector<std::uint64_t> checked(samples, 0);
  threads = std::max(1u, threads);
  auto worker = [&](unsigned t) {
    for (std::size_t s = t; s < samples; s += threads) {
      const auto rep = run_check(nf.at(points[s]), md, gamma, tau, false);
      good[s] = rep.violations.empty();
      checked[s] = rep.checked;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker, t);
  worker(0);
  for (auto& th : pool) th.join();

  MelnikovReport rep;
  rep.gamma = gamma;
  rep.tau = tau;
  rep.k_max = k_max;
  rep.j_max = j_max;
  rep.scale = scale;
  rep.samples = samples;
  std::size_t pass = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    pass += good[s];
    rep.checked += checked[s];
  }
  rep.density = static_cast<double>(pass) / static_cast<double>(samples);
  return rep;
}

// ---------------------------------------------------------------- output

std::string to_json(const NormalForm& nf) {
  nlohmann::ordered_json j;
  j["sites"] = nf.sites.plus_sites();
  j["mass"] = nf.mass;
  j["xi"] = nf.xi;
  auto omega = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < nf.sites.n(); ++s)
    omega.push_back({{"j", nf.sites.sites()[s]}, {"value", nf.omega[s]}});
  j["omega"] = std::move(omega);
  auto Omega = nlohmann::ordered_json::array();
  for (const auto& [q, v] : nf.Omega) Omega.push_back({{"j", q}, {"value", v}});
  j["Omega"] = std::move(Omega);
  auto twist = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < nf.twist.rows(); ++r) {
    std::vector<double> row(nf.twist.cols());
    for (Eigen::Index c = 0; c < nf.twist.cols(); ++c) row[c] = nf.twist(r, c);
    twist.push_back(row);
  }
  j["twist"] = std::move(twist);
  j["twist_condition"] = std::isfinite(nf.twist_condition) ? nlohmann::ordered_json(nf.twist_condition)
                                                           : nlohmann::ordered_json(nullptr);
  j["a_const"] = nf.a_const;
  j["near_resonances"] = nf.near_resonances.size();
  return j.dump(2);
}

void write_density_csv(std::ostream& out, const std::vector<MelnikovReport>& reports) {
  out << "scale,density\n";
  for (const auto& r : reports) emit_row(out, {r.scale, r.density});
}

void write_asymptotics_csv(std::ostream& out, const std::map<int, double>& Omega,
                           const AsymptoticReport& fit) {
  out << "j,Omega,residual\n";
  for (const auto& [j, r] : fit.residual) emit_row(out, {static_cast<double>(j), Omega.at(j), r});
}

}  // namespace kamdnlw
