#include "kamdnlw/dnlw_model.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <unordered_map>

#include "kamdnlw/spectral.hpp"

namespace kamdnlw {

namespace {

const double SQRT2 = std::numbers::sqrt2;
constexpr cplx I_UNIT{0.0, 1.0};

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

double lambda_j(double m, int j) {
  if (!(m > 0)) throw DomainError("lambda_j: mass must be positive");
  return std::sqrt(static_cast<double>(j) * j + m);
}

// ---------------------------------------------------------------- params

void ModelParams::validate() const {
  if (!(mass > 0)) throw ConfigError("model: mass must be positive");
  if (xi.size() != sites.plus_sites().size())
    throw ConfigError("model: xi must have one amplitude per tangential site");
  for (double v : xi)
    if (!(v > 0)) throw ConfigError("model: amplitudes xi must be positive");
  if (!is_power_of_two(grid_N)) throw ConfigError("model: grid_N must be a power of two");
  if (grid_N < 4 * truncation.j_max) throw ConfigError("model: need grid_N >= 4 * J_max");
  if (truncation.j_max < 1 || truncation.k_max < 0)
    throw ConfigError("model: truncation needs J_max >= 1 and K_max >= 0");
}

double ModelParams::xi_of(int j) const {
  const auto& plus = sites.plus_sites();
  for (std::size_t s = 0; s < plus.size(); ++s)
    if (plus[s] == std::abs(j)) return xi.at(s);
  throw std::out_of_range("xi_of: site is not tangential");
}

// ---------------------------------------------------------------- nonlinearity

std::vector<GTerm> NonlinearitySpec::terms() const {
  std::vector<GTerm> out;
  if (leading) out.push_back(GTerm{1.0, 1, 2, 0, XFactor::none, 0});
  for (const auto& t : hot)
    if (t.coeff != 0.0) out.push_back(t);
  return out;
}

int NonlinearitySpec::max_degree() const {
  int d = 0;
  for (const auto& t : terms()) d = std::max(d, t.degree());
  return d;
}

int NonlinearitySpec::max_x_freq() const {
  int p = 0;
  for (const auto& t : terms())
    if (t.x_kind != XFactor::none) p = std::max(p, std::abs(t.x_freq));
  return p;
}

NonlinearitySpec::Partials NonlinearitySpec::partials(double x, double y, double yx,
                                                      double v) const {
  Partials out;
  auto ipow = [](double b, int e) { return e < 0 ? 0.0 : std::pow(b, e); };
  for (const auto& t : terms()) {
    double c = t.coeff;
    if (t.x_kind == XFactor::cos) c *= std::cos(t.x_freq * x);
    if (t.x_kind == XFactor::sin) c *= std::sin(t.x_freq * x);
    const double py = ipow(y, t.y_pow), pyx = ipow(yx, t.yx_pow), pv = ipow(v, t.v_pow);
    out.g += c * py * pyx * pv;
    if (t.y_pow > 0) out.dy += c * t.y_pow * ipow(y, t.y_pow - 1) * pyx * pv;
    if (t.yx_pow > 0) out.dyx += c * t.yx_pow * py * ipow(yx, t.yx_pow - 1) * pv;
    if (t.v_pow > 0) out.dv += c * t.v_pow * py * pyx * ipow(v, t.v_pow - 1);
  }
  return out;
}

SymmetryReport check_g_symmetries(const NonlinearitySpec& g, std::uint64_t seed, int samples) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(0.0, 2 * std::numbers::pi), uv(-1.0, 1.0);
  SymmetryReport r;
  for (int s = 0; s < samples; ++s) {
    const double x = ux(rng), y = uv(rng), yx = uv(rng), v = uv(rng);
    const double g0 = g.eval(x, y, yx, v);
    r.even_in_v_defect = std::max(r.even_in_v_defect, std::abs(g.eval(x, y, yx, -v) - g0));
    r.parity_defect = std::max(r.parity_defect, std::abs(g.eval(-x, y, -yx, v) - g0));
  }
  r.even_in_v = r.even_in_v_defect <= 1e-12;
  r.parity = r.parity_defect <= 1e-12;
  r.quadratic = true;
  for (const auto& t : g.terms()) r.quadratic = r.quadratic && t.degree() >= 2;
  return r;
}

// ---------------------------------------------------------------- complex coordinates

ComplexState to_complex(const FieldState& state, double m) {
  const std::size_t N = state.size();
  if (N < 4 || state.v.size() != N) throw std::invalid_argument("to_complex: bad grid state");
  const auto cy = spectral::forward(state.y);
  const auto cv = spectral::forward(state.v);
  const int J = static_cast<int>(N / 2) - 1;
  ComplexState u(J);
  for (int j = -J; j <= J; ++j) {
    const double lam = lambda_j(m, j);
    u.up(j) = (lam * cy[spectral::slot(j, N)] + I_UNIT * cv[spectral::slot(j, N)]) / SQRT2;
    u.um(j) = (lam * cy[spectral::slot(-j, N)] - I_UNIT * cv[spectral::slot(-j, N)]) / SQRT2;
  }
  return u;
}

FieldState from_complex(const ComplexState& u, double m, std::size_t N) {
  if (static_cast<int>(N) < 2 * u.j_max + 2)
    throw std::invalid_argument("from_complex: grid too small for the mode range");
  std::vector<cplx> cy(N), cv(N);
  for (int j = -u.j_max; j <= u.j_max; ++j) {
    const double lam = lambda_j(m, j);
    cy[spectral::slot(j, N)] = (u.up(j) + u.um(-j)) / (SQRT2 * lam);
    cv[spectral::slot(j, N)] = (u.up(j) - u.um(-j)) / (I_UNIT * SQRT2);
  }
  return FieldState{spectral::inverse_real(cy), spectral::inverse_real(cv)};
}

std::size_t dealiased_grid(int j_max, const NonlinearitySpec& g) {
  const std::size_t need = static_cast<std::size_t>((g.max_degree() + 1) * j_max + g.max_x_freq() + 1);
  return next_power_of_two(std::max<std::size_t>(need, 2 * (2 * j_max + 1)));
}

ComplexState fourier_g(const ComplexState& u, const NonlinearitySpec& g, double m,
                       std::size_t grid) {
  const int J = u.j_max;
  ComplexState out(J);
  if (g.is_zero()) return out;
  const std::size_t exact = static_cast<std::size_t>((g.max_degree() + 1) * J + g.max_x_freq() + 1);
  if (grid == 0) grid = dealiased_grid(J, g);
  if (grid < exact)
    throw AliasingError("fourier_g: grid of " + std::to_string(grid) + " points aliases; need " +
                        std::to_string(exact));
  const std::size_t M = grid;
  std::vector<cplx> cy(M), cyx(M), cv(M);
  for (int h = -J; h <= J; ++h) {
    const double lam = lambda_j(m, h);
    const cplx a = u.up(h), b = u.um(-h);
    cy[spectral::slot(h, M)] = (a + b) / (SQRT2 * lam);
    cyx[spectral::slot(h, M)] = I_UNIT * static_cast<double>(h) * (a + b) / (SQRT2 * lam);
    cv[spectral::slot(h, M)] = (a - b) / (I_UNIT * SQRT2);
  }
  const auto y = spectral::inverse(cy), yx = spectral::inverse(cyx), v = spectral::inverse(cv);
  const auto xs = spectral::abscissae(M);
  std::vector<cplx> gg(M);
  for (std::size_t n = 0; n < M; ++n) gg[n] = g.eval<cplx>(xs[n], y[n], yx[n], v[n]) / SQRT2;
  const auto cg = spectral::forward(gg);
  for (int j = -J; j <= J; ++j) {
    out.up(j) = cg[spectral::slot(j, M)];
    out.um(j) = cg[spectral::slot(-j, M)];
  }
  return out;
}

// ---------------------------------------------------------------- vector field form

namespace {

// Letters of the expansion: u+_h (z_h) and u-_h (zbar_h), encoded as 2*(h+J) + sign.
struct LetterTable {
  int J;
  double m;
  int id(bool plus, int h) const { return 2 * (h + J) + (plus ? 0 : 1); }
  bool plus_of(int id) const { return id % 2 == 0; }
  int mode_of(int id) const { return id / 2 - J; }
  int momentum_of(int id) const { return plus_of(id) ? mode_of(id) : -mode_of(id); }

  // Coefficient of the letter in y, y_x or v (slot 0, 1, 2).
  cplx coefficient(int slot, int id) const {
    const int h = mode_of(id);
    const bool plus = plus_of(id);
    const double lam = lambda_j(m, h);
    switch (slot) {
      case 0: return 1.0 / (SQRT2 * lam);
      case 1: return (plus ? 1.0 : -1.0) * I_UNIT * static_cast<double>(h) / (SQRT2 * lam);
      default: return (plus ? 1.0 : -1.0) / (I_UNIT * SQRT2);
    }
  }
};

struct ProductKey {
  std::vector<int> letters;  // sorted
  int momentum;
  bool operator==(const ProductKey&) const = default;
};

struct ProductHash {
  std::size_t operator()(const ProductKey& k) const {
    std::size_t h = std::hash<int>{}(k.momentum);
    for (int l : k.letters) h = h * 1000003u ^ std::hash<int>{}(l);
    return h;
  }
};

}  // namespace

VectorField tuc_field(double m, const NonlinearitySpec& g, const Truncation& trunc,
                      bool include_linear) {
  const SiteSet none;
  VectorField X(none, trunc);
  const int J = trunc.j_max;
  if (include_linear) {
    for (int j = -J; j <= J; ++j) {
      const double lam = lambda_j(m, j);
      MonomialKey kz = make_key(none, {Axis::z, j});
      kz.alpha[j] = 1;
      X.add(kz, -I_UNIT * lam);
      MonomialKey kb = make_key(none, {Axis::zbar, j});
      kb.beta[j] = 1;
      X.add(kb, I_UNIT * lam);
    }
  }

  const LetterTable table{J, m};
  const int n_letters = 2 * (2 * J + 1);
  std::unordered_map<ProductKey, cplx, ProductHash> acc;

  for (const auto& term : g.terms()) {
    if (term.degree() - 1 > trunc.d_max) continue;
    std::vector<std::pair<int, cplx>> xshift;
    switch (term.x_kind) {
      case XFactor::none: xshift = {{0, 1.0}}; break;
      case XFactor::cos: xshift = {{term.x_freq, 0.5}, {-term.x_freq, 0.5}}; break;
      case XFactor::sin:
        xshift = {{term.x_freq, 1.0 / (2.0 * I_UNIT)}, {-term.x_freq, -1.0 / (2.0 * I_UNIT)}};
        break;
    }
    std::vector<int> slots;
    slots.insert(slots.end(), term.y_pow, 0);
    slots.insert(slots.end(), term.yx_pow, 1);
    slots.insert(slots.end(), term.v_pow, 2);

    std::vector<int> chosen(slots.size());
    // Depth-first over ordered letter choices; each ordered product is one term of
    // the expanded polynomial.
    auto recurse = [&](auto&& self, std::size_t depth, cplx coeff, int mom) -> void {
      if (depth == slots.size()) {
        std::vector<int> sorted = chosen;
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [shift, c] : xshift) {
          const int q = mom + shift;
          if (std::abs(q) > J) continue;
          acc[ProductKey{sorted, q}] += term.coeff * c * coeff;
        }
        return;
      }
      for (int id = 0; id < n_letters; ++id) {
        chosen[depth] = id;
        self(self, depth + 1, coeff * table.coefficient(slots[depth], id),
             mom + table.momentum_of(id));
      }
    };
    recurse(recurse, 0, cplx{1.0, 0.0}, 0);
  }

  for (const auto& [pk, c] : acc) {
    if (c == cplx{}) continue;
    const cplx gq = c / SQRT2;
    MonomialKey base = make_key(none, {Axis::z, 0});
    for (int id : pk.letters) {
      if (table.plus_of(id)) base.alpha[table.mode_of(id)] += 1;
      else base.beta[table.mode_of(id)] += 1;
    }
    MonomialKey kz = base;
    kz.component = {Axis::z, pk.momentum};
    X.add_truncated(kz, I_UNIT * gq);
    MonomialKey kb = base;
    kb.component = {Axis::zbar, -pk.momentum};
    X.add_truncated(kb, -I_UNIT * gq);
  }
  return X;
}

// ---------------------------------------------------------------- solutions and embeddings

QPSolution linear_solution(const ModelParams& params, int L) {
  params.validate();
  const auto& plus = params.sites.plus_sites();
  QPSolution sol(plus, params.xi, L, params.truncation.j_max);
  for (std::size_t s = 0; s < plus.size(); ++s) {
    const double lam = lambda_j(params.mass, plus[s]);
    sol.omega[s] = lam;
    std::vector<int> l(plus.size(), 0);
    l[s] = 1;
    if (plus[s] > sol.j_max) throw ConfigError("linear_solution: tangential site beyond J_max");
    sol.at(l, plus[s]) = std::sqrt(8.0 * params.xi[s]) / lam;
  }
  return sol;
}

ComplexState action_angle_embed(const ModelParams& params, const PhasePoint& point) {
  const SiteSet& sites = params.sites;
  if (point.x.size() != sites.n() || point.y.size() != sites.n())
    throw std::invalid_argument("action_angle_embed: point does not match the site set");
  const int J = params.truncation.j_max;
  ComplexState u(J);
  for (std::size_t s = 0; s < sites.n(); ++s) {
    const int j = sites.sites()[s];
    const double xi = params.xi_of(j);
    const cplx y = point.y[s];
    if (y.imag() != 0.0 || std::abs(y.real()) >= xi)
      throw DomainError("action_angle_embed: need real |y_j| < xi_|j|");
    const double rho = std::sqrt(xi + y.real());
    u.up(j) = std::polar(rho, point.x[s]);
    u.um(j) = std::polar(rho, -point.x[s]);
  }
  for (const auto& [j, v] : point.z) {
    if (sites.contains(j) || std::abs(j) > J)
      throw DomainError("action_angle_embed: normal coordinate outside the truncation");
    u.up(j) = v;
  }
  for (const auto& [j, v] : point.zbar) {
    if (sites.contains(j) || std::abs(j) > J)
      throw DomainError("action_angle_embed: normal coordinate outside the truncation");
    u.um(j) = v;
  }
  return u;
}

PhasePoint action_angle_extract(const ModelParams& params, const ComplexState& u) {
  const SiteSet& sites = params.sites;
  PhasePoint p;
  p.x.resize(sites.n());
  p.y.resize(sites.n());
  for (std::size_t s = 0; s < sites.n(); ++s) {
    const int j = sites.sites()[s];
    p.x[s] = std::arg(u.up(j));
    p.y[s] = (u.up(j) * u.um(j)).real() - params.xi_of(j);
  }
  for (int j = -u.j_max; j <= u.j_max; ++j) {
    if (sites.contains(j)) continue;
    p.z[j] = u.up(j);
    p.zbar[j] = u.um(j);
  }
  return p;
}

// ---------------------------------------------------------------- configuration

ModelParams model_params_from_json(const nlohmann::json& j) {
  try {
    ModelParams p;
    p.mass = j.value("mass", 1.0);
    p.sites = SiteSet(j.value("sites", std::vector<int>{1}));
    p.xi = j.value("xi", std::vector<double>(p.sites.plus_sites().size(), 1e-3));
    p.grid_N = j.value("grid_N", 256);
    if (j.contains("truncation")) {
      const auto& t = j.at("truncation");
      p.truncation.j_max = t.value("j_max", p.truncation.j_max);
      p.truncation.k_max = t.value("k_max", p.truncation.k_max);
      p.truncation.d_max = t.value("d_max", p.truncation.d_max);
    }
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

NonlinearitySpec nonlinearity_from_json(const nlohmann::json& j) {
  try {
    NonlinearitySpec g;
    g.leading = j.value("leading", true);
    for (const auto& t : j.value("hot", nlohmann::json::array())) {
      GTerm term;
      term.coeff = t.at("coeff").get<double>();
      term.y_pow = t.value("y", 0);
      term.yx_pow = t.value("yx", 0);
      term.v_pow = t.value("v", 0);
      const std::string kind = t.value("x", std::string("none"));
      if (kind == "cos") term.x_kind = XFactor::cos;
      else if (kind == "sin") term.x_kind = XFactor::sin;
      else if (kind != "none") throw ConfigError("nonlinearity: x must be none, cos or sin");
      term.x_freq = t.value("p", 0);
      if (term.y_pow < 0 || term.yx_pow < 0 || term.v_pow < 0)
        throw ConfigError("nonlinearity: exponents must be nonnegative");
      g.hot.push_back(term);
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("nonlinearity: ") + e.what());
  }
}

nlohmann::json to_json_value(const ModelParams& p) {
  return {{"mass", p.mass},
          {"sites", p.sites.plus_sites()},
          {"xi", p.xi},
          {"grid_N", p.grid_N},
          {"truncation",
           {{"j_max", p.truncation.j_max}, {"k_max", p.truncation.k_max}, {"d_max", p.truncation.d_max}}}};
}

nlohmann::json to_json_value(const NonlinearitySpec& g) {
  auto hot = nlohmann::json::array();
  for (const auto& t : g.hot) {
    const char* kind = t.x_kind == XFactor::cos ? "cos" : t.x_kind == XFactor::sin ? "sin" : "none";
    hot.push_back({{"coeff", t.coeff}, {"y", t.y_pow}, {"yx", t.yx_pow}, {"v", t.v_pow},
                   {"x", kind}, {"p", t.x_freq}});
  }
  return {{"leading", g.leading}, {"hot", hot}};
}

void write_field_csv(std::ostream& out, const FieldState& state) {
  const auto xs = spectral::abscissae(state.size());
  out << "x,y,v\n";
  char buf[96];
  for (std::size_t n = 0; n < state.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", xs[n], state.y[n], state.v[n]);
    out << buf;
  }
}

}  // namespace kamdnlw
