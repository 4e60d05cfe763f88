#include "kamdnlw/vf_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <set>

namespace kamdnlw {

namespace {

constexpr cplx I_UNIT{0.0, 1.0};

std::string describe(const MonomialKey& key) { return format_term(key, cplx{1.0, 0.0}); }

int involution_sign(Axis a) { return a == Axis::x ? -1 : 1; }

double japanese(int j) { return std::max(1.0, std::abs(static_cast<double>(j))); }

// Scalar part c e^{ik.x} y^i z^alpha zbar^beta of a monomial.
struct ScalarMonomial {
  cplx coeff;
  std::vector<int> k;
  std::vector<int> i;
  ExponentMap alpha;
  ExponentMap beta;
};

bool decrement(ExponentMap& e, int j) {
  auto it = e.find(j);
  if (it == e.end()) return false;
  if (--it->second == 0) e.erase(it);
  return true;
}

// d f / d w for the coordinate w named by a component slot.
std::optional<ScalarMonomial> derivative(const ScalarMonomial& f, const Component& w,
                                         const SiteSet& sites) {
  ScalarMonomial d = f;
  switch (w.axis) {
    case Axis::x: {
      const auto idx = *sites.index_of(w.index);
      if (f.k[idx] == 0) return std::nullopt;
      d.coeff *= I_UNIT * static_cast<double>(f.k[idx]);
      return d;
    }
    case Axis::y: {
      const auto idx = *sites.index_of(w.index);
      if (f.i[idx] == 0) return std::nullopt;
      d.coeff *= static_cast<double>(f.i[idx]);
      --d.i[idx];
      return d;
    }
    case Axis::z: {
      auto it = f.alpha.find(w.index);
      if (it == f.alpha.end()) return std::nullopt;
      d.coeff *= static_cast<double>(it->second);
      decrement(d.alpha, w.index);
      return d;
    }
    case Axis::zbar: {
      auto it = f.beta.find(w.index);
      if (it == f.beta.end()) return std::nullopt;
      d.coeff *= static_cast<double>(it->second);
      decrement(d.beta, w.index);
      return d;
    }
  }
  return std::nullopt;
}

ScalarMonomial scalar_of(const MonomialKey& key, cplx c) {
  return ScalarMonomial{c, key.k, key.i, key.alpha, key.beta};
}

MonomialKey product_key(const ScalarMonomial& a, const ScalarMonomial& b, Component target) {
  MonomialKey out;
  out.component = target;
  out.k.resize(a.k.size());
  out.i.resize(a.i.size());
  for (std::size_t s = 0; s < a.k.size(); ++s) {
    out.k[s] = a.k[s] + b.k[s];
    out.i[s] = a.i[s] + b.i[s];
  }
  out.alpha = a.alpha;
  for (auto [j, e] : b.alpha) out.alpha[j] += e;
  out.beta = a.beta;
  for (auto [j, e] : b.beta) out.beta[j] += e;
  return out;
}

cplx ipow(cplx base, int e) {
  cplx r{1.0, 0.0};
  for (int t = 0; t < e; ++t) r *= base;
  return r;
}

}  // namespace

// ---------------------------------------------------------------- SiteSet

SiteSet::SiteSet(std::vector<int> plus_sites) : plus_(std::move(plus_sites)) {
  std::sort(plus_.begin(), plus_.end());
  if (std::adjacent_find(plus_.begin(), plus_.end()) != plus_.end())
    throw std::invalid_argument("SiteSet: duplicate tangential site");
  for (int j : plus_) {
    if (j <= 0) throw std::invalid_argument("SiteSet: tangential sites must be positive");
    sites_.push_back(j);
    sites_.push_back(-j);
  }
}

bool SiteSet::contains(int j) const { return index_of(j).has_value(); }

std::optional<std::size_t> SiteSet::index_of(int j) const {
  auto it = std::find(sites_.begin(), sites_.end(), j);
  if (it == sites_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - sites_.begin());
}

// ---------------------------------------------------------------- keys

MonomialKey make_key(const SiteSet& sites, Component component) {
  MonomialKey key;
  key.component = component;
  key.k.assign(sites.n(), 0);
  key.i.assign(sites.n(), 0);
  return key;
}

int l1(const std::vector<int>& v) {
  return std::accumulate(v.begin(), v.end(), 0, [](int acc, int x) { return acc + std::abs(x); });
}

int total(const ExponentMap& e) {
  int t = 0;
  for (auto [j, p] : e) t += p;
  return t;
}

int degree(const MonomialKey& key) {
  static constexpr int kAxisDegree[] = {0, 2, 1, 1};
  return 2 * l1(key.i) + total(key.alpha) + total(key.beta) -
         kAxisDegree[static_cast<int>(key.component.axis)];
}

void validate_key(const MonomialKey& key, const SiteSet& sites, const Truncation* trunc) {
  if (key.k.size() != sites.n() || key.i.size() != sites.n())
    throw InvalidMonomial("monomial index vectors do not match the site set: " + describe(key));
  for (int e : key.i)
    if (e < 0) throw InvalidMonomial("negative action exponent: " + describe(key));
  auto check_normal = [&](int j, const char* what) {
    if (sites.contains(j))
      throw InvalidMonomial(std::string(what) + " index on a tangential site: " + describe(key));
    if (trunc && std::abs(j) > trunc->j_max)
      throw InvalidMonomial(std::string(what) + " index beyond J_max: " + describe(key));
  };
  for (auto [j, e] : key.alpha) {
    if (e <= 0) throw InvalidMonomial("non-positive alpha exponent: " + describe(key));
    check_normal(j, "alpha");
  }
  for (auto [j, e] : key.beta) {
    if (e <= 0) throw InvalidMonomial("non-positive beta exponent: " + describe(key));
    check_normal(j, "beta");
  }
  switch (key.component.axis) {
    case Axis::x:
    case Axis::y:
      if (!sites.contains(key.component.index))
        throw InvalidMonomial("x/y component on a normal site: " + describe(key));
      break;
    case Axis::z:
    case Axis::zbar:
      check_normal(key.component.index, "component");
      break;
  }
  if (trunc) {
    if (l1(key.k) > trunc->k_max)
      throw InvalidMonomial("Fourier index beyond K_max: " + describe(key));
    if (degree(key) > trunc->d_max)
      throw InvalidMonomial("degree beyond d_max: " + describe(key));
  }
}

long momentum(const MonomialKey& key, const SiteSet& sites) {
  validate_key(key, sites);
  long pi = 0;
  for (std::size_t s = 0; s < sites.n(); ++s) pi += static_cast<long>(sites.sites()[s]) * key.k[s];
  for (auto [j, e] : key.alpha) pi += static_cast<long>(e) * j;
  for (auto [j, e] : key.beta) pi -= static_cast<long>(e) * j;
  if (key.component.axis == Axis::z) pi -= key.component.index;
  if (key.component.axis == Axis::zbar) pi += key.component.index;
  return pi;
}

void NormContext::validate() const {
  if (!(s > 0) || !(r > 0) || !(p > 0.5) || a_weight < 0 || a_space < 0)
    throw std::invalid_argument("NormContext: need s, r > 0, p > 1/2, a_weight, a_space >= 0");
}

double Tangent::max_abs_diff(const Tangent& other) const {
  double m = 0;
  for (std::size_t s = 0; s < std::min(x.size(), other.x.size()); ++s)
    m = std::max(m, std::abs(x[s] - other.x[s]));
  for (std::size_t s = 0; s < std::min(y.size(), other.y.size()); ++s)
    m = std::max(m, std::abs(y[s] - other.y[s]));
  auto cmp = [&m](const std::map<int, cplx>& a, const std::map<int, cplx>& b) {
    std::set<int> keys;
    for (auto& [j, v] : a) keys.insert(j);
    for (auto& [j, v] : b) keys.insert(j);
    for (int j : keys) {
      auto ia = a.find(j);
      auto ib = b.find(j);
      cplx va = ia == a.end() ? cplx{} : ia->second;
      cplx vb = ib == b.end() ? cplx{} : ib->second;
      m = std::max(m, std::abs(va - vb));
    }
  };
  cmp(z, other.z);
  cmp(zbar, other.zbar);
  return m;
}

// ---------------------------------------------------------------- VectorField

VectorField::VectorField(SiteSet sites, Truncation trunc)
    : sites_(std::move(sites)), trunc_(trunc) {}

void VectorField::add(const MonomialKey& key, cplx c) {
  validate_key(key, sites_, &trunc_);
  if (c == cplx{}) return;
  auto [it, inserted] = terms_.try_emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (it->second == cplx{}) terms_.erase(it);
  }
}

bool VectorField::add_truncated(const MonomialKey& key, cplx c) {
  if (l1(key.k) > trunc_.k_max || degree(key) > trunc_.d_max) return false;
  add(key, c);
  return true;
}

cplx VectorField::coefficient(const MonomialKey& key) const {
  auto it = terms_.find(key);
  return it == terms_.end() ? cplx{} : it->second;
}

void VectorField::require_compatible(const VectorField& other) const {
  if (!(sites_ == other.sites_))
    throw ContractViolation("vector fields live on different site sets");
}

VectorField& VectorField::operator+=(const VectorField& other) {
  require_compatible(other);
  for (const auto& [key, c] : other.terms_) add(key, c);
  return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
  require_compatible(other);
  for (const auto& [key, c] : other.terms_) add(key, -c);
  return *this;
}

VectorField& VectorField::operator*=(cplx c) {
  if (c == cplx{}) {
    terms_.clear();
    return *this;
  }
  for (auto& [key, v] : terms_) v *= c;
  std::erase_if(terms_, [](const auto& kv) { return kv.second == cplx{}; });
  return *this;
}

double VectorField::max_coeff() const {
  double m = 0;
  for (const auto& [key, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

double VectorField::max_coeff_diff(const VectorField& other) const {
  double m = 0;
  for (const auto& [key, c] : terms_) m = std::max(m, std::abs(c - other.coefficient(key)));
  for (const auto& [key, c] : other.terms_)
    if (!terms_.contains(key)) m = std::max(m, std::abs(c));
  return m;
}

// ---------------------------------------------------------------- bracket

BracketResult lie_bracket_report(const VectorField& X, const VectorField& Y) {
  if (!(X.sites() == Y.sites()))
    throw ContractViolation("lie_bracket: mismatched site sets");
  if (!(X.truncation() == Y.truncation()))
    throw ContractViolation("lie_bracket: mismatched truncations");
  const SiteSet& sites = X.sites();

  VectorField::TermMap acc;
  auto accumulate = [&](const ScalarMonomial& lhs, const ScalarMonomial& rhs, Component target,
                        double sign) {
    MonomialKey key = product_key(lhs, rhs, target);
    acc[key] += sign * lhs.coeff * rhs.coeff;
  };

  for (const auto& [ka, ca] : X.terms()) {
    const ScalarMonomial fa = scalar_of(ka, ca);
    for (const auto& [kb, cb] : Y.terms()) {
      const ScalarMonomial fb = scalar_of(kb, cb);
      // (DX) Y: derivative of f_a along the slot of Y, lands in the slot of X.
      if (auto d = derivative(fa, kb.component, sites)) accumulate(*d, fb, ka.component, 1.0);
      // (DY) X
      if (auto d = derivative(fb, ka.component, sites)) accumulate(*d, fa, kb.component, -1.0);
    }
  }

  BracketResult out{X.empty_like(), 0.0};
  const NormContext unit{};
  for (const auto& [key, c] : acc) {
    if (c == cplx{}) continue;
    if (!out.field.add_truncated(key, c)) out.discarded_mass += majorant_term(key, c, sites, unit);
  }
  return out;
}

VectorField lie_bracket(const VectorField& X, const VectorField& Y) {
  return lie_bracket_report(X, Y).field;
}

VectorField momentum_field(const SiteSet& sites, const Truncation& trunc) {
  VectorField XM(sites, trunc);
  for (int j : sites.sites()) XM.add(make_key(sites, {Axis::x, j}), static_cast<double>(j));
  for (int j = -trunc.j_max; j <= trunc.j_max; ++j) {
    if (j == 0 || sites.contains(j)) continue;
    MonomialKey kz = make_key(sites, {Axis::z, j});
    kz.alpha[j] = 1;
    XM.add(kz, I_UNIT * static_cast<double>(j));
    MonomialKey kb = make_key(sites, {Axis::zbar, j});
    kb.beta[j] = 1;
    XM.add(kb, -I_UNIT * static_cast<double>(j));
  }
  return XM;
}

// ---------------------------------------------------------------- symmetries

VectorField apply_involution(const VectorField& X) {
  const SiteSet& sites = X.sites();
  VectorField out = X.empty_like();
  for (const auto& [key, c] : X.terms()) {
    MonomialKey img;
    img.k.assign(sites.n(), 0);
    img.i.assign(sites.n(), 0);
    for (std::size_t s = 0; s < sites.n(); ++s) {
      img.k[SiteSet::partner(s)] = -key.k[s];
      img.i[SiteSet::partner(s)] = key.i[s];
    }
    for (auto [j, e] : key.alpha) img.beta[-j] = e;
    for (auto [j, e] : key.beta) img.alpha[-j] = e;
    const int j = key.component.index;
    switch (key.component.axis) {
      case Axis::x: img.component = {Axis::x, -j}; break;
      case Axis::y: img.component = {Axis::y, -j}; break;
      case Axis::z: img.component = {Axis::zbar, -j}; break;
      case Axis::zbar: img.component = {Axis::z, -j}; break;
    }
    out.add(img, static_cast<double>(involution_sign(key.component.axis)) * c);
  }
  return out;
}

bool check_reversible(const VectorField& X, double tol) {
  return (apply_involution(X) + X).max_coeff() <= tol;
}

bool check_real_coefficients(const VectorField& X, double tol) {
  for (const auto& [key, c] : X.terms()) {
    const double off = key.component.axis == Axis::x ? c.imag() : c.real();
    if (std::abs(off) > tol) return false;
  }
  return true;
}

bool is_odd_index(const std::vector<int>& k) {
  for (std::size_t s = 0; s + 1 < k.size(); s += 2)
    if (k[s] + k[s + 1] != 0) return false;
  return true;
}

namespace {

bool single_exponent_pm(const ExponentMap& e, int j) {
  if (e.size() != 1) return false;
  auto [idx, p] = *e.begin();
  return p == 1 && (idx == j || idx == -j);
}

}  // namespace

bool in_symmetrization_family(const MonomialKey& key, const SiteSet& sites) {
  (void)sites;
  if (!is_odd_index(key.k)) return false;
  const int j = key.component.index;
  switch (key.component.axis) {
    case Axis::x:
      return l1(key.i) == 0 && key.alpha.empty() && key.beta.empty();
    case Axis::y:
      return l1(key.i) <= 1 && key.alpha.empty() && key.beta.empty();
    case Axis::z:
      return l1(key.i) == 0 && key.beta.empty() && single_exponent_pm(key.alpha, j);
    case Axis::zbar:
      return l1(key.i) == 0 && key.alpha.empty() && single_exponent_pm(key.beta, j);
  }
  return false;
}

MonomialKey symmetrized_key(const MonomialKey& key, const SiteSet& sites) {
  if (!in_symmetrization_family(key, sites)) return key;
  MonomialKey out = key;
  std::fill(out.k.begin(), out.k.end(), 0);
  const int j = key.component.index;
  if (key.component.axis == Axis::z) out.alpha = {{j, 1}};
  if (key.component.axis == Axis::zbar) out.beta = {{j, 1}};
  return out;
}

VectorField symmetrize(const VectorField& X) {
  VectorField out = X.empty_like();
  for (const auto& [key, c] : X.terms()) out.add(symmetrized_key(key, X.sites()), c);
  return out;
}

VectorField project_momentum(const VectorField& X, long K, MomentumPart part) {
  if (K < 0) throw std::invalid_argument("project_momentum: K must be nonnegative");
  VectorField out = X.empty_like();
  for (const auto& [key, c] : X.terms()) {
    const bool high = std::labs(momentum(key, X.sites())) >= K;
    if (high == (part == MomentumPart::high)) out.add(key, c);
  }
  return out;
}

// ---------------------------------------------------------------- norms

double majorant_term(const MonomialKey& key, cplx c, const SiteSet& sites,
                     const NormContext& ctx) {
  const double pi = std::abs(static_cast<double>(momentum(key, sites)));
  double w = std::exp(ctx.a_weight * pi) * std::abs(c) * std::exp(l1(key.k) * ctx.s) *
             std::pow(ctx.r, 2.0 * l1(key.i));
  auto normal_weight = [&ctx](int j) {
    return ctx.r * std::exp(-ctx.a_space * std::abs(j)) * std::pow(japanese(j), -ctx.p);
  };
  for (auto [j, e] : key.alpha) w *= std::pow(normal_weight(j), e);
  for (auto [j, e] : key.beta) w *= std::pow(normal_weight(j), e);
  switch (key.component.axis) {
    case Axis::x: w /= ctx.s; break;
    case Axis::y: w /= ctx.r * ctx.r; break;
    case Axis::z:
    case Axis::zbar: w /= normal_weight(key.component.index); break;
  }
  return w;
}

double majorant_norm(const VectorField& X, const NormContext& ctx) {
  ctx.validate();
  double sum = 0;
  for (const auto& [key, c] : X.terms()) sum += majorant_term(key, c, X.sites(), ctx);
  return sum;
}

// ---------------------------------------------------------------- evaluation

Tangent evaluate(const VectorField& X, const PhasePoint& point) {
  const SiteSet& sites = X.sites();
  const std::size_t n = sites.n();
  if (point.x.size() != n || point.y.size() != n)
    throw InvalidMonomial("evaluate: point dimension does not match the site set");
  auto check = [&](const std::map<int, cplx>& m) {
    for (const auto& [j, v] : m)
      if (sites.contains(j) || std::abs(j) > X.truncation().j_max)
        throw InvalidMonomial("evaluate: point has a normal coordinate outside the truncation");
  };
  check(point.z);
  check(point.zbar);
  auto lookup = [](const std::map<int, cplx>& m, int j) {
    auto it = m.find(j);
    return it == m.end() ? cplx{} : it->second;
  };

  Tangent out;
  out.x.assign(n, cplx{});
  out.y.assign(n, cplx{});
  for (const auto& [key, c] : X.terms()) {
    double phase = 0;
    for (std::size_t s = 0; s < n; ++s) phase += key.k[s] * point.x[s];
    cplx v = c * std::polar(1.0, phase);
    for (std::size_t s = 0; s < n; ++s) v *= ipow(point.y[s], key.i[s]);
    for (auto [j, e] : key.alpha) v *= ipow(lookup(point.z, j), e);
    for (auto [j, e] : key.beta) v *= ipow(lookup(point.zbar, j), e);
    const int j = key.component.index;
    switch (key.component.axis) {
      case Axis::x: out.x[*sites.index_of(j)] += v; break;
      case Axis::y: out.y[*sites.index_of(j)] += v; break;
      case Axis::z: out.z[j] += v; break;
      case Axis::zbar: out.zbar[j] += v; break;
    }
  }
  return out;
}

}  // namespace kamdnlw
