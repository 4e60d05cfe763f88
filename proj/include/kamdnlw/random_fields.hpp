#pragma once

// Random monomials, fields and phase points for property checks and sampling.

#include <random>

#include "kamdnlw/vf_algebra.hpp"

namespace kamdnlw::sampling {

struct GenOptions {
  int max_k = 2;         ///< |k|_1 bound of generated monomials
  int max_deg = 3;       ///< graded degree bound
  int max_normal = 2;    ///< number of normal factors
  int max_actions = 1;   ///< |i| bound
  int normal_range = 0;  ///< |j| bound for normal indices (0 = truncation j_max)
};

inline int pick(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int random_normal_site(std::mt19937_64& rng, const SiteSet& sites, int range) {
  for (;;) {
    const int j = pick(rng, -range, range);
    if (!sites.contains(j)) return j;
  }
}

/// A random structurally valid key within the truncation and the options.
inline MonomialKey random_key(std::mt19937_64& rng, const SiteSet& sites, const Truncation& trunc,
                              const GenOptions& opt = {}) {
  const int range = opt.normal_range > 0 ? opt.normal_range : trunc.j_max;
  for (;;) {
    MonomialKey key;
    key.k.assign(sites.n(), 0);
    key.i.assign(sites.n(), 0);
    const int axis = pick(rng, 0, 3);
    if (axis <= 1 && sites.n() == 0) continue;
    if (axis <= 1) {
      key.component = {static_cast<Axis>(axis), sites.sites()[pick(rng, 0, int(sites.n()) - 1)]};
    } else {
      key.component = {static_cast<Axis>(axis), random_normal_site(rng, sites, range)};
    }
    if (sites.n() > 0) {
      const int kb = pick(rng, 0, std::min(opt.max_k, trunc.k_max));
      for (int t = 0; t < kb; ++t) key.k[pick(rng, 0, int(sites.n()) - 1)] += pick(rng, 0, 1) ? 1 : -1;
      const int ib = pick(rng, 0, opt.max_actions);
      for (int t = 0; t < ib; ++t) ++key.i[pick(rng, 0, int(sites.n()) - 1)];
    }
    const int nn = pick(rng, 0, opt.max_normal);
    for (int t = 0; t < nn; ++t) {
      const int j = random_normal_site(rng, sites, range);
      (pick(rng, 0, 1) ? key.alpha : key.beta)[j] += 1;
    }
    if (l1(key.k) > trunc.k_max || degree(key) > std::min(opt.max_deg, trunc.d_max)) continue;
    return key;
  }
}

inline cplx random_coeff(std::mt19937_64& rng) { return {uniform(rng), uniform(rng)}; }

/// Coefficient obeying the real-coefficients property for the given slot.
inline cplx real_property_coeff(std::mt19937_64& rng, Axis axis) {
  const double v = uniform(rng);
  return axis == Axis::x ? cplx{v, 0.0} : cplx{0.0, v};
}

inline VectorField random_field(std::mt19937_64& rng, const SiteSet& sites, const Truncation& trunc,
                                int n_terms, const GenOptions& opt = {}) {
  VectorField X(sites, trunc);
  for (int t = 0; t < n_terms; ++t) X.add(random_key(rng, sites, trunc, opt), random_coeff(rng));
  return X;
}

/// Reversible field X - S X S; with real_coeffs the real-coefficients property holds too.
inline VectorField random_reversible(std::mt19937_64& rng, const SiteSet& sites,
                                     const Truncation& trunc, int n_terms, bool real_coeffs,
                                     const GenOptions& opt = {}) {
  VectorField X(sites, trunc);
  for (int t = 0; t < n_terms; ++t) {
    const MonomialKey key = random_key(rng, sites, trunc, opt);
    X.add(key, real_coeffs ? real_property_coeff(rng, key.component.axis) : random_coeff(rng));
  }
  return X - apply_involution(X);
}

/// A random point of the even subspace E (x_j = x_-j, y_j = y_-j, z_j = z_-j, zbar_j = zbar_-j).
inline PhasePoint random_point_in_E(std::mt19937_64& rng, const SiteSet& sites, int j_max,
                                    double scale = 0.5) {
  PhasePoint p;
  p.x.assign(sites.n(), 0.0);
  p.y.assign(sites.n(), cplx{});
  for (std::size_t s = 0; s < sites.n(); s += 2) {
    p.x[s] = p.x[s + 1] = uniform(rng, -3.2, 3.2);
    p.y[s] = p.y[s + 1] = scale * random_coeff(rng);
  }
  for (int j = 0; j <= j_max; ++j) {
    if (sites.contains(j)) continue;
    p.z[j] = p.z[-j] = scale * random_coeff(rng);
    p.zbar[j] = p.zbar[-j] = scale * random_coeff(rng);
  }
  return p;
}

}  // namespace kamdnlw::sampling
