#include "kamdnlw/suites.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "kamdnlw/normal_form.hpp"
#include "kamdnlw/random_fields.hpp"

namespace kamdnlw {

namespace {
const cplx I{0.0, 1.0};
}

AlgebraSuiteReport algebra_suite(const AlgebraSuiteOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(opt.seed);
  const SiteSet s(opt.plus_sites);
  AlgebraSuiteReport rep;

  const VectorField XM = momentum_field(s, opt.trunc);
  for (int t = 0; t < opt.monomials; ++t) {
    const MonomialKey key = sampling::random_key(rng, s, opt.trunc);
    const cplx c = sampling::random_coeff(rng);
    VectorField m(s, opt.trunc);
    m.add(key, c);
    const VectorField B = lie_bracket(m, XM);
    const long pi = momentum(key, s);
    const cplx expect = I * static_cast<double>(pi) * c;
    for (const auto& [k, v] : B.terms())
      if (!(k == key)) ++rep.key_mismatches;
    const double err = std::abs(B.coefficient(key) - expect) / (1.0 + std::abs(expect));
    rep.adjoint_coeff_error = std::max(rep.adjoint_coeff_error, err);
    ++rep.monomials;
  }

  // brackets of degree-2 fields stay below the truncation, so Jacobi is exact up to rounding
  const Truncation big{opt.trunc.j_max, 40, 40};
  sampling::GenOptions g;
  g.max_deg = 2;
  g.normal_range = 5;
  for (int t = 0; t < opt.bracket_trials; ++t) {
    const auto X = sampling::random_field(rng, s, big, 4, g);
    const auto Y = sampling::random_field(rng, s, big, 4, g);
    const auto Z = sampling::random_field(rng, s, big, 4, g);
    rep.antisymmetry_error =
        std::max(rep.antisymmetry_error, (lie_bracket(X, Y) + lie_bracket(Y, X)).max_coeff());
    const auto jac = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) +
                     lie_bracket(Z, lie_bracket(X, Y));
    rep.jacobi_error = std::max(rep.jacobi_error, jac.max_coeff());
    ++rep.bracket_trials;
  }

  const auto X = sampling::random_field(rng, s, opt.trunc, 30);
  for (int t = 0; t < opt.penalization_trials; ++t) {
    const long K = sampling::pick(rng, 0, 12);
    const double a = sampling::uniform(rng, 0.0, 2.0);
    const double a2 = sampling::uniform(rng, 0.0, a);
    NormContext c1{0.5, 0.7, a, 0.1, 1.0}, c2 = c1;
    c2.a_weight = a2;
    const double lhs = majorant_norm(project_momentum(X, K, MomentumPart::high), c2);
    if (lhs > std::exp(-static_cast<double>(K) * (a - a2)) * majorant_norm(X, c1) * (1 + 1e-14))
      ++rep.penalization_violations;
    ++rep.penalization_trials;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

SymmetrizationSuiteReport symmetrization_suite(const SymmetrizationSuiteOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  const SiteSet s(opt.plus_sites);
  sampling::GenOptions g;
  g.normal_range = std::min(4, opt.trunc.j_max);
  SymmetrizationSuiteReport rep;
  for (int f = 0; f < opt.fields; ++f) {
    const auto X = sampling::random_reversible(rng, s, opt.trunc, 8, true, g);
    const auto SX = symmetrize(X);
    rep.all_reversible = rep.all_reversible && check_reversible(SX);
    for (int p = 0; p < opt.points; ++p) {
      const auto u = sampling::random_point_in_E(rng, s, opt.trunc.j_max);
      rep.max_error = std::max(rep.max_error, evaluate(X, u).max_abs_diff(evaluate(SX, u)));
      ++rep.points;
    }
    ++rep.fields;
  }
  return rep;
}

HomologicalSuiteReport homological_suite(const HomologicalSuiteOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  const SiteSet sites(opt.plus_sites);
  const auto nf = NormalForm::linear(sites, opt.mass, opt.trunc.j_max);
  const auto N = as_vector_field(nf, opt.trunc);
  const NormContext ctx;
  HomologicalSuiteReport rep;
  for (int t = 0; t < opt.trials; ++t) {
    VectorField P = sampling::random_reversible(rng, sites, opt.trunc, opt.terms, true);
    // plant members of the resonant families so the diagonal check is never vacuous
    for (int r = 0; r < 3 && r <= opt.trunc.k_max / 2; ++r) {
      const int j = sampling::random_normal_site(rng, sites, opt.trunc.j_max);
      MonomialKey key = make_key(sites, {Axis::z, j});
      if (sites.n() >= 2) {
        key.k[0] = r;
        key.k[1] = -r;
      }
      key.alpha[r % 2 == 1 && sites.n() >= 2 ? -j : j] = 1;
      VectorField Q(sites, opt.trunc);
      Q.add(key, sampling::real_property_coeff(rng, Axis::z));
      P += Q - apply_involution(Q);
    }
    const auto sol = solve_homological(nf, P);
    const auto residual = lie_bracket(N, sol.F) + P - sol.resonant - sol.skipped;
    const double normP = majorant_norm(P, ctx);
    if (normP > 0)
      rep.max_relative_residual = std::max(rep.max_relative_residual, majorant_norm(residual, ctx) / normP);
    rep.skipped_terms += static_cast<int>(sol.skipped.size());
    const auto S = symmetrize(sol.resonant);
    for (const auto& [key, c] : S.terms()) {
      if (key.component.axis != Axis::z || l1(key.k) != 0) continue;
      if (key.alpha.size() == 1 && key.beta.empty() && key.alpha.begin()->first == key.component.index) {
        rep.max_imag_diagonal = std::max(rep.max_imag_diagonal, std::abs((I * c).imag()));
        ++rep.diagonal_terms;
      }
    }
    ++rep.trials;
  }
  return rep;
}

nlohmann::json to_json_value(const AlgebraSuiteReport& r) {
  return {{"monomials", r.monomials},
          {"key_mismatches", r.key_mismatches},
          {"adjoint_coeff_error", r.adjoint_coeff_error},
          {"bracket_trials", r.bracket_trials},
          {"antisymmetry_error", r.antisymmetry_error},
          {"jacobi_error", r.jacobi_error},
          {"penalization_trials", r.penalization_trials},
          {"penalization_violations", r.penalization_violations}};
}

nlohmann::json to_json_value(const SymmetrizationSuiteReport& r) {
  return {{"fields", r.fields},
          {"points", r.points},
          {"max_error", r.max_error},
          {"all_reversible", r.all_reversible}};
}

nlohmann::json to_json_value(const HomologicalSuiteReport& r) {
  return {{"trials", r.trials},
          {"max_relative_residual", r.max_relative_residual},
          {"max_imag_diagonal", r.max_imag_diagonal},
          {"diagonal_terms", r.diagonal_terms},
          {"skipped_terms", r.skipped_terms}};
}

}  // namespace kamdnlw
