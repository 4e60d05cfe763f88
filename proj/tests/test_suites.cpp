#include "doctest.h"
#include "kamdnlw/suites.hpp"

using namespace kamdnlw;

TEST_CASE("property suites report clean runs") {
  AlgebraSuiteOptions a;
  a.monomials = 100;
  a.bracket_trials = 4;
  a.penalization_trials = 20;
  const auto ar = algebra_suite(a);
  CHECK(ar.monomials == 100);
  CHECK(ar.key_mismatches == 0);
  CHECK(ar.adjoint_coeff_error <= 1e-12);
  CHECK(ar.jacobi_error <= 1e-10);
  CHECK(ar.penalization_violations == 0);

  SymmetrizationSuiteOptions s;
  s.fields = 3;
  s.points = 10;
  const auto sr = symmetrization_suite(s);
  CHECK(sr.points == 30);
  CHECK(sr.max_error < 1e-12);
  CHECK(sr.all_reversible);

  HomologicalSuiteOptions h;
  h.trials = 5;
  const auto hr = homological_suite(h);
  CHECK(hr.max_relative_residual <= 1e-10);
  CHECK(hr.diagonal_terms > 0);
  CHECK(hr.max_imag_diagonal <= 1e-12);

  // same seed, same report
  CHECK(to_json_value(homological_suite(h)) == to_json_value(hr));
}
