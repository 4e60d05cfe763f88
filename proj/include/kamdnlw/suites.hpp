#pragma once

// Randomized property suites over the vector-field algebra and the homological
// solver. Each returns the worst observed errors so callers pick their own gates.

#include <cstdint>

#include "json.hpp"
#include "kamdnlw/vf_algebra.hpp"

namespace kamdnlw {

struct AlgebraSuiteOptions {
  std::uint64_t seed = 1;
  std::vector<int> plus_sites{1, 3};
  Truncation trunc{16, 6, 3};
  int monomials = 500;
  int bracket_trials = 20;
  int penalization_trials = 100;
};

struct AlgebraSuiteReport {
  int monomials = 0;
  int key_mismatches = 0;         ///< [m, X_M] not supported on the key of m
  double adjoint_coeff_error = 0;
  int bracket_trials = 0;
  double antisymmetry_error = 0;
  double jacobi_error = 0;
  int penalization_trials = 0;
  int penalization_violations = 0;
  double seconds = 0;
};

AlgebraSuiteReport algebra_suite(const AlgebraSuiteOptions& opt = {});

struct SymmetrizationSuiteOptions {
  std::uint64_t seed = 2;
  std::vector<int> plus_sites{1};
  Truncation trunc{6, 4, 3};
  int fields = 20;
  int points = 200;  ///< per field
};

struct SymmetrizationSuiteReport {
  int fields = 0;
  int points = 0;
  double max_error = 0;  ///< max |evaluate(X, u) - evaluate(symmetrize(X), u)| over u in E
  bool all_reversible = true;
};

SymmetrizationSuiteReport symmetrization_suite(const SymmetrizationSuiteOptions& opt = {});

struct HomologicalSuiteOptions {
  std::uint64_t seed = 3;
  std::vector<int> plus_sites{1, 3};
  Truncation trunc{16, 4, 3};
  double mass = 1.0;
  int trials = 50;
  int terms = 30;
};

struct HomologicalSuiteReport {
  int trials = 0;
  double max_relative_residual = 0;  ///< |[N,F] + P - resonant - skipped| / |P| in the majorant norm
  double max_imag_diagonal = 0;      ///< max |Im(i P^{z_j, z_j})| over resonant diagonal terms
  int diagonal_terms = 0;
  int skipped_terms = 0;
};

HomologicalSuiteReport homological_suite(const HomologicalSuiteOptions& opt = {});

nlohmann::json to_json_value(const AlgebraSuiteReport& r);
nlohmann::json to_json_value(const SymmetrizationSuiteReport& r);
nlohmann::json to_json_value(const HomologicalSuiteReport& r);

}  // namespace kamdnlw
