#pragma once

// Newton-Galerkin computation of quasi-periodic standing waves
//
//   y(t, x) = sum c_{l,j} cos(l . theta) cos(j x),   theta = omega t,
//
// with the primary harmonics c_{e_s, j_s} = sqrt(8 xi_s) / lambda_{j_s} pinned and
// the frequencies omega solved for.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kamdnlw/dnlw_model.hpp"
#include "kamdnlw/errors.hpp"
#include "kamdnlw/qp_solution.hpp"

namespace kamdnlw {

struct NewtonOptions {
  int L = 6;                   ///< torus harmonic cutoff used by the initial guess
  double tol = 1e-10;          ///< target for qp_residual
  int max_iter = 30;
  double fd_step = 1e-7;       ///< relative finite-difference step
  unsigned threads = 1;
};

struct NewtonResult {
  QPSolution sol;
  double residual = 0;            ///< qp_residual of sol
  double galerkin_residual = 0;   ///< max-norm of the projected equations
  int iterations = 0;
  std::vector<double> history;    ///< projected residual per iteration
  double quadratic_C = 0;         ///< max r_{n+1} / r_n^2 once r_n < r_star
  double r_star = 0;
};

/// Pointwise max-norm of y_tt - y_xx + m y - g on the (2L+1)^d x grid_N grid.
/// Accepts m >= 0.
double qp_residual(const QPSolution& sol, const ModelParams& params, const NonlinearitySpec& g);

/// Newton iteration from init (coefficients outside the pinned harmonics and the
/// frequencies are unknowns). Throws NumericalFailure on divergence, a singular
/// Jacobian, or a converged residual above tol.
NewtonResult newton_qp(const QPSolution& init, const ModelParams& params,
                       const NonlinearitySpec& g, const NewtonOptions& opt = {});

struct ContinuationPoint {
  std::vector<double> xi;
  QPSolution sol;
  double residual = 0;
  int iterations = 0;
};

struct ContinuationFailure {
  std::vector<double> xi;
  std::string reason;
};

struct ContinuationResult {
  std::vector<ContinuationPoint> path;
  std::vector<ContinuationFailure> failures;
};

/// Solves along xi_path, starting from linear_solution at the first point. A failed
/// step is retried from the midpoint, halving up to max_halvings times.
ContinuationResult continuation(const ModelParams& params, const NonlinearitySpec& g,
                                const std::vector<std::vector<double>>& xi_path,
                                const NewtonOptions& opt = {}, int max_halvings = 4);

/// xi,omega,residual,iters (xi_j and omega_j columns per site when |I+| > 1).
void write_continuation_csv(std::ostream& out, const ContinuationResult& result);

struct LyapunovOptions {
  double dt = 0;               ///< 0 picks half the grid spacing
  double renorm_interval = 1.0;
  std::size_t grid = 0;        ///< 0 picks a power of two above 4 (J_max + 1)
  std::uint64_t seed = 1;
};

struct LyapunovResult {
  double T = 0;
  double chi = 0;               ///< finite-time exponent chi(T)
  double scale = 0;             ///< log(T) / T
  double error_bar = 0;         ///< spread of chi(t) - C log(t)/t over the second half
  double fit_C = 0;             ///< least-squares C in chi(t) ~ C log(t) / t, t >= 10
  std::vector<std::pair<double, double>> history;  ///< (t, chi(t)) at renormalizations
  bool zero = false;            ///< |chi(T)| <= 5 log(T) / T
};

/// Largest finite-time exponent of the linearized equation along the torus flow of sol,
/// in the energy norm int dv^2 + dy_x^2 + m dy^2, with periodic renormalization.
LyapunovResult lyapunov_exponent(const QPSolution& sol, const ModelParams& params,
                                 const NonlinearitySpec& g, double T,
                                 const LyapunovOptions& opt = {});

}  // namespace kamdnlw
