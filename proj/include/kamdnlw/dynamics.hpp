#pragma once

// Pseudo-spectral time stepping of y_t = v, v_t = y_xx - m y + g(x, y, y_x, v) on the
// periodic grid, and the Lyapunov-functional diagnostics used to rule out
// quasi-periodic motion (M = int y_x v, H = int v^2/2 + y_x^2/2 + m y^2/2 - F(y)).

#include <iosfwd>
#include <vector>

#include "kamdnlw/dnlw_model.hpp"
#include "kamdnlw/errors.hpp"
#include "kamdnlw/qp_solution.hpp"

namespace kamdnlw {

struct Diagnostics {
  double energy = 0;   ///< int v^2 + y_x^2 + m y^2
  double M = 0;
  double H = 0;
  double mean = 0;     ///< spatial mean of y
  double meanvel = 0;  ///< spatial mean of v
};

struct IntegrateOptions {
  double cfl = 0.8;                 ///< dt <= cfl * dx
  std::size_t store_every = 1;
  double blow_up_threshold = 1e6;   ///< on max |v|
  double adapt_c = 0.05;            ///< dt is cut to adapt_c / max|v| when smaller than dt
  /// y-only part f of g used for F in H (F(0) = 0). Defaults to the x-free,
  /// y-only terms of g when left empty.
  std::vector<GTerm> potential;
};

struct Trajectory {
  double mass = 0;
  std::vector<double> times;
  std::vector<FieldState> states;
  std::vector<Diagnostics> diagnostics;
  std::vector<double> error_estimates;  ///< step-doubling estimate of each stored step
  bool blow_up = false;
  double blow_up_time = 0;
  bool uniform = true;                  ///< no adaptive step was taken
};

/// Classical RK4 with spectral derivatives and pointwise products. Stops early with
/// the blow-up flag when max|v| exceeds the threshold. Throws ConfigError if
/// dt > cfl * dx or the grid is not a power of two.
Trajectory integrate(const FieldState& state0, const NonlinearitySpec& g, double m, double T,
                     double dt, const IntegrateOptions& opt = {});

/// The y-only, x-independent terms of g.
NonlinearitySpec potential_part(const NonlinearitySpec& g);

double lyapunov_M(const FieldState& state);
/// H with F the antiderivative of f (f must contain only y-powers).
double lyapunov_H(const FieldState& state, const NonlinearitySpec& f, double m = 0);
Diagnostics diagnostics(const FieldState& state, const NonlinearitySpec& f, double m);

/// int y_x^{p+1} and int v^{p+1} by spectral quadrature.
double flux_M(const FieldState& state, int p);
double flux_H(const FieldState& state, int p);

struct IdentityReport {
  std::vector<double> times;
  std::vector<double> numeric;  ///< 5-point centered difference of the functional
  std::vector<double> flux;
  double max_error = 0;
  double max_flux = 0;
  bool monotone = true;         ///< nondecreasing within 10x the step-doubling estimate
  double worst_decrease = 0;
};

/// dM/dt against int y_x^{p+1} at the interior stored times (uniform grid required).
IdentityReport dM_dt_identity(const Trajectory& traj, int p);
/// dH/dt against int v^{p+1}, with F built from f.
IdentityReport dH_dt_identity(const Trajectory& traj, int p, const NonlinearitySpec& f);

/// Centered-difference dM/dt and dH/dt at a single state, from RK4 steps of size h
/// forward and backward.
double dM_dt_at(const FieldState& state, const NonlinearitySpec& g, double m, double h);
double dH_dt_at(const FieldState& state, const NonlinearitySpec& g, const NonlinearitySpec& f,
                double m, double h);

struct BlowUpReport {
  double w0 = 0;                ///< initial mean velocity
  bool inconclusive = false;    ///< w0 <= 0: the comparison bound is degenerate
  bool flagged = false;
  double t_flag = 0;
  bool bound_holds = true;      ///< mean velocity >= w0 / (1 - w0 t) at every stored step
  double min_margin = 0;        ///< min of (observed - predicted) / predicted
  std::vector<double> times, observed, predicted;
};

BlowUpReport blow_up_certificate(const Trajectory& traj);

struct MeanAverageReport {
  int p = 0;
  int q = 0;
  double avg_yx_p = 0;   ///< time-space average of y_x^p
  double avg_yt_q = 0;   ///< time-space average of y_t^q
};

/// Torus-and-space average for a quasi-periodic candidate (angles on an n_theta^d grid).
MeanAverageReport mean_average_diagnostic(const QPSolution& sol, int p, int q,
                                          std::size_t n_theta = 64, std::size_t n_x = 64);
/// Trapezoidal time average over a stored trajectory.
MeanAverageReport mean_average_diagnostic(const Trajectory& traj, int p, int q);

/// t,energy,M,H,mean,meanvel,flag
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace kamdnlw
