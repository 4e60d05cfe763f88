#pragma once

// Diagonal normal forms N = omega d_x - i Omega_j z_j d_zj + i Omega_j zbar_j d_zbarj,
// homological equations, the third-order Birkhoff step for the wave equation,
// frequency asymptotics and Melnikov scans.

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kamdnlw/dnlw_model.hpp"
#include "kamdnlw/errors.hpp"
#include "kamdnlw/vf_algebra.hpp"

namespace kamdnlw {

class SymmetryViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NormalForm {
  SiteSet sites;
  double mass = 1.0;
  std::vector<double> xi;        ///< aligned with sites.plus_sites()
  std::vector<double> omega;     ///< over sites.sites(), omega_{-j} = omega_j
  std::map<int, double> Omega;   ///< normal modes |j| <= J
  Eigen::MatrixXd twist;         ///< d omega_{j_s} / d xi_t over I+
  double twist_condition = 0;    ///< 2-norm condition number of twist (inf if singular)
  double a_const = 0;

  /// First-order frequency slopes, so that frequencies at nearby xi can be
  /// recomputed with at(). Empty when unknown.
  std::map<int, std::vector<double>> omega_slope;  ///< site j -> d omega_j / d xi
  std::map<int, std::vector<double>> Omega_slope;  ///< normal j -> d Omega_j / d xi

  /// Cubic terms with a divisor below the floor that are not of the
  /// integrable form z_j |z_c|^2 (filled by birkhoff_third_order).
  std::vector<Monomial> near_resonances;

  /// Unperturbed frequencies lambda_j on sites and normal modes |j| <= j_max.
  static NormalForm linear(const SiteSet& sites, double mass, int j_max);

  /// Frequencies lambda + slope . xi (requires slopes).
  NormalForm at(const std::vector<double>& xi) const;
  double omega_of(int j) const;
};

/// N as a vector field on (nf.sites, trunc).
VectorField as_vector_field(const NormalForm& nf, const Truncation& trunc);

/// d with [N, m] = d m, read off the bracket. Throws ContractViolation if the
/// bracket is not proportional to m.
cplx ad_eigenvalue(const VectorField& N, const Monomial& m);
/// Closed form -i (omega.k - Omega.(alpha - beta) + sigma Omega_{j_v}), sigma = +1 on z,
/// -1 on zbar, 0 on x and y.
cplx divisor(const NormalForm& nf, const MonomialKey& key);

struct HomologicalSolution {
  VectorField F;
  VectorField resonant;
  VectorField skipped;  ///< small divisors outside the resonant families
};

/// Solves [N, F] + P - resonant - skipped = 0 term by term.
HomologicalSolution solve_homological(const NormalForm& N, const VectorField& P,
                                      double divisor_floor = 1e-8);

/// Third-order Birkhoff step for the cubic nonlinearity in complex coordinates.
/// Frequencies are evaluated at params.xi; slopes are kept for at().
NormalForm birkhoff_third_order(const ModelParams& params,
                                const NonlinearitySpec& g = NonlinearitySpec::cubic(),
                                double divisor_floor = 1e-8);

/// Whether the key is z_j |z_c|^2 d_zj or its conjugate (c may equal j).
bool is_integrable_cubic(const MonomialKey& key);

/// Resonant cubic part of the Birkhoff step (exposed for cross-checks).
VectorField birkhoff_resonant_cubic(const ModelParams& params, const NonlinearitySpec& g,
                                    double divisor_floor = 1e-8);

/// Adds the constant linear corrections of a symmetrized P to N:
/// omega_j += P^{x_j} at k = 0 and Omega_j += i P^{z_j, z_j}.
/// Throws SymmetryViolation if a correction is not real to 1e-12.
NormalForm frequency_correction(const VectorField& P, const NormalForm& N);

struct ToeplitzDecomposition {
  double T_value = 0;
  double tail = 0;                  ///< c in the fit T + c / j
  std::map<int, double> R_diag;
  std::pair<int, int> fit_window;   ///< indices used by the fit
  double sup_j_R = 0;               ///< sup over the window of |j R_jj|
  double fit_residual = 0;
  bool toeplitz = true;             ///< false if fit_residual exceeds the threshold
};

/// Fits P_jj = T + c/j on the upper half of [lo, hi]; needs at least 8 indices.
ToeplitzDecomposition toeplitz_decompose(const std::map<int, double>& P_diag, int lo, int hi,
                                         double threshold = 1e-6);

struct AsymptoticReport {
  double a_const = 0;
  double sup_j_r = 0;               ///< sup |j r_j| over the window
  std::map<int, double> residual;   ///< r_j = Omega_j - j - a - m/(2j)
  std::vector<double> tail;         ///< coefficients of (lo/j)^p, p = 1, 3, 5, 7, 9
};

/// Fits Omega_j - j - m/(2j) = a + sum_p b_p (lo/j)^p on [lo, hi] (>= 8 indices).
AsymptoticReport asymptotic_fit(const std::map<int, double>& Omega, double m, int lo, int hi);

struct MelnikovViolation {
  std::vector<int> k;  ///< over I+
  int i = 0;
  int j = 0;
  double value = 0;
};

struct MelnikovReport {
  double gamma = 0;
  double tau = 0;
  int k_max = 0;
  int j_max = 0;
  std::uint64_t checked = 0;
  std::vector<MelnikovViolation> violations;
  double scale = 0;     ///< box scale for density reports
  std::size_t samples = 0;
  double density = 1.0;
};

/// Checks |omega.k + Omega_i - Omega_j| >= gamma / (1 + |k|^tau) with k over I+,
/// 0 < |k|_1 <= K_max, and 0 <= i, j <= J_max normal, plus k = 0 with i != j.
MelnikovReport melnikov_check(const NormalForm& nf, double gamma, double tau, int k_max,
                              int j_max);
/// Fraction of sobol points xi in (0, scale]^|I+| whose frequencies nf.at(xi) pass
/// melnikov_check. nf must carry slopes.
MelnikovReport melnikov_density(const NormalForm& nf, double scale, std::size_t samples,
                                double gamma, double tau, int k_max, int j_max,
                                unsigned threads = 1);

/// Default tau = 2 (n + 1), n = |I|.
double default_tau(const SiteSet& sites);

std::string to_json(const NormalForm& nf);
/// scale,density
void write_density_csv(std::ostream& out, const std::vector<MelnikovReport>& reports);
/// j,Omega,residual
void write_asymptotics_csv(std::ostream& out, const std::map<int, double>& Omega,
                           const AsymptoticReport& fit);

}  // namespace kamdnlw
