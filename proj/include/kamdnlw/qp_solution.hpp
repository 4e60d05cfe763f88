#pragma once

// Quasi-periodic standing waves in the even-even basis
//
//   y(t, x) = sum_{l, j} c_{l,j} cos(l . omega t) cos(j x),
//
// l ranging over a half lattice of Z^d (d = |I+|), |l|_1 <= L, 0 <= j <= J.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace kamdnlw {

/// Harmonics l in Z^d with |l|_1 <= L, one representative of each pair {l, -l}
/// (first nonzero entry positive). The zero harmonic comes first.
class TorusBasis {
 public:
  TorusBasis() = default;
  TorusBasis(int dim, int L);

  int dim() const { return dim_; }
  int L() const { return L_; }
  std::size_t size() const { return harmonics_.size(); }
  const std::vector<int>& operator[](std::size_t r) const { return harmonics_[r]; }
  const std::vector<std::vector<int>>& harmonics() const { return harmonics_; }
  /// Row of l or of -l.
  std::optional<std::size_t> index_of(const std::vector<int>& l) const;

 private:
  int dim_ = 0;
  int L_ = 0;
  std::vector<std::vector<int>> harmonics_;
};

struct QPSolution {
  std::vector<int> sites;     ///< I+
  std::vector<double> xi;     ///< amplitudes, aligned with sites
  std::vector<double> omega;  ///< frequencies omega_inf, aligned with sites
  TorusBasis basis;
  int j_max = 0;
  Eigen::MatrixXd coeffs;     ///< basis.size() x (j_max + 1)

  QPSolution() = default;
  QPSolution(std::vector<int> sites, std::vector<double> xi, int L, int j_max);

  double& at(const std::vector<int>& l, int j);
  double at(const std::vector<int>& l, int j) const;

  /// y, y_t, y_x at angles theta (theta_s = omega_s t on the flow) and position x.
  struct Sample {
    double y = 0, y_t = 0, y_x = 0;
  };
  Sample at_angles(const std::vector<double>& theta, double x) const;
  Sample at_time(double t, double x) const;

  /// Grid samples of (y, v = y_t) at time t on an N-point periodic grid.
  std::pair<std::vector<double>, std::vector<double>> grid_state(double t, std::size_t N) const;
};

std::string to_json(const QPSolution& sol);
QPSolution qp_solution_from_json(const std::string& text);

}  // namespace kamdnlw
