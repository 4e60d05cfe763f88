#pragma once

// The derivative nonlinear wave equation
//
//   y_tt - y_xx + m y = g(x, y, y_x, y_t),   x in T = R / 2piZ,
//
// its complex coordinates u+- = (D y +- i v) / sqrt(2), D = sqrt(-d_xx + m), the
// Fourier form u+_j' = -i lambda_j u+_j + i g+_j, u-_j' = i lambda_j u-_j - i g-_j,
// and action-angle coordinates on the tangential sites.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "json.hpp"
#include "kamdnlw/errors.hpp"
#include "kamdnlw/qp_solution.hpp"
#include "kamdnlw/vf_algebra.hpp"

namespace kamdnlw {

/// sqrt(j^2 + m). Throws DomainError for m <= 0.
double lambda_j(double m, int j);

struct ModelParams {
  double mass = 1.0;
  SiteSet sites;
  std::vector<double> xi;  ///< aligned with sites.plus_sites()
  int grid_N = 256;
  Truncation truncation{32, 8, 3};

  /// m > 0, xi_j > 0, grid_N a power of two with grid_N >= 4 J_max.
  void validate() const;
  /// Amplitude of the tangential site |j|.
  double xi_of(int j) const;
};

enum class XFactor { none, cos, sin };

/// coeff * X(x) * y^y_pow * y_x^yx_pow * v^v_pow with X in {1, cos(p x), sin(p x)}.
struct GTerm {
  double coeff = 1.0;
  int y_pow = 0;
  int yx_pow = 0;
  int v_pow = 0;
  XFactor x_kind = XFactor::none;
  int x_freq = 0;

  int degree() const { return y_pow + yx_pow + v_pow; }
};

/// Polynomial nonlinearity: the leading cubic y y_x^2 (optional) plus extra terms.
/// Parity is not enforced here; see check_g_symmetries.
struct NonlinearitySpec {
  bool leading = true;
  std::vector<GTerm> hot;

  static NonlinearitySpec zero() { return {false, {}}; }
  static NonlinearitySpec cubic() { return {true, {}}; }
  static NonlinearitySpec of(std::vector<GTerm> terms) { return {false, std::move(terms)}; }

  std::vector<GTerm> terms() const;
  bool is_zero() const { return terms().empty(); }
  int max_degree() const;
  int max_x_freq() const;

  template <class T>
  T eval(double x, T y, T yx, T v) const;

  struct Partials {
    double g = 0, dy = 0, dyx = 0, dv = 0;
  };
  Partials partials(double x, double y, double yx, double v) const;
};

struct SymmetryReport {
  bool even_in_v = false;      ///< g(x, y, y_x, -v) = g(x, y, y_x, v)
  bool parity = false;         ///< g(-x, y, -y_x, v) = g(x, y, y_x, v)
  bool quadratic = false;      ///< g and its first derivatives vanish at 0
  double even_in_v_defect = 0;
  double parity_defect = 0;
};

SymmetryReport check_g_symmetries(const NonlinearitySpec& g, std::uint64_t seed = 1,
                                  int samples = 100);

/// Real grid samples of (y, v) on x_n = 2 pi n / N.
struct FieldState {
  std::vector<double> y;
  std::vector<double> v;

  std::size_t size() const { return y.size(); }
};

/// Fourier coefficients u+_j, u-_j for |j| <= j_max, with
/// u+ = sum u+_j e^{ijx} and u- = sum u-_j e^{-ijx}.
struct ComplexState {
  int j_max = 0;
  std::vector<cplx> plus;
  std::vector<cplx> minus;

  explicit ComplexState(int j_max_ = 0)
      : j_max(j_max_), plus(2 * j_max_ + 1), minus(2 * j_max_ + 1) {}
  cplx& up(int j) { return plus[static_cast<std::size_t>(j + j_max)]; }
  cplx& um(int j) { return minus[static_cast<std::size_t>(j + j_max)]; }
  cplx up(int j) const { return plus[static_cast<std::size_t>(j + j_max)]; }
  cplx um(int j) const { return minus[static_cast<std::size_t>(j + j_max)]; }
};

/// Grid state to complex coordinates. Keeps |j| < N/2; the Nyquist mode is dropped.
ComplexState to_complex(const FieldState& state, double m);
FieldState from_complex(const ComplexState& u, double m, std::size_t N);

class AliasingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// g+_j and g-_j = g+_{-j} of the complex nonlinearity g(...)/sqrt(2), computed on a
/// zero-padded grid (grid = 0 picks one). The result is stored in a ComplexState
/// (plus = g+, minus = g-). Throws AliasingError if `grid` is too small for exactness.
ComplexState fourier_g(const ComplexState& u, const NonlinearitySpec& g, double m,
                       std::size_t grid = 0);
/// Smallest grid for which fourier_g is exact.
std::size_t dealiased_grid(int j_max, const NonlinearitySpec& g);

/// The Fourier-form vector field in u coordinates (empty site set, z_j = u+_j,
/// zbar_j = u-_j), optionally with its linear part -i lambda_j z_j d_zj + i lambda_j zbar_j d_zbarj.
VectorField tuc_field(double m, const NonlinearitySpec& g, const Truncation& trunc,
                      bool include_linear = true);

/// y = sum sqrt(8 xi_j) / lambda_j cos(lambda_j t) cos(j x).
QPSolution linear_solution(const ModelParams& params, int L = 6);

/// u+_j = sqrt(xi_|j| + y_j) e^{i x_j}, u-_j = sqrt(xi_|j| + y_j) e^{-i x_j} on I,
/// (z_j, zbar_j) elsewhere. Requires real |y_j| < xi_|j|.
ComplexState action_angle_embed(const ModelParams& params, const PhasePoint& point);
/// Inverse of action_angle_embed on the real subspace.
PhasePoint action_angle_extract(const ModelParams& params, const ComplexState& u);

// Configuration: {"model": {...}, "nonlinearity": {...}} blocks.
ModelParams model_params_from_json(const nlohmann::json& j);
NonlinearitySpec nonlinearity_from_json(const nlohmann::json& j);
nlohmann::json to_json_value(const ModelParams& p);
nlohmann::json to_json_value(const NonlinearitySpec& g);

/// CSV with columns x,y,v.
void write_field_csv(std::ostream& out, const FieldState& state);

// ---------------------------------------------------------------- inline

template <class T>
T NonlinearitySpec::eval(double x, T y, T yx, T v) const {
  T sum{};
  auto ipow = [](T b, int e) {
    T r{1};
    for (int k = 0; k < e; ++k) r *= b;
    return r;
  };
  for (const auto& t : terms()) {
    double xf = 1.0;
    if (t.x_kind == XFactor::cos) xf = std::cos(t.x_freq * x);
    if (t.x_kind == XFactor::sin) xf = std::sin(t.x_freq * x);
    sum += (t.coeff * xf) * ipow(y, t.y_pow) * ipow(yx, t.yx_pow) * ipow(v, t.v_pow);
  }
  return sum;
}

}  // namespace kamdnlw
