#pragma once

// Sparse algebra of truncated Taylor-Fourier monomial vector fields
//
//   c e^{i k.x} y^i z^alpha zbar^beta d_v,   v in {x_j, y_j, z_j, zbar_j}
//
// on the phase space of a reversible system with tangential sites I = I+ u (-I+)
// (angles x, actions y) and normal modes z_j, zbar_j, j not in I, |j| <= J_max.

#include <complex>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kamdnlw {

using cplx = std::complex<double>;

class InvalidMonomial : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Symmetric set of tangential sites, enumerated as (j1, -j1, j2, -j2, ...)
/// with I+ sorted increasingly. The empty set is allowed: every mode is then
/// a normal mode.
class SiteSet {
 public:
  SiteSet() = default;
  explicit SiteSet(std::vector<int> plus_sites);

  const std::vector<int>& plus_sites() const { return plus_; }
  const std::vector<int>& sites() const { return sites_; }
  std::size_t n() const { return sites_.size(); }

  bool contains(int j) const;
  /// Position of site j in the enumeration, if j is tangential.
  std::optional<std::size_t> index_of(int j) const;
  /// Position of -j given the position of j.
  static std::size_t partner(std::size_t idx) { return idx ^ 1U; }

  friend bool operator==(const SiteSet&, const SiteSet&) = default;

 private:
  std::vector<int> plus_;
  std::vector<int> sites_;
};

struct Truncation {
  int j_max = 16;  ///< normal-mode cutoff |j| <= j_max
  int k_max = 8;   ///< Fourier cutoff |k|_1 <= k_max
  int d_max = 3;   ///< graded degree cutoff, see degree()

  friend bool operator==(const Truncation&, const Truncation&) = default;
};

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2, zbar = 3 };

/// Target slot of a monomial vector field. For x and y the index is the
/// tangential site value j in I; for z and zbar it is the normal mode j.
struct Component {
  Axis axis = Axis::x;
  int index = 0;

  friend auto operator<=>(const Component&, const Component&) = default;
};

using ExponentMap = std::map<int, int>;

/// Exponent data and target of a monomial, without its coefficient.
/// Ordering is lexicographic on (component, k, i, alpha, beta).
struct MonomialKey {
  Component component;
  std::vector<int> k;
  std::vector<int> i;
  ExponentMap alpha;
  ExponentMap beta;

  friend auto operator<=>(const MonomialKey&, const MonomialKey&) = default;
  friend bool operator==(const MonomialKey&, const MonomialKey&) = default;
};

struct Monomial {
  cplx coeff{0.0, 0.0};
  MonomialKey key;
};

/// Builds a monomial key with zero k and i vectors of the right size.
MonomialKey make_key(const SiteSet& sites, Component component);

int l1(const std::vector<int>& v);
int total(const ExponentMap& e);

/// Graded degree 2|i| + |alpha| + |beta| - deg(v), deg(x)=0, deg(y)=2, deg(z)=1.
/// Additive under Lie brackets.
int degree(const MonomialKey& key);

/// pi(k, alpha, beta; v). Throws InvalidMonomial if the key does not fit sites.
long momentum(const MonomialKey& key, const SiteSet& sites);

/// Checks the structural invariants of a key (sizes, signs, supports, component).
/// Truncation bounds are only checked when a truncation is passed.
void validate_key(const MonomialKey& key, const SiteSet& sites,
                  const Truncation* trunc = nullptr);

struct NormContext {
  double s = 1.0;        ///< angle analyticity width
  double r = 1.0;        ///< amplitude radius
  double a_weight = 0;   ///< momentum weight
  double a_space = 0;    ///< spatial analyticity of the z-norm
  double p = 1.0;        ///< Sobolev weight

  void validate() const;
};

/// A point of the (complexified) phase space. Missing z entries are zero.
struct PhasePoint {
  std::vector<double> x;
  std::vector<cplx> y;
  std::map<int, cplx> z;
  std::map<int, cplx> zbar;
};

/// Value of a vector field at a point; same index structure as PhasePoint.
struct Tangent {
  std::vector<cplx> x;
  std::vector<cplx> y;
  std::map<int, cplx> z;
  std::map<int, cplx> zbar;

  double max_abs_diff(const Tangent& other) const;
};

class VectorField {
 public:
  using TermMap = std::map<MonomialKey, cplx>;

  VectorField() = default;
  VectorField(SiteSet sites, Truncation trunc);

  const SiteSet& sites() const { return sites_; }
  const Truncation& truncation() const { return trunc_; }
  const TermMap& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Adds c * key, merging with an existing term. Exact zeros are dropped.
  /// Throws InvalidMonomial if the key is malformed or exceeds the truncation.
  void add(const MonomialKey& key, cplx c);
  void add(const Monomial& m) { add(m.key, m.coeff); }
  /// Like add, but silently ignores keys beyond the K_max/d_max bounds.
  /// Returns false if the term was dropped.
  bool add_truncated(const MonomialKey& key, cplx c);

  cplx coefficient(const MonomialKey& key) const;

  VectorField& operator+=(const VectorField& other);
  VectorField& operator-=(const VectorField& other);
  VectorField& operator*=(cplx c);
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(cplx c, VectorField a) { return a *= c; }

  /// Largest coefficient modulus (0 for the empty field).
  double max_coeff() const;
  /// max |c_a - c_b| over the union of keys.
  double max_coeff_diff(const VectorField& other) const;

  /// Same sites and truncation, no terms.
  VectorField empty_like() const { return VectorField(sites_, trunc_); }

 private:
  void require_compatible(const VectorField& other) const;

  SiteSet sites_;
  Truncation trunc_;
  TermMap terms_;
};

struct BracketResult {
  VectorField field;
  /// Majorant-norm mass (unit context) of the terms dropped by the truncation.
  double discarded_mass = 0.0;
};

/// [X, Y] = (DX) Y - (DY) X, truncated to d_max and K_max.
BracketResult lie_bracket_report(const VectorField& X, const VectorField& Y);
VectorField lie_bracket(const VectorField& X, const VectorField& Y);

/// Momentum vector field X_M = (j, 0, i j z_j, -i j zbar_j) over the truncation.
VectorField momentum_field(const SiteSet& sites, const Truncation& trunc);

/// Pushforward S X S for S: (x_j, y_j, z_j, zbar_j) -> (-x_{-j}, y_{-j}, zbar_{-j}, z_{-j}).
VectorField apply_involution(const VectorField& X);
/// Whether S X S = -X up to tol on the coefficients.
bool check_reversible(const VectorField& X, double tol = 1e-12);

/// Whether X^(x), iX^(y), iX^(z), iX^(zbar) have real coefficients up to tol.
bool check_real_coefficients(const VectorField& X, double tol = 1e-12);

/// Whether k lies in Z^n_odd = {k : k_{-j} = -k_j}.
bool is_odd_index(const std::vector<int>& k);
/// Whether a monomial belongs to one of the resonant families that symmetrize
/// replaces (k in Z^n_odd, structure as in the replacement rules).
bool in_symmetrization_family(const MonomialKey& key, const SiteSet& sites);
/// The constant-coefficient representative of a family member (identity otherwise).
MonomialKey symmetrized_key(const MonomialKey& key, const SiteSet& sites);
VectorField symmetrize(const VectorField& X);

enum class MomentumPart { high, low };
/// Keeps terms with |pi| >= K (high) or |pi| < K (low).
VectorField project_momentum(const VectorField& X, long K, MomentumPart part);

double majorant_norm(const VectorField& X, const NormContext& ctx);
/// Contribution of a single term to majorant_norm.
double majorant_term(const MonomialKey& key, cplx c, const SiteSet& sites,
                     const NormContext& ctx);

Tangent evaluate(const VectorField& X, const PhasePoint& point);

// Text and JSON serialization. One term per line:
//   coeff_re coeff_im | k... | i... | alpha(j:e,...) | beta(j:e,...) | component
// with component written as x:j, y:j, z:j or zbar:j.
std::string format_term(const MonomialKey& key, cplx c);
Monomial parse_term(const std::string& line);
std::string to_text(const VectorField& X);
std::string to_json(const VectorField& X);
VectorField from_json(const std::string& text);

}  // namespace kamdnlw
