#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

using namespace kamdnlw;
using kamdnlw::testing::GenOptions;

namespace {

const cplx I{0.0, 1.0};

MonomialKey key_of(const SiteSet& sites, Component c) { return make_key(sites, c); }

// omega d_x - i Omega_j z_j d_zj + i Omega_j zbar_j d_zbarj with symmetric frequencies.
VectorField diagonal_normal_form(const SiteSet& sites, const Truncation& trunc) {
  VectorField N(sites, trunc);
  for (int j : sites.sites()) N.add(key_of(sites, {Axis::x, j}), std::sqrt(j * j + 1.0));
  for (int j = -trunc.j_max; j <= trunc.j_max; ++j) {
    if (sites.contains(j)) continue;
    const double Om = std::sqrt(j * j + 1.0) + 0.01;
    auto kz = key_of(sites, {Axis::z, j});
    kz.alpha[j] = 1;
    N.add(kz, -I * Om);
    auto kb = key_of(sites, {Axis::zbar, j});
    kb.beta[j] = 1;
    N.add(kb, I * Om);
  }
  return N;
}

}  // namespace

TEST_CASE("site set enumerates plus and minus sites") {
  SiteSet s({3, 1});
  CHECK(s.sites() == std::vector<int>{1, -1, 3, -3});
  CHECK(s.n() == 4);
  CHECK(s.contains(-3));
  CHECK_FALSE(s.contains(0));
  CHECK_THROWS_AS(SiteSet({0}), std::invalid_argument);
  CHECK_THROWS_AS(SiteSet({2, 2}), std::invalid_argument);
}

TEST_CASE("momentum of explicit monomials") {
  SiteSet s({1});
  auto key = key_of(s, {Axis::z, 3});
  key.k = {1, 0};
  key.alpha[5] = 1;
  CHECK(momentum(key, s) == 3);

  auto sym = key_of(s, {Axis::y, -1});
  sym.alpha[4] = 2;
  sym.beta[4] = 2;
  CHECK(momentum(sym, s) == 0);

  auto zb = key_of(s, {Axis::zbar, 2});
  CHECK(momentum(zb, s) == 2);

  auto bad = key_of(s, {Axis::z, 1});
  CHECK_THROWS_AS(momentum(bad, s), InvalidMonomial);
  auto bad_y = key_of(s, {Axis::y, 2});
  CHECK_THROWS_AS(momentum(bad_y, s), InvalidMonomial);
}

TEST_CASE("vector field merges exactly and respects truncation") {
  SiteSet s({1});
  VectorField X(s, {4, 2, 3});
  auto key = key_of(s, {Axis::z, 2});
  key.alpha[2] = 1;
  X.add(key, {1.5, 0.0});
  X.add(key, {-1.5, 0.0});
  CHECK(X.empty());

  auto far = key_of(s, {Axis::z, 5});
  CHECK_THROWS_AS(X.add(far, 1.0), InvalidMonomial);
  auto high_k = key_of(s, {Axis::x, 1});
  high_k.k = {2, 1};
  CHECK_THROWS_AS(X.add(high_k, 1.0), InvalidMonomial);
  CHECK_FALSE(X.add_truncated(high_k, 1.0));
}

TEST_CASE("lie bracket of simple fields") {
  SiteSet s({1});
  Truncation t{4, 4, 3};
  SUBCASE("self bracket vanishes") {
    VectorField X(s, t);
    auto key = key_of(s, {Axis::z, 2});
    key.alpha[2] = 1;
    X.add(key, 1.0);
    CHECK(lie_bracket(X, X).empty());
  }
  SUBCASE("constant angle field differentiates the phase") {
    VectorField dx(s, t);
    dx.add(key_of(s, {Axis::x, 1}), 1.0);
    VectorField Y(s, t);
    auto ky = key_of(s, {Axis::y, 1});
    ky.k = {1, 0};
    Y.add(ky, 1.0);
    // (D dx) Y - (D Y) dx = -i e^{i x1} d_y1
    const VectorField B = lie_bracket(dx, Y);
    REQUIRE(B.size() == 1);
    CHECK(B.coefficient(ky) == -I);
  }
  SUBCASE("truncation drops high degree and reports the mass") {
    VectorField X(s, t), Y(s, t);
    auto a = key_of(s, {Axis::z, 2});
    a.alpha[2] = 2;  // degree 1
    a.alpha[3] = 1;  // degree 2
    X.add(a, 1.0);
    auto b = key_of(s, {Axis::z, 3});
    b.alpha[3] = 2;
    b.beta[4] = 2;  // degree 3
    Y.add(b, 1.0);
    const auto r = lie_bracket_report(X, Y);
    CHECK(r.field.empty());
    CHECK(r.discarded_mass > 0);
  }
  SUBCASE("mismatched site sets are a contract violation") {
    VectorField X(s, t), Y(SiteSet({2}), t);
    CHECK_THROWS_AS(lie_bracket(X, Y), ContractViolation);
  }
}

TEST_CASE("monomials are eigenvectors of the momentum adjoint action") {
  std::mt19937_64 rng(11);
  SiteSet s({1, 3});
  Truncation t{16, 6, 3};
  const VectorField XM = momentum_field(s, t);
  for (int trial = 0; trial < 200; ++trial) {
    const MonomialKey key = kamdnlw::testing::random_key(rng, s, t);
    const cplx c = kamdnlw::testing::random_coeff(rng);
    VectorField m(s, t);
    m.add(key, c);
    const VectorField B = lie_bracket(m, XM);
    const long pi = momentum(key, s);
    if (pi == 0) {
      CHECK(B.max_coeff() <= 1e-12);
      continue;
    }
    REQUIRE(B.size() == 1);
    CHECK(B.terms().begin()->first == key);
    CHECK(std::abs(B.coefficient(key) - I * static_cast<double>(pi) * c) <= 1e-12 * (1 + std::abs(pi)));
  }
}

TEST_CASE("bracket is antisymmetric, bilinear and satisfies Jacobi") {
  std::mt19937_64 rng(5);
  SiteSet s({1, 3});
  Truncation big{16, 40, 40};
  GenOptions opt;
  opt.max_deg = 2;
  opt.normal_range = 5;
  for (int trial = 0; trial < 20; ++trial) {
    auto X = kamdnlw::testing::random_field(rng, s, big, 4, opt);
    auto Y = kamdnlw::testing::random_field(rng, s, big, 4, opt);
    auto Z = kamdnlw::testing::random_field(rng, s, big, 4, opt);
    CHECK((lie_bracket(X, Y) + lie_bracket(Y, X)).max_coeff() <= 1e-12);
    const cplx a{0.3, -1.2};
    const auto lhs = lie_bracket(a * X + Z, Y);
    const auto rhs = a * lie_bracket(X, Y) + lie_bracket(Z, Y);
    CHECK(lhs.max_coeff_diff(rhs) <= 1e-12);
    const auto jac = lie_bracket(X, lie_bracket(Y, Z)) + lie_bracket(Y, lie_bracket(Z, X)) +
                     lie_bracket(Z, lie_bracket(X, Y));
    CHECK(jac.max_coeff() <= 1e-10);
  }
}

TEST_CASE("involution and reversibility") {
  SiteSet s({1});
  Truncation t{6, 4, 3};
  SUBCASE("y1 d_y1 is not reversible") {
    VectorField X(s, t);
    auto k = key_of(s, {Axis::y, 1});
    k.i = {1, 0};
    X.add(k, 1.0);
    const auto SX = apply_involution(X);
    auto img = key_of(s, {Axis::y, -1});
    img.i = {0, 1};
    CHECK(SX.coefficient(img) == cplx{1.0});
    CHECK_FALSE(check_reversible(X));
  }
  SUBCASE("symmetric normal form is reversible and has real coefficients") {
    const auto N = diagonal_normal_form(s, t);
    CHECK(check_reversible(N));
    CHECK(check_real_coefficients(N));
  }
  SUBCASE("linear wave field in u coordinates is reversible") {
    SiteSet none;
    VectorField L(none, t);
    for (int j = -t.j_max; j <= t.j_max; ++j) {
      const double lam = std::sqrt(j * j + 1.0);
      auto kz = key_of(none, {Axis::z, j});
      kz.alpha[j] = 1;
      L.add(kz, -I * lam);
      auto kb = key_of(none, {Axis::zbar, j});
      kb.beta[j] = 1;
      L.add(kb, I * lam);
    }
    CHECK(check_reversible(L));
  }
  SUBCASE("involution squares to the identity") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const auto X = kamdnlw::testing::random_field(rng, s, t, 6);
      CHECK(apply_involution(apply_involution(X)).max_coeff_diff(X) == 0.0);
    }
  }
  SUBCASE("imaginary angle component breaks the real-coefficients property") {
    VectorField X(s, t);
    X.add(key_of(s, {Axis::x, 1}), I);
    CHECK_FALSE(check_real_coefficients(X));
  }
}

TEST_CASE("symmetrization") {
  SiteSet s({1});
  Truncation t{6, 4, 3};
  SUBCASE("odd Fourier index on an angle component is averaged") {
    VectorField X(s, t);
    auto k = key_of(s, {Axis::x, 1});
    k.k = {1, -1};
    X.add(k, 0.7);
    const auto SX = symmetrize(X);
    REQUIRE(SX.size() == 1);
    CHECK(SX.coefficient(key_of(s, {Axis::x, 1})) == cplx{0.7});
  }
  SUBCASE("quadratic normal part is left alone") {
    VectorField X(s, t);
    auto k = key_of(s, {Axis::z, 4});
    k.k = {1, -1};
    k.alpha[4] = 2;
    X.add(k, 1.0);
    CHECK(symmetrize(X).max_coeff_diff(X) == 0.0);
  }
  SUBCASE("z_{-j} d_{z_j} maps to z_j d_{z_j}") {
    VectorField X(s, t);
    auto k = key_of(s, {Axis::z, 3});
    k.k = {2, -2};
    k.alpha[-3] = 1;
    X.add(k, I);
    auto target = key_of(s, {Axis::z, 3});
    target.alpha[3] = 1;
    CHECK(symmetrize(X).coefficient(target) == I);
  }
  SUBCASE("properties on random fields") {
    std::mt19937_64 rng(17);
    GenOptions opt;
    opt.normal_range = 4;
    for (int trial = 0; trial < 30; ++trial) {
      const auto X = kamdnlw::testing::random_reversible(rng, s, t, 8, true, opt);
      const auto SX = symmetrize(X);
      CHECK(symmetrize(SX).max_coeff_diff(SX) == 0.0);
      CHECK(check_reversible(SX));
      for (const auto& [key, c] : X.terms()) {
        if (!in_symmetrization_family(key, s)) continue;
        CHECK(std::labs(momentum(symmetrized_key(key, s), s)) <= std::labs(momentum(key, s)));
      }
      for (int p = 0; p < 10; ++p) {
        const auto u = kamdnlw::testing::random_point_in_E(rng, s, 4);
        CHECK(evaluate(X, u).max_abs_diff(evaluate(SX, u)) < 1e-12);
      }
    }
  }
}

TEST_CASE("momentum projection and the penalization inequality") {
  std::mt19937_64 rng(23);
  SiteSet s({1, 3});
  Truncation t{16, 6, 3};
  const auto X = kamdnlw::testing::random_field(rng, s, t, 30);
  CHECK(project_momentum(X, 0, MomentumPart::high).max_coeff_diff(X) == 0.0);
  CHECK((project_momentum(X, 7, MomentumPart::high) + project_momentum(X, 7, MomentumPart::low))
            .max_coeff_diff(X) == 0.0);

  VectorField single(s, t);
  auto k = key_of(s, {Axis::x, 1});
  k.k = {0, 0, 1, 0};  // pi = 3
  single.add(k, 1.0);
  CHECK(project_momentum(single, 5, MomentumPart::high).empty());
  CHECK_THROWS(project_momentum(single, -1, MomentumPart::high));

  for (int trial = 0; trial < 50; ++trial) {
    const long K = kamdnlw::testing::pick(rng, 0, 12);
    const double a = kamdnlw::testing::uniform(rng, 0.0, 2.0);
    const double a2 = kamdnlw::testing::uniform(rng, 0.0, a);
    NormContext c1{0.5, 0.7, a, 0.1, 1.0}, c2 = c1;
    c2.a_weight = a2;
    const double lhs = majorant_norm(project_momentum(X, K, MomentumPart::high), c2);
    CHECK(lhs <= std::exp(-K * (a - a2)) * majorant_norm(X, c1) * (1 + 1e-14));
  }
}

TEST_CASE("majorant norm") {
  SiteSet s({1});
  Truncation t{16, 20, 3};
  CHECK(majorant_norm(VectorField(s, t), {}) == 0.0);

  VectorField X(s, t);
  auto k = key_of(s, {Axis::x, 1});
  k.k = {10, 0};  // pi = 10
  X.add(k, 2.0);
  NormContext a1{1.0, 1.0, 1.0, 0.0, 1.0}, a05 = a1;
  a05.a_weight = 0.5;
  const double ratio = majorant_norm(project_momentum(X, 10, MomentumPart::high), a05) /
                       majorant_norm(X, a1);
  CHECK(ratio == doctest::Approx(std::exp(-5.0)).epsilon(1e-14));

  std::mt19937_64 rng(2);
  const auto Y = kamdnlw::testing::random_field(rng, s, t, 10);
  const NormContext ctx{0.3, 0.5, 0.2, 0.1, 1.0};
  const double full = majorant_norm(Y, ctx);
  for (const auto& [key, c] : Y.terms()) {
    VectorField less = Y;
    less.add(key, -c);
    CHECK(majorant_norm(less, ctx) <= full);
  }
  CHECK_THROWS(majorant_norm(Y, NormContext{0.0, 1.0, 0.0, 0.0, 1.0}));
}

TEST_CASE("evaluation") {
  SiteSet s({1});
  Truncation t{3, 4, 3};
  const auto N = diagonal_normal_form(s, t);
  PhasePoint p;
  p.x = {0.3, 0.3};
  p.y = {0.1, 0.1};
  p.z = {{2, cplx{0.2, 0.1}}, {-3, cplx{0.5, 0.0}}};
  p.zbar = {{2, cplx{0.2, -0.1}}};
  const auto v = evaluate(N, p);
  CHECK(v.x[0] == cplx{std::sqrt(2.0)});
  CHECK(v.y[0] == cplx{});
  const double Om2 = std::sqrt(5.0) + 0.01;
  CHECK(std::abs(v.z.at(2) - (-I * Om2 * p.z.at(2))) < 1e-15);
  CHECK(std::abs(v.zbar.at(2) - (I * Om2 * p.zbar.at(2))) < 1e-15);

  VectorField dx(s, t);
  dx.add(key_of(s, {Axis::x, 1}), 1.0);
  const auto e = evaluate(dx, p);
  CHECK(e.x[0] == cplx{1.0});
  CHECK(e.x[1] == cplx{});

  p.z[7] = 1.0;
  CHECK_THROWS_AS(evaluate(N, p), InvalidMonomial);
}

TEST_CASE("text and json serialization round trip") {
  std::mt19937_64 rng(41);
  SiteSet s({1, 3});
  Truncation t{16, 6, 3};
  for (int trial = 0; trial < 20; ++trial) {
    const auto X = kamdnlw::testing::random_field(rng, s, t, 12);
    const auto Y = from_json(to_json(X));
    CHECK(Y.sites() == X.sites());
    CHECK(Y.truncation() == X.truncation());
    CHECK(Y.max_coeff_diff(X) == 0.0);
  }
  const auto m = parse_term("1 -2 | 1 0 | 0 1 | 5:1 | | z:3");
  CHECK(m.coeff == cplx{1.0, -2.0});
  CHECK(m.key.alpha.at(5) == 1);
  CHECK(m.key.component == Component{Axis::z, 3});
  CHECK_THROWS_AS(parse_term("1 0 | 1 | 0"), InvalidMonomial);
  CHECK_THROWS_AS(parse_term("1 0 | 1 0 | 0 0 | | | w:3"), InvalidMonomial);
}
