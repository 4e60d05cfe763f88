#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kamdnlw/dynamics.hpp"
#include "kamdnlw/qp_solver.hpp"
#include "kamdnlw/spectral.hpp"

using namespace kamdnlw;

namespace {

const double PI = std::numbers::pi;

FieldState modes(std::size_t N, std::mt19937_64& rng, double amp, int jmax) {
  std::normal_distribution<double> nd(0.0, amp);
  FieldState s{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)};
  const auto xs = spectral::abscissae(N);
  for (int j = 0; j <= jmax; ++j) {
    const double a = nd(rng), b = nd(rng), c = nd(rng), d = nd(rng);
    for (std::size_t n = 0; n < N; ++n) {
      s.y[n] += a * std::cos(j * xs[n]) + b * std::sin(j * xs[n]);
      s.v[n] += c * std::cos(j * xs[n]) + d * std::sin(j * xs[n]);
    }
  }
  return s;
}

FieldState cos_mode(std::size_t N) {
  FieldState s{std::vector<double>(N), std::vector<double>(N, 0.0)};
  const auto xs = spectral::abscissae(N);
  for (std::size_t n = 0; n < N; ++n) s.y[n] = std::cos(xs[n]);
  return s;
}

double max_gap(const FieldState& a, const FieldState& b) {
  double g = 0;
  for (std::size_t n = 0; n < a.size(); ++n)
    g = std::max({g, std::abs(a.y[n] - b.y[n]), std::abs(a.v[n] - b.v[n])});
  return g;
}

}  // namespace

TEST_CASE("linear oscillation") {
  const double m = 1.0, T = 10, dt = 0.01;
  const auto traj = integrate(cos_mode(32), NonlinearitySpec::zero(), m, T, dt);
  const double lam = std::sqrt(2.0);
  const auto& s = traj.states.back();
  CHECK(traj.times.back() == doctest::Approx(T));
  CHECK(traj.uniform);
  const auto xs = spectral::abscissae(32);
  for (std::size_t n = 0; n < 32; ++n) {
    CHECK(std::abs(s.y[n] - std::cos(lam * T) * std::cos(xs[n])) < 1e-8);
    CHECK(std::abs(s.v[n] + lam * std::sin(lam * T) * std::cos(xs[n])) < 1e-8);
  }
}

TEST_CASE("linear energy is conserved") {
  std::mt19937_64 rng(1);
  const auto s0 = modes(32, rng, 0.5, 2);
  const auto traj = integrate(s0, NonlinearitySpec::zero(), 1.0, 100, 0.005, {.store_every = 100});
  const double e0 = traj.diagnostics.front().energy;
  double worst = 0;
  for (const auto& d : traj.diagnostics) worst = std::max(worst, std::abs(d.energy - e0) / e0);
  CHECK(worst <= 1e-8);
}

TEST_CASE("fourth-order convergence") {
  std::mt19937_64 rng(2);
  const auto g = NonlinearitySpec::cubic();
  for (std::size_t N : {16u, 32u}) {
    const auto s0 = modes(N, rng, 0.1, 3);
    const IntegrateOptions fixed{.adapt_c = 1e300};
    const auto ref = integrate(s0, g, 1.0, 2.0, 0.1 / 16, fixed).states.back();
    const double e1 = max_gap(integrate(s0, g, 1.0, 2.0, 0.1, fixed).states.back(), ref);
    const double e2 = max_gap(integrate(s0, g, 1.0, 2.0, 0.05, fixed).states.back(), ref);
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.2));
  }
}

TEST_CASE("step restrictions") {
  CHECK_THROWS_AS(integrate(cos_mode(32), NonlinearitySpec::zero(), 1.0, 1.0, 0.2), ConfigError);
  FieldState odd{std::vector<double>(30), std::vector<double>(30)};
  CHECK_THROWS_AS(integrate(odd, NonlinearitySpec::zero(), 1.0, 1.0, 0.01), ConfigError);

  // partial last step
  const auto t = integrate(cos_mode(16), NonlinearitySpec::zero(), 1.0, 0.105, 0.01);
  CHECK(t.times.back() == doctest::Approx(0.105));
  CHECK_FALSE(t.uniform);
  CHECK_THROWS(dM_dt_identity(t, 3));
}

TEST_CASE("M functional") {
  const auto g = NonlinearitySpec::of({GTerm{1.0, 0, 3, 0}});
  const auto s = cos_mode(64);
  CHECK(flux_M(s, 3) == doctest::Approx(3 * PI / 4).epsilon(1e-14));
  CHECK(std::abs(dM_dt_at(s, g, 0.0, 1e-3) - 3 * PI / 4) < 1e-6);

  FieldState flat{std::vector<double>(32, 0.4), std::vector<double>(32, 0.1)};
  CHECK(flux_M(flat, 3) == 0.0);
  CHECK(lyapunov_M(flat) == 0.0);

  std::mt19937_64 rng(3);
  const auto s0 = modes(32, rng, 0.05, 3);
  const auto traj = integrate(s0, g, 0.0, 10.0, 0.01);
  const auto rep = dM_dt_identity(traj, 3);
  CHECK(rep.max_error <= 1e-6);
  CHECK(rep.monotone);
  CHECK(rep.max_flux > 1e-3);
}

TEST_CASE("H functional") {
  FieldState still{std::vector<double>(32, 0.0), std::vector<double>(32, 0.7)};
  CHECK(lyapunov_H(still, NonlinearitySpec::zero()) == doctest::Approx(PI * 0.49).epsilon(1e-14));
  FieldState rest{std::vector<double>(32, 0.3), std::vector<double>(32, 0.0)};
  CHECK(flux_H(rest, 3) == 0.0);

  // F from f = y^3 gives H = - int y^4 / 4 on a resting constant
  const auto f = NonlinearitySpec::of({GTerm{1.0, 3, 0, 0}});
  CHECK(lyapunov_H(rest, f) == doctest::Approx(-2 * PI * std::pow(0.3, 4) / 4).epsilon(1e-14));

  std::mt19937_64 rng(4);
  const auto s0 = modes(32, rng, 0.05, 3);
  const auto g = NonlinearitySpec::of({GTerm{1.0, 0, 0, 3}});
  const auto traj = integrate(s0, g, 0.0, 10.0, 0.01);
  const auto rep = dH_dt_identity(traj, 3, NonlinearitySpec::zero());
  CHECK(rep.max_error <= 1e-6);
  CHECK(rep.monotone);

  const auto gf = NonlinearitySpec::of({GTerm{1.0, 0, 0, 3}, GTerm{-1.0, 3, 0, 0}});
  const auto trajf = integrate(s0, gf, 0.0, 10.0, 0.01);
  const auto repf = dH_dt_identity(trajf, 3, potential_part(gf));
  CHECK(repf.max_error <= 1e-6);
  CHECK(repf.monotone);
}

TEST_CASE("blow-up of the mean velocity") {
  const auto g = NonlinearitySpec::of({GTerm{1.0, 0, 0, 2}});
  SUBCASE("constant data follow w' = w^2") {
    FieldState s{std::vector<double>(32, 0.0), std::vector<double>(32, 1.0)};
    const auto traj = integrate(s, g, 0.0, 2.0, 0.01);
    const auto rep = blow_up_certificate(traj);
    CHECK(rep.flagged);
    CHECK(rep.t_flag < 1.0);
    CHECK(rep.t_flag == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(rep.bound_holds);
  }
  SUBCASE("perturbed data blow up earlier") {
    FieldState s{std::vector<double>(64, 0.0), std::vector<double>(64)};
    const auto xs = spectral::abscissae(64);
    for (std::size_t n = 0; n < 64; ++n) s.v[n] = 1.0 + 0.1 * std::cos(xs[n]);
    const auto traj = integrate(s, g, 0.0, 2.0, 0.01);
    const auto rep = blow_up_certificate(traj);
    CHECK(rep.flagged);
    CHECK(rep.t_flag < 1.0);
    CHECK(rep.bound_holds);
    CHECK(rep.w0 == doctest::Approx(1.0));
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    const auto text = os.str();
    CHECK(text.rfind("t,energy,M,H,mean,meanvel,flag\n0,", 0) == 0);
    CHECK(text.substr(text.size() - 3) == ",1\n");
  }
  SUBCASE("mean-zero velocity is inconclusive") {
    const auto traj = integrate(cos_mode(32), g, 0.0, 0.5, 0.01);
    const auto rep = blow_up_certificate(traj);
    CHECK(rep.inconclusive);
    CHECK_FALSE(rep.flagged);
  }
}

TEST_CASE("evenness is preserved") {
  std::mt19937_64 rng(5);
  const std::size_t N = 32;
  FieldState s{std::vector<double>(N, 0.0), std::vector<double>(N, 0.0)};
  const auto xs = spectral::abscissae(N);
  for (int j = 0; j <= 4; ++j) {
    const double a = std::normal_distribution<double>(0, 0.2)(rng);
    const double b = std::normal_distribution<double>(0, 0.2)(rng);
    for (std::size_t n = 0; n < N; ++n) {
      s.y[n] += a * std::cos(j * xs[n]);
      s.v[n] += b * std::cos(j * xs[n]);
    }
  }
  const auto traj = integrate(s, NonlinearitySpec::cubic(), 1.0, 5.0, 0.01);
  for (const auto& st : traj.states)
    for (std::size_t n = 1; n < N; ++n) {
      CHECK(std::abs(st.y[n] - st.y[N - n]) < 1e-12);
      CHECK(std::abs(st.v[n] - st.v[N - n]) < 1e-12);
    }
}

TEST_CASE("mean averages") {
  ModelParams p;
  p.sites = SiteSet({1, 2});
  p.xi = {1e-3, 2e-3};
  p.truncation = {8, 4, 3};
  p.grid_N = 64;
  const auto lin = linear_solution(p);
  const auto rep = mean_average_diagnostic(lin, 2, 2);
  double expect = 0, expect_v = 0;
  for (std::size_t s = 0; s < 2; ++s) {
    const int j = p.sites.plus_sites()[s];
    expect += 2 * p.xi[s] * j * j / (j * j + 1.0);
    expect_v += 2 * p.xi[s];
  }
  CHECK(rep.avg_yx_p == doctest::Approx(expect).epsilon(1e-12));
  CHECK(rep.avg_yt_q == doctest::Approx(expect_v).epsilon(1e-12));

  QPSolution flat(std::vector<int>{1}, {1e-3}, 4, 8);
  flat.omega = {1.0};
  flat.at({0}, 0) = 0.5;
  CHECK(mean_average_diagnostic(flat, 2, 2).avg_yx_p == 0.0);
  CHECK(mean_average_diagnostic(flat, 2, 2).avg_yt_q == 0.0);

  // a long linear trajectory approaches the torus average
  FieldState s0{std::vector<double>(32), std::vector<double>(32)};
  const auto [y, v] = lin.grid_state(0.0, 32);
  s0.y = y;
  s0.v = v;
  const auto traj = integrate(s0, NonlinearitySpec::zero(), 1.0, 400.0, 0.05, {.store_every = 2});
  CHECK(mean_average_diagnostic(traj, 2, 2).avg_yx_p == doctest::Approx(expect).epsilon(2e-2));
}

TEST_CASE("time integration reproduces the quasi-periodic solution") {
  ModelParams p;
  p.sites = SiteSet({1});
  p.xi = {1e-3};
  p.truncation = {16, 8, 3};
  p.grid_N = 128;
  NewtonOptions o;
  o.threads = 2;
  const auto sol = newton_qp(linear_solution(p), p, NonlinearitySpec::cubic(), o).sol;
  const std::size_t N = 64;
  const double T = 20 * 2 * PI / sol.omega[0];
  const auto [y0, v0] = sol.grid_state(0.0, N);
  const auto traj = integrate({y0, v0}, NonlinearitySpec::cubic(), 1.0, T, 0.01, {.store_every = 200});
  double gap = 0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto [y, v] = sol.grid_state(traj.times[k], N);
    gap = std::max(gap, max_gap(traj.states[k], {y, v}));
  }
  CHECK(gap < 1e-6);
}
