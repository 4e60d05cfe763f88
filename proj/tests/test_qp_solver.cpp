#include <cmath>
#include <sstream>

#include "doctest.h"
#include "kamdnlw/normal_form.hpp"
#include "kamdnlw/qp_solver.hpp"

using namespace kamdnlw;

namespace {

ModelParams one_site(double xi, int J = 16, double m = 1.0) {
  ModelParams p;
  p.mass = m;
  p.sites = SiteSet({1});
  p.xi = {xi};
  p.truncation = {J, 8, 3};
  p.grid_N = 128;
  return p;
}

NewtonResult solve(const ModelParams& p, int L = 6, double tol = 1e-10, unsigned threads = 2) {
  NewtonOptions o;
  o.L = L;
  o.tol = tol;
  o.threads = threads;
  return newton_qp(linear_solution(p, L), p, NonlinearitySpec::cubic(), o);
}

}  // namespace

TEST_CASE("torus basis") {
  const TorusBasis b1(1, 6);
  CHECK(b1.size() == 7);
  CHECK(b1[0] == std::vector<int>{0});
  const TorusBasis b2(2, 3);
  CHECK(b2.size() == 13);  // (2*3*3 + 2*3 + 1 + 1) / 2
  CHECK(b2.index_of({-1, 2}) == b2.index_of({1, -2}));
  CHECK(!b2.index_of({3, 1}));
}

TEST_CASE("residual of exact and approximate solutions") {
  const auto p = one_site(1e-3);
  CHECK(qp_residual(linear_solution(p), p, NonlinearitySpec::zero()) < 1e-13);

  QPSolution zero(std::vector<int>{1}, {1e-3}, 6, 16);
  zero.omega = {lambda_j(1.0, 1)};
  CHECK(qp_residual(zero, p, NonlinearitySpec::cubic()) == 0.0);

  // the cubic defect of the linear profile scales like xi^{3/2}
  const double r1 = qp_residual(linear_solution(one_site(1e-3)), p, NonlinearitySpec::cubic());
  const double r2 = qp_residual(linear_solution(one_site(1e-4)), p, NonlinearitySpec::cubic());
  CHECK(std::log10(r1 / r2) == doctest::Approx(1.5).epsilon(1e-3));
}

TEST_CASE("Newton solution at small amplitude") {
  const auto p = one_site(1e-3);
  const auto r = solve(p);
  CHECK(r.residual < 1e-10);
  CHECK(r.iterations <= 6);
  for (std::size_t k = 1; k < r.history.size(); ++k) CHECK(r.history[k] < r.history[k - 1]);
  CHECK(r.sol.at({1}, 1) == std::sqrt(8e-3) / lambda_j(1.0, 1));
  // even-even structure: only cos(l theta) cos(j x) with l + j even is excited
  for (Eigen::Index l = 0; l < r.sol.coeffs.rows(); ++l)
    for (int j = 0; j <= r.sol.j_max; ++j)
      if ((l + j) % 2 == 1) CHECK(std::abs(r.sol.coeffs(l, j)) < 1e-20);

  // refinement does not increase the converged residual
  const auto finer = solve(p, 8);
  CHECK(finer.residual <= r.residual);
  CHECK(finer.sol.omega[0] == doctest::Approx(r.sol.omega[0]).epsilon(1e-12));

  // threads do not change the answer
  const auto serial = solve(p, 6, 1e-10, 1);
  CHECK((serial.sol.coeffs - r.sol.coeffs).cwiseAbs().maxCoeff() == 0.0);
  CHECK(serial.sol.omega == r.sol.omega);

  const auto back = qp_solution_from_json(to_json(r.sol));
  CHECK(back.omega == r.sol.omega);
  CHECK((back.coeffs - r.sol.coeffs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("frequency shift follows the twist") {
  const double xi = 1e-4;
  const auto p = one_site(xi);
  const auto r = solve(p);
  const auto nf = birkhoff_third_order(p);
  const double slope = (r.sol.omega[0] - lambda_j(1.0, 1)) / xi;
  CHECK(slope == doctest::Approx(nf.twist(0, 0)).epsilon(1e-3));
}

TEST_CASE("Birkhoff and Newton frequencies agree to second order") {
  std::vector<double> lx, ly;
  for (double xi : {1e-2, 3e-3, 1e-3}) {
    const auto p = one_site(xi);
    const auto r = solve(p, 10, 1e-8);
    const double gap = std::abs(r.sol.omega[0] - birkhoff_third_order(p).omega_of(1));
    lx.push_back(std::log(xi));
    ly.push_back(std::log(gap));
  }
  const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
  double sxy = 0, sxx = 0, syy = 0;
  for (int k = 0; k < 3; ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  CHECK(sxy / sxx == doctest::Approx(2.0).epsilon(0.05));
  CHECK(sxy * sxy / (sxx * syy) > 0.99);
}

TEST_CASE("averaging obstruction makes Newton fail") {
  // y_tt - y_xx = y_x^2: the mean equation forces <y_x^2> = 0
  auto p = one_site(1e-3, 8, 0.0);
  const auto g = NonlinearitySpec::of({GTerm{1.0, 0, 2, 0}});
  QPSolution init(std::vector<int>{1}, {1e-3}, 6, 8);
  init.omega = {1.0};
  CHECK_THROWS_AS(newton_qp(init, p, g), NumericalFailure);
}

TEST_CASE("continuation in the amplitude") {
  const auto p = one_site(1e-4);
  NewtonOptions o;
  o.tol = 1e-10;
  o.threads = 2;
  const auto res = continuation(p, NonlinearitySpec::cubic(), {{1e-4}, {3e-4}, {1e-3}}, o);
  REQUIRE(res.path.size() == 3);
  CHECK(res.failures.empty());
  for (const auto& pt : res.path) CHECK(pt.residual <= 1e-10);
  CHECK(res.path[2].sol.omega[0] < res.path[0].sol.omega[0]);

  std::ostringstream os;
  write_continuation_csv(os, res);
  CHECK(os.str().rfind("xi,omega,residual,iters\n0.0001,", 0) == 0);

  // an unreachable tolerance fails with a recorded reason
  o.tol = 1e-30;
  const auto bad = continuation(p, NonlinearitySpec::cubic(), {{1e-4}}, o);
  CHECK(bad.path.empty());
  REQUIRE(bad.failures.size() == 1);
  CHECK(bad.failures[0].reason.find("residual") != std::string::npos);
}

TEST_CASE("Lyapunov exponents along the torus") {
  const auto p = one_site(1e-3);
  const double T = 500;

  const auto lin = lyapunov_exponent(linear_solution(p), p, NonlinearitySpec::zero(), T);
  CHECK(lin.zero);
  CHECK(std::abs(lin.chi) <= lin.scale);

  const auto r = solve(p);
  const auto dnlw = lyapunov_exponent(r.sol, p, NonlinearitySpec::cubic(), T);
  CHECK(dnlw.zero);
  CHECK(dnlw.history.size() == 500);

  // control: friction -c v^3 damps every direction
  const auto friction = NonlinearitySpec::of({GTerm{1.0, 1, 2, 0}, GTerm{-100.0, 0, 0, 3}});
  const auto damped = lyapunov_exponent(r.sol, p, friction, T);
  CHECK(damped.chi < -5.0 * damped.scale);
  CHECK_FALSE(damped.zero);
}
