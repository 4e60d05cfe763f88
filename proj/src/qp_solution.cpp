#include "kamdnlw/qp_solution.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace kamdnlw {

namespace {

bool canonical(const std::vector<int>& l) {
  for (int v : l) {
    if (v > 0) return true;
    if (v < 0) return false;
  }
  return true;  // zero harmonic
}

void enumerate(int dim, int budget, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == dim) {
    if (canonical(cur)) out.push_back(cur);
    return;
  }
  for (int v = -budget; v <= budget; ++v) {
    cur.push_back(v);
    enumerate(dim, budget - std::abs(v), cur, out);
    cur.pop_back();
  }
}

}  // namespace

TorusBasis::TorusBasis(int dim, int L) : dim_(dim), L_(L) {
  if (dim < 1 || L < 0) throw std::invalid_argument("TorusBasis: need dim >= 1 and L >= 0");
  std::vector<int> cur;
  enumerate(dim, L, cur, harmonics_);
  std::stable_sort(harmonics_.begin(), harmonics_.end(), [](const auto& a, const auto& b) {
    int la = 0, lb = 0;
    for (int v : a) la += std::abs(v);
    for (int v : b) lb += std::abs(v);
    return la < lb;
  });
}

std::optional<std::size_t> TorusBasis::index_of(const std::vector<int>& l) const {
  std::vector<int> key = l;
  if (!canonical(key))
    for (int& v : key) v = -v;
  for (std::size_t r = 0; r < harmonics_.size(); ++r)
    if (harmonics_[r] == key) return r;
  return std::nullopt;
}

QPSolution::QPSolution(std::vector<int> sites_, std::vector<double> xi_, int L, int j_max_)
    : sites(std::move(sites_)), xi(std::move(xi_)), j_max(j_max_) {
  if (sites.empty() || sites.size() != xi.size())
    throw std::invalid_argument("QPSolution: sites and xi must be non-empty and aligned");
  basis = TorusBasis(static_cast<int>(sites.size()), L);
  omega.assign(sites.size(), 0.0);
  coeffs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(basis.size()), j_max + 1);
}

double& QPSolution::at(const std::vector<int>& l, int j) {
  const auto r = basis.index_of(l);
  if (!r || j < 0 || j > j_max) throw std::out_of_range("QPSolution: coefficient outside basis");
  return coeffs(static_cast<Eigen::Index>(*r), j);
}

double QPSolution::at(const std::vector<int>& l, int j) const {
  return const_cast<QPSolution*>(this)->at(l, j);
}

QPSolution::Sample QPSolution::at_angles(const std::vector<double>& theta, double x) const {
  Sample s;
  for (std::size_t r = 0; r < basis.size(); ++r) {
    double phase = 0, rate = 0;
    for (int d = 0; d < basis.dim(); ++d) {
      phase += basis[r][d] * theta[d];
      rate += basis[r][d] * omega[d];
    }
    const double c = std::cos(phase), sn = std::sin(phase);
    for (int j = 0; j <= j_max; ++j) {
      const double a = coeffs(static_cast<Eigen::Index>(r), j);
      if (a == 0.0) continue;
      const double cx = std::cos(j * x), sx = std::sin(j * x);
      s.y += a * c * cx;
      s.y_t -= a * rate * sn * cx;
      s.y_x -= a * j * c * sx;
    }
  }
  return s;
}

QPSolution::Sample QPSolution::at_time(double t, double x) const {
  std::vector<double> theta(omega.size());
  for (std::size_t d = 0; d < omega.size(); ++d) theta[d] = omega[d] * t;
  return at_angles(theta, x);
}

std::pair<std::vector<double>, std::vector<double>> QPSolution::grid_state(double t,
                                                                            std::size_t N) const {
  std::vector<double> y(N), v(N);
  for (std::size_t n = 0; n < N; ++n) {
    const auto s = at_time(t, 2.0 * std::numbers::pi * n / static_cast<double>(N));
    y[n] = s.y;
    v[n] = s.y_t;
  }
  return {y, v};
}

std::string to_json(const QPSolution& sol) {
  nlohmann::ordered_json j;
  j["sites"] = sol.sites;
  j["xi"] = sol.xi;
  j["omega"] = sol.omega;
  j["L"] = sol.basis.L();
  j["j_max"] = sol.j_max;
  auto table = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < sol.basis.size(); ++r)
    for (int q = 0; q <= sol.j_max; ++q) {
      const double c = sol.coeffs(static_cast<Eigen::Index>(r), q);
      if (c != 0.0) table.push_back({{"l", sol.basis[r]}, {"j", q}, {"c", c}});
    }
  j["coefficients"] = std::move(table);
  return j.dump(2);
}

QPSolution qp_solution_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  QPSolution sol(j.at("sites").get<std::vector<int>>(), j.at("xi").get<std::vector<double>>(),
                 j.at("L").get<int>(), j.at("j_max").get<int>());
  sol.omega = j.at("omega").get<std::vector<double>>();
  for (const auto& e : j.at("coefficients"))
    sol.at(e.at("l").get<std::vector<int>>(), e.at("j").get<int>()) = e.at("c").get<double>();
  return sol;
}

}  // namespace kamdnlw
