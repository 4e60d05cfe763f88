#include "kamdnlw/spectral.hpp"

#include <numbers>
#include <unsupported/Eigen/FFT>

namespace kamdnlw::spectral {

std::vector<cplx> forward(const std::vector<cplx>& grid) {
  Eigen::FFT<double> fft;
  std::vector<cplx> out;
  fft.fwd(out, grid);
  const double inv_n = 1.0 / static_cast<double>(grid.size());
  for (auto& c : out) c *= inv_n;
  return out;
}

std::vector<cplx> forward(const std::vector<double>& grid) {
  return forward(std::vector<cplx>(grid.begin(), grid.end()));
}

std::vector<cplx> inverse(const std::vector<cplx>& coeffs) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<cplx> out;
  fft.inv(out, coeffs);
  return out;
}

std::vector<double> inverse_real(const std::vector<cplx>& coeffs) {
  const auto g = inverse(coeffs);
  std::vector<double> out(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = g[n].real();
  return out;
}

std::vector<double> derivative(const std::vector<double>& grid) {
  auto c = forward(grid);
  const std::size_t N = c.size();
  for (std::size_t s = 0; s < N; ++s) {
    const int k = wavenumber(s, N);
    c[s] *= (2 * k == -static_cast<int>(N)) ? cplx{} : cplx{0.0, static_cast<double>(k)};
  }
  return inverse_real(c);
}

std::vector<double> abscissae(std::size_t N) {
  std::vector<double> x(N);
  for (std::size_t n = 0; n < N; ++n) x[n] = 2.0 * std::numbers::pi * n / static_cast<double>(N);
  return x;
}

}  // namespace kamdnlw::spectral
