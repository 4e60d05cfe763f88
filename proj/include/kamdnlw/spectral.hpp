#pragma once

// Thin helpers over Eigen's FFT for 2*pi-periodic grids x_n = 2*pi*n/N.
// Coefficient arrays are stored in FFT order (index j mod N) and normalized
// so that f(x_n) = sum_j c_j e^{i j x_n}.

#include <complex>
#include <vector>

namespace kamdnlw::spectral {

using cplx = std::complex<double>;

std::vector<cplx> forward(const std::vector<cplx>& grid);
std::vector<cplx> forward(const std::vector<double>& grid);
std::vector<cplx> inverse(const std::vector<cplx>& coeffs);
std::vector<double> inverse_real(const std::vector<cplx>& coeffs);

/// Signed wavenumber of FFT slot s on an N-point grid, in [-N/2, N/2).
inline int wavenumber(std::size_t s, std::size_t N) {
  const int k = static_cast<int>(s);
  return k < static_cast<int>(N / 2) ? k : k - static_cast<int>(N);
}

/// FFT slot of wavenumber j on an N-point grid.
inline std::size_t slot(int j, std::size_t N) {
  const int n = static_cast<int>(N);
  return static_cast<std::size_t>(((j % n) + n) % n);
}

/// Spectral x-derivative of a real periodic grid function (Nyquist mode zeroed).
std::vector<double> derivative(const std::vector<double>& grid);

/// Grid abscissae 2*pi*n/N.
std::vector<double> abscissae(std::size_t N);

}  // namespace kamdnlw::spectral
