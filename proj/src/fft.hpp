#pragma once

#include <complex>
#include <vector>

namespace kp::fft {

// In-place complex DFT on a row-major d-dimensional array.
// sign = -1 forward (e^{-i...}), sign = +1 backward (e^{+i...}).
// Unnormalized, matching the usual FFTW convention.
void transform(std::vector<std::complex<double>>& data, const std::vector<int>& dims, int sign);

// Circular convolution c[w] = sum_v a[v] * b[w - v] on the index torus.
std::vector<double> circular_convolve(const std::vector<double>& a, const std::vector<double>& b,
                                      const std::vector<int>& dims);

}  // namespace kp::fft
