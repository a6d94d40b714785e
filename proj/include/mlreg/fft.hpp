#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace mlreg {

using cplx = std::complex<double>;

// Unnormalized in-place DFT over a row-major (nx, ny) array; sign -1 is forward.
// ny == 1 means a 1D transform.
void dft_inplace(std::vector<cplx>& data, std::array<std::size_t, 2> shape, int sign);

// Signed integer frequency index of bin k in a length-n transform.
inline long long signed_bin(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long long>(k) : static_cast<long long>(k) - static_cast<long long>(n);
}

}  // namespace mlreg
