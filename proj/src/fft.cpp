#include "mlreg/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace mlreg {

namespace {

struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& kv : plans) fftw_destroy_plan(kv.second);
  }

  fftw_plan get(std::size_t nx, std::size_t ny, int sign) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(nx, ny, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nx * ny));
    fftw_plan p = ny == 1 ? fftw_plan_dft_1d(int(nx), buf, buf, sign, FFTW_ESTIMATE)
                          : fftw_plan_dft_2d(int(nx), int(ny), buf, buf, sign, FFTW_ESTIMATE);
    fftw_free(buf);
    if (!p) throw std::runtime_error("fftw planning failed");
    plans.emplace(key, p);
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void dft_inplace(std::vector<cplx>& data, std::array<std::size_t, 2> shape, int sign) {
  const std::size_t n = shape[0] * shape[1];
  if (data.size() != n) throw std::invalid_argument("dft_inplace: size does not match shape");
  fftw_plan p = cache().get(shape[0], shape[1], sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  std::memcpy(buf, data.data(), sizeof(fftw_complex) * n);
  fftw_execute_dft(p, buf, buf);
  std::memcpy(static_cast<void*>(data.data()), buf, sizeof(fftw_complex) * n);
  fftw_free(buf);
}

}  // namespace mlreg
