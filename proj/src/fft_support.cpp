#include "fft_support.hpp"

#include <algorithm>

#include "roughflow/errors.hpp"

namespace roughflow::detail {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

ComplexFft::ComplexFft(std::size_t n, int sign) : n_(n) {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_complex* buf = fftw_alloc_complex(n);
  plan_ = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE);
  fftw_free(buf);
  if (plan_ == nullptr) throw NumericalError("FFTW could not create a plan", 0.0);
}

ComplexFft::~ComplexFft() {
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(plan_);
}

void ComplexFft::run(std::vector<std::complex<double>>& data) const {
  if (data.size() != n_) throw ShapeError("FFT buffer has the wrong length");
  // std::vector storage is only guaranteed 16-byte aligned; copy through an
  // FFTW buffer so the planned alignment assumptions hold.
  fftw_complex* buf = fftw_alloc_complex(n_);
  auto* z = reinterpret_cast<std::complex<double>*>(buf);
  std::copy(data.begin(), data.end(), z);
  fftw_execute_dft(plan_, buf, buf);
  std::copy(z, z + n_, data.begin());
  fftw_free(buf);
}

}  // namespace roughflow::detail
