#pragma once

// FFTW planning is not thread-safe; all plan creation and destruction goes
// through this lock. Executing an existing plan on new arrays is safe.

#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

#include <fftw3.h>

namespace roughflow::detail {

std::mutex& fftw_planner_mutex();

/// In-place-capable complex DFT of a fixed size (sign −1 forward, +1 backward).
class ComplexFft {
 public:
  ComplexFft(std::size_t n, int sign);
  ~ComplexFft();
  ComplexFft(const ComplexFft&) = delete;
  ComplexFft& operator=(const ComplexFft&) = delete;

  std::size_t size() const noexcept { return n_; }
  /// Transforms `data` (length n) in place; unnormalized.
  void run(std::vector<std::complex<double>>& data) const;

 private:
  std::size_t n_;
  fftw_plan plan_;
};

}  // namespace roughflow::detail
