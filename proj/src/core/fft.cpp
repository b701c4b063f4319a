#include "phasekit/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace phasekit {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* as_fftw(const cplx* p) {
  return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p));
}

}  // namespace

Fft2::Fft2(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("Fft2: non-positive shape");
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_complex* a = fftw_alloc_complex(std::size_t(rows) * cols);
  fftw_complex* b = fftw_alloc_complex(std::size_t(rows) * cols);
  // Estimate-mode plans do not depend on timing, so results repeat across processes.
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_2d(rows, cols, a, b, FFTW_FORWARD, flags);
  backward_plan_ = fftw_plan_dft_2d(rows, cols, a, b, FFTW_BACKWARD, flags);
  fftw_free(a);
  fftw_free(b);
  if (!forward_plan_ || !backward_plan_) throw std::runtime_error("Fft2: planning failed");
}

Fft2::~Fft2() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  fftw_destroy_plan(static_cast<fftw_plan>(backward_plan_));
}

void Fft2::forward(const cplx* in, cplx* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(in), as_fftw(out));
}

void Fft2::backward(const cplx* in, cplx* out) const {
  fftw_execute_dft(static_cast<fftw_plan>(backward_plan_), as_fftw(in), as_fftw(out));
}

std::shared_ptr<const Fft2> fft_plan(int rows, int cols) {
  static std::mutex cache_mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const Fft2>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto& slot = cache[{rows, cols}];
  if (!slot) slot = std::make_shared<const Fft2>(rows, cols);
  return slot;
}

}  // namespace phasekit
