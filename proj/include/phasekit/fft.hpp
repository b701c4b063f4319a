#pragma once

#include <memory>

#include "phasekit/core.hpp"

namespace phasekit {

// Unnormalized 2-D DFT of a fixed rows x cols shape, backed by FFTW.
//   forward:  F(k) = sum_p f(p) e^{-2 pi i p.k / dims}
//   backward: f(p) = sum_k F(k) e^{+2 pi i p.k / dims}
// Execution is thread-safe; plans are shared through fft_plan().
class Fft2 {
 public:
  Fft2(int rows, int cols);
  ~Fft2();
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  // in and out must not alias and must hold rows*cols entries.
  void forward(const cplx* in, cplx* out) const;
  void backward(const cplx* in, cplx* out) const;

 private:
  int rows_;
  int cols_;
  void* forward_plan_;
  void* backward_plan_;
};

std::shared_ptr<const Fft2> fft_plan(int rows, int cols);

}  // namespace phasekit
