#pragma once

#include <cstdint>

#include "phasekit/operators.hpp"

namespace phasekit {

enum class LossKind { poisson, gaussian_amplitude, gaussian_intensity, gaussian_smoothed };

struct LossSpec {
  LossKind kind = LossKind::gaussian_amplitude;
  double epsilon = 0.0;  // smoothing, must be > 0 for gaussian_smoothed

  static LossSpec poisson() { return {LossKind::poisson, 0.0}; }
  static LossSpec amplitude() { return {LossKind::gaussian_amplitude, 0.0}; }
  static LossSpec intensity() { return {LossKind::gaussian_intensity, 0.0}; }
  static LossSpec smoothed(double eps);
};

// Poisson:   sum |u|^2 - b^2 ln |u|^2   (+inf where u = 0 < b)
// amplitude: 1/2 || |u| - b ||^2
// intensity: 1/2 || |u|^2 - b^2 ||^2
// smoothed:  1/2 || sqrt(|u|^2 + eps) - sqrt(b^2 + eps) ||^2
double loss(const LossSpec& spec, const CVector& u, const RVector& b);

// x - A^*[b (.) sgn(Ax)], twice the Wirtinger gradient of the amplitude loss
// at Ax for isometric A.
CVector gaussian_subgradient(const CVector& x, const RVector& b, const MeasurementOperator& A);

// (b + rho |u|) / (rho + 1) (.) sgn(u).
CVector prox_gaussian(const CVector& u, const RVector& b, double rho);

// (1/N) sum_k (|a_k^* z|^2 - y_k) (a_k^* z) a_k; rows of A are a_k^*.
CVector intensity_gradient(const CVector& z, const RVector& y, const CMatrix& A);
CVector intensity_gradient(const CVector& z, const RVector& y, const MeasurementOperator& A);
// (1/2N) sum_k (|a_k^* z|^2 - y_k)^2.
double intensity_loss(const CVector& z, const RVector& y, const CMatrix& A);

// Counts ~ Poisson(scale * I); returns amplitudes sqrt(counts / scale).
AmplitudeData apply_poisson_noise(const RVector& intensities, double scale, std::uint64_t seed);
// b = |Ax + eta|, eta circular complex Gaussian with E|eta_k|^2 = sigma^2.
AmplitudeData apply_rayleigh_noise(const MeasurementOperator& A, const CVector& x, double sigma,
                                   std::uint64_t seed);
// b^2 = |clean|^2 + eta, eta ~ N(0, sigma^2), negative intensities clamped to 0.
AmplitudeData apply_thermal_noise(const RVector& clean, double sigma, std::uint64_t seed);

// Expected NSR of apply_poisson_noise at the given scale (exact Poisson
// moments for small counts, delta-method tail for large ones).
double expected_poisson_nsr(const RVector& clean, double scale);
// Photon scale whose expected NSR equals target.
double poisson_scale_for_nsr(const RVector& clean, double target);

}  // namespace phasekit
