#include "phasekit/loss_noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace phasekit {

LossSpec LossSpec::smoothed(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("LossSpec: smoothing epsilon must be > 0");
  return {LossKind::gaussian_smoothed, eps};
}

double loss(const LossSpec& spec, const CVector& u, const RVector& b) {
  if (u.size() != b.size()) throw std::invalid_argument("loss: length mismatch");
  double total = 0.0;
  switch (spec.kind) {
    case LossKind::poisson:
      for (Index j = 0; j < u.size(); ++j) {
        const double i = std::norm(u[j]);
        const double b2 = b[j] * b[j];
        if (b2 == 0.0) {
          total += i;
        } else if (i == 0.0) {
          return std::numeric_limits<double>::infinity();
        } else {
          total += i - b2 * std::log(i);
        }
      }
      return total;
    case LossKind::gaussian_amplitude:
      return 0.5 * (u.cwiseAbs() - b).squaredNorm();
    case LossKind::gaussian_intensity:
      return 0.5 * (u.cwiseAbs2() - b.cwiseAbs2()).squaredNorm();
    case LossKind::gaussian_smoothed: {
      if (!(spec.epsilon > 0.0)) throw std::invalid_argument("loss: smoothing epsilon must be > 0");
      for (Index j = 0; j < u.size(); ++j) {
        const double d = std::sqrt(std::norm(u[j]) + spec.epsilon) -
                         std::sqrt(b[j] * b[j] + spec.epsilon);
        total += d * d;
      }
      return 0.5 * total;
    }
  }
  throw std::invalid_argument("loss: unknown kind");
}

CVector gaussian_subgradient(const CVector& x, const RVector& b, const MeasurementOperator& A) {
  return x - A.adjoint(project_data(b, A.forward(x)));
}

CVector prox_gaussian(const CVector& u, const RVector& b, double rho) {
  if (rho < 0.0) throw std::invalid_argument("prox_gaussian: rho < 0");
  if (u.size() != b.size()) throw std::invalid_argument("prox_gaussian: length mismatch");
  const RVector mag = (b + rho * u.cwiseAbs()) / (rho + 1.0);
  return mag.cast<cplx>().cwiseProduct(sgn(u));
}

CVector intensity_gradient(const CVector& z, const RVector& y, const CMatrix& A) {
  if (A.cols() != z.size() || A.rows() != y.size())
    throw std::invalid_argument("intensity_gradient: shape mismatch");
  const CVector az = A * z;
  const CVector w = (az.cwiseAbs2() - y).cast<cplx>().cwiseProduct(az);
  return A.adjoint() * w / double(y.size());
}

CVector intensity_gradient(const CVector& z, const RVector& y, const MeasurementOperator& A) {
  const CVector az = A.forward(z);
  if (az.size() != y.size()) throw std::invalid_argument("intensity_gradient: shape mismatch");
  const CVector w = (az.cwiseAbs2() - y).cast<cplx>().cwiseProduct(az);
  return A.adjoint(w) / double(y.size());
}

double intensity_loss(const CVector& z, const RVector& y, const CMatrix& A) {
  if (A.cols() != z.size() || A.rows() != y.size())
    throw std::invalid_argument("intensity_loss: shape mismatch");
  return 0.5 * ((A * z).cwiseAbs2() - y).squaredNorm() / double(y.size());
}

AmplitudeData apply_poisson_noise(const RVector& intensities, double scale, std::uint64_t seed) {
  if (!(scale > 0.0)) throw std::invalid_argument("apply_poisson_noise: scale must be > 0");
  std::mt19937_64 rng(seed);
  AmplitudeData out{RVector(intensities.size()), "poisson", std::nullopt};
  for (Index j = 0; j < intensities.size(); ++j) {
    if (intensities[j] < 0.0) throw std::invalid_argument("apply_poisson_noise: negative intensity");
    const double mean = scale * intensities[j];
    double counts = 0.0;
    if (mean > 0.0) {
      std::poisson_distribution<long long> d(mean);
      counts = double(d(rng));
    }
    out.values[j] = std::sqrt(counts / scale);
  }
  return out;
}

AmplitudeData apply_rayleigh_noise(const MeasurementOperator& A, const CVector& x, double sigma,
                                   std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("apply_rayleigh_noise: sigma < 0");
  const CVector ax = A.forward(x);
  AmplitudeData out{ax.cwiseAbs(), "rayleigh", std::nullopt};
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma / std::sqrt(2.0));
  for (Index j = 0; j < ax.size(); ++j) {
    const double re = d(rng);
    const double im = d(rng);
    out.values[j] = std::abs(ax[j] + cplx(re, im));
  }
  return out;
}

AmplitudeData apply_thermal_noise(const RVector& clean, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("apply_thermal_noise: sigma < 0");
  AmplitudeData out{clean.cwiseAbs(), "thermal", std::nullopt};
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sigma);
  for (Index j = 0; j < clean.size(); ++j)
    out.values[j] = std::sqrt(std::max(0.0, clean[j] * clean[j] + d(rng)));
  return out;
}

namespace {

// g(lambda) = E[(sqrt(n) - sqrt(lambda))^2], n ~ Poisson(lambda).
double poisson_sqrt_mse_exact(double lambda) {
  if (lambda <= 0.0) return 0.0;
  const int kmax = int(lambda + 20.0 * std::sqrt(lambda) + 40.0);
  double e_sqrt = 0.0;
  for (int k = 1; k <= kmax; ++k) {
    const double logp = -lambda + k * std::log(lambda) - std::lgamma(k + 1.0);
    e_sqrt += std::sqrt(double(k)) * std::exp(logp);
  }
  return std::max(0.0, 2.0 * lambda - 2.0 * std::sqrt(lambda) * e_sqrt);
}

constexpr double kTableMin = 1e-6;
constexpr double kTableMax = 200.0;
constexpr int kTableSize = 4000;

const std::vector<double>& mse_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kTableSize);
    const double step = std::log(kTableMax / kTableMin) / (kTableSize - 1);
    for (int i = 0; i < kTableSize; ++i) t[i] = poisson_sqrt_mse_exact(kTableMin * std::exp(i * step));
    return t;
  }();
  return table;
}

double poisson_sqrt_mse(double lambda) {
  if (lambda <= 0.0) return 0.0;
  if (lambda < kTableMin) return 2.0 * lambda;
  if (lambda >= kTableMax) return 0.25 + 7.0 / (64.0 * lambda);
  const std::vector<double>& t = mse_table();
  const double pos = std::log(lambda / kTableMin) / std::log(kTableMax / kTableMin) * (kTableSize - 1);
  const int i = std::min(kTableSize - 2, int(pos));
  const double f = pos - i;
  return (1.0 - f) * t[i] + f * t[i + 1];
}

}  // namespace

double expected_poisson_nsr(const RVector& clean, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("expected_poisson_nsr: scale must be > 0");
  const double nc = clean.norm();
  if (nc == 0.0) throw std::invalid_argument("expected_poisson_nsr: zero clean signal");
  double mse = 0.0;
  for (Index j = 0; j < clean.size(); ++j) mse += poisson_sqrt_mse(scale * clean[j] * clean[j]);
  return std::sqrt(mse / scale) / nc;
}

double poisson_scale_for_nsr(const RVector& clean, double target) {
  if (!(target > 0.0)) throw std::invalid_argument("poisson_scale_for_nsr: target must be > 0");
  // Expected NSR decreases with scale; bisect in log-scale.
  double lo = std::log(1e-12 / std::max(1e-300, clean.squaredNorm()));
  double hi = std::log(1e18 / std::max(1e-300, clean.squaredNorm()));
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expected_poisson_nsr(clean, std::exp(mid)) > target)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace phasekit
