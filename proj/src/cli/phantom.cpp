#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "phasekit/cli.hpp"

namespace phasekit::cli {

namespace {

struct Ellipse {
  double intensity, a, b, x0, y0, phi_deg;
};

// Modified (high-contrast) head: sums stay within [0, 1].
constexpr Ellipse kHead[] = {
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},        {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},       {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},     {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},   {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
};

void require_size(int n) {
  if (n < 1) throw std::invalid_argument("phantom: size must be >= 1");
}

void require_range(double r) {
  if (!(r >= 0.0) || !std::isfinite(r))
    throw std::invalid_argument("phantom: phase range must be finite and >= 0");
}

}  // namespace

ComplexImage shepp_logan(int n) {
  require_size(n);
  ComplexImage img(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      // Pixel centers on [-1, 1]^2, y pointing up.
      const double x = (2.0 * j + 1.0) / n - 1.0;
      const double y = 1.0 - (2.0 * i + 1.0) / n;
      double v = 0.0;
      for (const Ellipse& e : kHead) {
        const double t = e.phi_deg * std::numbers::pi / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double u = dx * std::cos(t) + dy * std::sin(t);
        const double w = -dx * std::sin(t) + dy * std::cos(t);
        if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0) v += e.intensity;
      }
      img(i, j) = std::clamp(v, 0.0, 1.0);
    }
  return img;
}

ComplexImage random_phase_phantom(const ComplexImage& modulus, double phase_range,
                                  std::uint64_t seed) {
  require_range(phase_range);
  if (modulus.size() == 0) throw std::invalid_argument("phantom: empty modulus");
  for (Index k = 0; k < modulus.size(); ++k)
    if (modulus.vec()[k].imag() != 0.0 || modulus.vec()[k].real() < 0.0)
      throw std::invalid_argument("phantom: modulus must be real and nonnegative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(-std::numbers::pi * phase_range,
                                               std::numbers::pi * phase_range);
  ComplexImage out(modulus.height(), modulus.width());
  for (Index k = 0; k < out.size(); ++k)
    out.vec()[k] = std::polar(modulus.vec()[k].real(), phase(rng));
  return out;
}

ComplexImage smooth_phantom(int n, std::uint64_t seed) {
  require_size(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ComplexImage x(n, n);
  for (int b = 0; b < 4; ++b) {
    const double ci = u(rng) * n, cj = u(rng) * n;
    const double s = n * (0.15 + 0.2 * u(rng)), a = 0.5 + 0.5 * u(rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        x(i, j) += a * std::exp(-((i - ci) * (i - ci) + (j - cj) * (j - cj)) / (2 * s * s));
  }
  x.vec() /= x.vec().cwiseAbs().maxCoeff();
  return x;
}

ComplexImage random_object(int n, double phase_range, std::uint64_t seed) {
  require_size(n);
  require_range(phase_range);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mod(0.5, 1.0);
  std::uniform_real_distribution<double> phase(-std::numbers::pi * phase_range,
                                               std::numbers::pi * phase_range);
  ComplexImage x(n, n);
  for (Index k = 0; k < x.size(); ++k) {
    const double r = mod(rng);
    x.vec()[k] = std::polar(r, phase(rng));
  }
  return x;
}

}  // namespace phasekit::cli
