#include "phasekit/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "phasekit/fft.hpp"

namespace phasekit {

ComplexImage::ComplexImage(int height, int width, cplx fill)
    : height_(height), width_(width) {
  if (height < 0 || width < 0) throw std::invalid_argument("ComplexImage: negative dimension");
  data_ = CVector::Constant(Index(height) * width, fill);
}

ComplexImage::ComplexImage(int height, int width, CVector data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height < 0 || width < 0) throw std::invalid_argument("ComplexImage: negative dimension");
  if (data_.size() != Index(height) * width)
    throw std::invalid_argument("ComplexImage: data length does not match width*height");
  if (!data_.allFinite()) throw std::invalid_argument("ComplexImage: non-finite entry");
}

const cplx& ComplexImage::wrapped(int row, int col) const {
  int r = row % height_;
  int c = col % width_;
  if (r < 0) r += height_;
  if (c < 0) c += width_;
  return (*this)(r, c);
}

CVector sgn(const CVector& u) {
  CVector out(u.size());
  for (Index j = 0; j < u.size(); ++j) {
    const double a = std::abs(u[j]);
    out[j] = a > 0.0 ? u[j] / a : cplx(1.0, 0.0);
  }
  return out;
}

double dist(const CVector& z, const CVector& x) {
  if (z.size() != x.size()) throw std::invalid_argument("dist: length mismatch");
  // Optimal phase aligns x onto z; residual evaluated directly to keep
  // full relative precision near zero.
  const cplx p = x.dot(z);  // x^* z
  const double a = std::abs(p);
  const cplx phase = a > 0.0 ? p / a : cplx(1.0, 0.0);
  return (z - phase * x).norm();
}

double correlation(const CVector& z, const CVector& x) {
  if (z.size() != x.size()) throw std::invalid_argument("correlation: length mismatch");
  const double nz = z.norm(), nx = x.norm();
  if (nz == 0.0 || nx == 0.0) return 0.0;
  return std::abs(x.dot(z)) / (nz * nx);
}

double relative_residual(const RVector& b, const CVector& u) {
  if (b.size() != u.size()) throw std::invalid_argument("relative_residual: length mismatch");
  const double nb = b.norm();
  if (nb == 0.0) throw std::invalid_argument("relative_residual: zero data");
  return (b - u.cwiseAbs()).norm() / nb;
}

double nsr(const RVector& b, const RVector& clean) {
  if (b.size() != clean.size()) throw std::invalid_argument("nsr: length mismatch");
  const double nc = clean.norm();
  if (nc == 0.0) throw std::invalid_argument("nsr: zero clean signal");
  return (b - clean).norm() / nc;
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// c(r) = sum_p w(p) e^{i 2 pi p.r} with first and second derivatives in r.
struct RampCorrelation {
  cplx value;
  cplx d[2];
  cplx dd[2][2];
};

RampCorrelation ramp_correlation(const ComplexImage& w, double r0, double r1,
                                 bool derivatives) {
  RampCorrelation out{};
  // Separable phase factors: e^{i 2 pi p0 r0} e^{i 2 pi p1 r1}.
  std::vector<cplx> e0(w.height()), e1(w.width());
  for (int p = 0; p < w.height(); ++p) e0[p] = std::polar(1.0, kTwoPi * p * r0);
  for (int p = 0; p < w.width(); ++p) e1[p] = std::polar(1.0, kTwoPi * p * r1);
  for (int p0 = 0; p0 < w.height(); ++p0) {
    cplx row(0.0), row_d1(0.0), row_dd11(0.0);
    for (int p1 = 0; p1 < w.width(); ++p1) {
      const cplx t = w(p0, p1) * e1[p1];
      row += t;
      if (derivatives) {
        row_d1 += double(p1) * t;
        row_dd11 += double(p1) * double(p1) * t;
      }
    }
    row *= e0[p0];
    out.value += row;
    if (derivatives) {
      row_d1 *= e0[p0];
      row_dd11 *= e0[p0];
      out.d[0] += double(p0) * row;
      out.d[1] += row_d1;
      out.dd[0][0] += double(p0) * double(p0) * row;
      out.dd[0][1] += double(p0) * row_d1;
      out.dd[1][1] += row_dd11;
    }
  }
  if (derivatives) {
    const cplx i2pi(0.0, kTwoPi);
    out.d[0] *= i2pi;
    out.d[1] *= i2pi;
    const double m = -kTwoPi * kTwoPi;
    out.dd[0][0] *= m;
    out.dd[0][1] *= m;
    out.dd[1][1] *= m;
    out.dd[1][0] = out.dd[0][1];
  }
  return out;
}

double objective(const ComplexImage& w, double r0, double r1) {
  return std::norm(ramp_correlation(w, r0, r1, false).value);
}

// Golden-section maximization of f on [lo, hi].
template <class F>
double golden_max(F f, double lo, double hi, int iters) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iters; ++k) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

}  // namespace

AffineFit affine_phase_fit(const ComplexImage& x_hat, const ComplexImage& x) {
  if (!x_hat.same_shape(x)) throw std::invalid_argument("affine_phase_error: shape mismatch");
  const double nx = x.vec().norm();
  if (nx == 0.0) throw std::invalid_argument("affine_phase_error: zero reference image");
  const double nh2 = x_hat.vec().squaredNorm();
  if (nh2 == 0.0) return {1.0, 0.0, 0.0, cplx(0.0)};

  const int h = x.height(), wd = x.width();
  ComplexImage w(h, wd);
  w.vec() = x_hat.vec().conjugate().cwiseProduct(x.vec());

  // Coarse search: 4x oversampled frequency grid via one inverse FFT.
  const int g0 = 4 * h, g1 = 4 * wd;
  std::vector<cplx> padded(std::size_t(g0) * g1, cplx(0.0)), spec(padded.size());
  for (int p0 = 0; p0 < h; ++p0)
    for (int p1 = 0; p1 < wd; ++p1) padded[std::size_t(p0) * g1 + p1] = w(p0, p1);
  fft_plan(g0, g1)->backward(padded.data(), spec.data());
  std::size_t best = 0;
  for (std::size_t k = 1; k < spec.size(); ++k)
    if (std::norm(spec[k]) > std::norm(spec[best])) best = k;
  double r0 = double(best / g1) / g0;
  double r1 = double(best % g1) / g1;

  // Coordinate-wise golden-section refinement inside one coarse cell.
  for (int sweep = 0; sweep < 2; ++sweep) {
    r0 = golden_max([&](double t) { return objective(w, t, r1); }, r0 - 1.0 / g0,
                    r0 + 1.0 / g0, 40);
    r1 = golden_max([&](double t) { return objective(w, r0, t); }, r1 - 1.0 / g1,
                    r1 + 1.0 / g1, 40);
  }

  // Newton polish on |c(r)|^2; the gradient keeps full precision where the
  // objective itself is flat to rounding.
  for (int it = 0; it < 30; ++it) {
    const RampCorrelation rc = ramp_correlation(w, r0, r1, true);
    Eigen::Vector2d g;
    Eigen::Matrix2d H;
    for (int j = 0; j < 2; ++j) {
      g[j] = 2.0 * std::real(std::conj(rc.value) * rc.d[j]);
      for (int k = 0; k < 2; ++k)
        H(j, k) = 2.0 * std::real(std::conj(rc.d[k]) * rc.d[j] +
                                  std::conj(rc.value) * rc.dd[j][k]);
    }
    if (!(H.determinant() > 0.0 && H(0, 0) < 0.0)) break;
    const Eigen::Vector2d step = -H.ldlt().solve(g);
    if (!step.allFinite()) break;
    const double f_old = std::norm(rc.value);
    const double f_new = objective(w, r0 + step[0], r1 + step[1]);
    if (f_new < f_old * (1.0 - 1e-15)) break;
    r0 += step[0];
    r1 += step[1];
    if (step.norm() < 1e-15) break;
  }

  const cplx alpha = ramp_correlation(w, r0, r1, false).value / nh2;
  double resid2 = 0.0;
  for (int p0 = 0; p0 < h; ++p0)
    for (int p1 = 0; p1 < wd; ++p1) {
      const cplx ramp = std::polar(1.0, -kTwoPi * (p0 * r0 + p1 * r1));
      resid2 += std::norm(x(p0, p1) - alpha * ramp * x_hat(p0, p1));
    }
  r0 -= std::floor(r0);
  r1 -= std::floor(r1);
  return {std::sqrt(resid2) / nx, r0, r1, alpha};
}

double affine_phase_error(const ComplexImage& x_hat, const ComplexImage& x) {
  return affine_phase_fit(x_hat, x).error;
}

ComplexImage conjugate_inversion(const ComplexImage& x) {
  ComplexImage out(x.height(), x.width());
  for (int r = 0; r < x.height(); ++r)
    for (int c = 0; c < x.width(); ++c) out(r, c) = std::conj(x.wrapped(-r, -c));
  return out;
}

ComplexImage circular_shift(const ComplexImage& x, int shift_row, int shift_col) {
  ComplexImage out(x.height(), x.width());
  for (int r = 0; r < x.height(); ++r)
    for (int c = 0; c < x.width(); ++c) out(r, c) = x.wrapped(r - shift_row, c - shift_col);
  return out;
}

double trivial_ambiguity_distance(const ComplexImage& x_hat, const ComplexImage& x) {
  if (!x_hat.same_shape(x))
    throw std::invalid_argument("trivial_ambiguity_distance: shape mismatch");
  const int h = x.height(), w = x.width();
  if (x.size() == 0) return 0.0;
  const auto fft = fft_plan(h, w);
  const std::size_t n = std::size_t(h) * w;
  std::vector<cplx> fh(n), fy(n), prod(n), corr(n);
  fft->forward(x_hat.vec().data(), fh.data());

  double best = std::numeric_limits<double>::infinity();
  for (const ComplexImage& y : {x, conjugate_inversion(x)}) {
    // corr(m) = sum_p x_hat(p) conj(y(p - m)), all shifts at once.
    fft->forward(y.vec().data(), fy.data());
    for (std::size_t k = 0; k < n; ++k) prod[k] = fh[k] * std::conj(fy[k]);
    fft->backward(prod.data(), corr.data());
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(corr[k]) > std::abs(corr[arg])) arg = k;
    const ComplexImage shifted = circular_shift(y, int(arg / w), int(arg % w));
    best = std::min(best, dist(x_hat.vec(), shifted.vec()));
  }
  return best;
}

}  // namespace phasekit
