#include "phasekit/holography.hpp"

#include <cmath>
#include <iomanip>
#include <stdexcept>

#include "phasekit/fft.hpp"
#include "phasekit/loss_noise.hpp"

namespace phasekit {

namespace {

void require_square(const ComplexImage& img, int n, const char* what) {
  if (img.height() != n || img.width() != n)
    throw std::invalid_argument(std::string(what) + ": expected an n x n image");
}

bool all_zero(const ComplexImage& img) { return img.vec().isZero(0.0); }

// Corner entry r(n-1, n-1); the diagonal of T(r) is its conjugate.
cplx corner(const ComplexImage& r) { return r(r.height() - 1, r.width() - 1); }

void require_pair(const ComplexImage& a, const ComplexImage& r, const char* what) {
  if (r.height() != r.width() || r.height() == 0)
    throw std::invalid_argument(std::string(what) + ": reference must be square");
  if (!a.same_shape(r)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

}  // namespace

std::string to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::pinhole: return "pinhole";
    case ReferenceKind::slit: return "slit";
    case ReferenceKind::block: return "block";
  }
  return "unknown";
}

ComplexImage make_reference(ReferenceKind kind, int n) {
  if (n < 1) throw std::invalid_argument("make_reference: n must be >= 1");
  ComplexImage r(n, n);
  switch (kind) {
    case ReferenceKind::pinhole:
      r(n - 1, n - 1) = 1.0;
      break;
    case ReferenceKind::slit:
      for (int k = 0; k < n; ++k) r(k, n - 1) = 1.0;
      break;
    case ReferenceKind::block:
      r.vec().setOnes();
      break;
  }
  return r;
}

ComplexImage compose(const ComplexImage& x, const ComplexImage& r) {
  const int n = x.height();
  require_square(x, n, "compose");
  require_square(r, n, "compose");
  ComplexImage c(n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      c(i, j) = x(i, j);
      c(i, j + n) = r(i, j);
    }
  return c;
}

ComplexImage compose_dual(const ComplexImage& x, const ComplexImage& r_pinhole,
                          const ComplexImage& r_block) {
  const int n = x.height();
  require_square(x, n, "compose_dual");
  require_square(r_pinhole, n, "compose_dual");
  require_square(r_block, n, "compose_dual");
  ComplexImage c(2 * n, 2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      c(i, j) = x(i, j);
      c(i, j + n) = r_pinhole(i, j);
      c(i + n, j) = r_block(i, j);
    }
  return c;
}

void HoloMeasurement::validate() const {
  if (specimen < 1 || composite_rows < specimen || composite_cols < specimen)
    throw std::invalid_argument("HoloMeasurement: invalid composite dimensions");
  if (grid_rows < composite_rows || grid_cols < composite_cols)
    throw std::invalid_argument("HoloMeasurement: grid smaller than composite");
  if (intensities.size() != Index(grid_rows) * grid_cols)
    throw std::invalid_argument("HoloMeasurement: intensity count does not match grid");
  if (intensities.size() > 0 && intensities.minCoeff() < 0.0)
    throw std::invalid_argument("HoloMeasurement: negative intensity");
}

int default_holo_grid(int n) { return 8 * n; }

HoloMeasurement measure_holo(const ComplexImage& composite, int specimen, int grid_rows,
                             int grid_cols) {
  HoloMeasurement m;
  m.specimen = specimen;
  m.composite_rows = composite.height();
  m.composite_cols = composite.width();
  m.grid_rows = grid_rows;
  m.grid_cols = grid_cols;
  m.intensities = RVector::Zero(Index(grid_rows) * grid_cols);
  m.validate();
  CVector padded = CVector::Zero(m.intensities.size());
  for (int i = 0; i < composite.height(); ++i)
    for (int j = 0; j < composite.width(); ++j) padded[Index(i) * grid_cols + j] = composite(i, j);
  CVector spectrum(padded.size());
  fft_plan(grid_rows, grid_cols)->forward(padded.data(), spectrum.data());
  m.intensities = spectrum.cwiseAbs2();
  return m;
}

HoloMeasurement add_photon_noise(const HoloMeasurement& clean, double scale, std::uint64_t seed) {
  clean.validate();
  if (!(scale > 0.0)) throw std::invalid_argument("add_photon_noise: scale must be > 0");
  HoloMeasurement noisy = clean;
  noisy.intensities = apply_poisson_noise(clean.intensities, scale, seed).values.array().square();
  return noisy;
}

ComplexImage autocorr_from_magnitudes(const HoloMeasurement& meas, double wrap_tolerance) {
  meas.validate();
  const int H = meas.composite_rows, W = meas.composite_cols;
  const int M1 = meas.grid_rows, M2 = meas.grid_cols;
  if (M1 < 2 * H - 1 || M2 < 2 * W - 1)
    throw std::invalid_argument("autocorr_from_magnitudes: grid aliases the autocorrelation");
  const CVector in = meas.intensities.cast<cplx>();
  CVector circ(in.size());
  fft_plan(M1, M2)->backward(in.data(), circ.data());
  circ /= double(M1) * double(M2);

  ComplexImage out(2 * H - 1, 2 * W - 1);
  double inside = 0.0, outside = 0.0;
  for (int a = 0; a < M1; ++a) {
    const int s1 = a < H ? a : a - M1;
    const bool row_ok = s1 > -H;
    for (int b = 0; b < M2; ++b) {
      const int s2 = b < W ? b : b - M2;
      const cplx v = circ[Index(a) * M2 + b];
      if (row_ok && s2 > -W) {
        out(s1 + H - 1, s2 + W - 1) = v;
        inside += std::norm(v);
      } else {
        outside += std::norm(v);
      }
    }
  }
  if (std::sqrt(outside) > wrap_tolerance * std::sqrt(inside + outside))
    throw std::runtime_error("autocorr_from_magnitudes: energy outside the lag window");
  return out;
}

ComplexImage extract_crosscorr(const ComplexImage& autocorr, int n, int row_offset,
                               int col_offset) {
  if (n < 1) throw std::invalid_argument("extract_crosscorr: n must be >= 1");
  if (autocorr.height() % 2 == 0 || autocorr.width() % 2 == 0)
    throw std::invalid_argument("extract_crosscorr: autocorrelation dims must be odd");
  const int h = (autocorr.height() - 1) / 2, w = (autocorr.width() - 1) / 2;
  // Stored index of lag p - (n-1) - offset is p - (n-1) - offset + (h, w).
  const int r0 = h - (n - 1) - row_offset, c0 = w - (n - 1) - col_offset;
  if (r0 < 0 || c0 < 0 || r0 + n > autocorr.height() || c0 + n > autocorr.width())
    throw std::out_of_range("extract_crosscorr: lag range outside the autocorrelation");
  ComplexImage y(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) y(i, j) = autocorr(r0 + i, c0 + j);
  return y;
}

ComplexImage extract_crosscorr(const ComplexImage& autocorr, int n) {
  return extract_crosscorr(autocorr, n, 0, n);
}

ComplexImage apply_reference_operator(const ComplexImage& x, const ComplexImage& r) {
  require_pair(x, r, "apply_reference_operator");
  const int n = r.height();
  ComplexImage y(n, n);
  for (int p1 = 0; p1 < n; ++p1)
    for (int p2 = 0; p2 < n; ++p2) {
      cplx acc = 0.0;
      for (int t1 = 0; t1 <= p1; ++t1)
        for (int t2 = 0; t2 <= p2; ++t2)
          acc += std::conj(r(n - 1 - p1 + t1, n - 1 - p2 + t2)) * x(t1, t2);
      y(p1, p2) = acc;
    }
  return y;
}

ComplexImage apply_reference_adjoint(const ComplexImage& y, const ComplexImage& r) {
  require_pair(y, r, "apply_reference_adjoint");
  const int n = r.height();
  ComplexImage x(n, n);
  for (int t1 = 0; t1 < n; ++t1)
    for (int t2 = 0; t2 < n; ++t2) {
      cplx acc = 0.0;
      for (int p1 = t1; p1 < n; ++p1)
        for (int p2 = t2; p2 < n; ++p2) acc += r(n - 1 - p1 + t1, n - 1 - p2 + t2) * y(p1, p2);
      x(t1, t2) = acc;
    }
  return x;
}

ComplexImage referenced_deconvolve(const ComplexImage& y_block, const ComplexImage& r) {
  require_pair(y_block, r, "referenced_deconvolve");
  const cplx diag = std::conj(corner(r));
  if (diag == cplx(0.0))
    throw std::invalid_argument("referenced_deconvolve: separation condition violated");
  const int n = r.height();
  ComplexImage x(n, n);
  // Row-major order visits every t <= p (componentwise) before p.
  for (int p1 = 0; p1 < n; ++p1)
    for (int p2 = 0; p2 < n; ++p2) {
      cplx acc = y_block(p1, p2);
      for (int t1 = 0; t1 <= p1; ++t1)
        for (int t2 = 0; t2 <= p2; ++t2) {
          if (t1 == p1 && t2 == p2) continue;
          const cplx k = r(n - 1 - p1 + t1, n - 1 - p2 + t2);
          if (k != cplx(0.0)) acc -= std::conj(k) * x(t1, t2);
        }
      x(p1, p2) = acc / diag;
    }
  return x;
}

ComplexImage dual_deconvolve_blocks(const ComplexImage& y_pinhole, const ComplexImage& y_block,
                                    const ComplexImage& r_pinhole, const ComplexImage& r_block,
                                    const DualDeconvOptions& options) {
  require_pair(y_pinhole, r_pinhole, "dual_deconvolve_blocks");
  require_pair(y_block, r_block, "dual_deconvolve_blocks");
  require_pair(r_pinhole, r_block, "dual_deconvolve_blocks");
  const bool p_ok = corner(r_pinhole) != cplx(0.0), b_ok = corner(r_block) != cplx(0.0);
  if (!p_ok && !b_ok)
    throw std::invalid_argument("dual_deconvolve_blocks: degenerate reference portions");
  if (all_zero(r_block)) return referenced_deconvolve(y_pinhole, r_pinhole);
  if (all_zero(r_pinhole)) return referenced_deconvolve(y_block, r_block);

  const int n = r_pinhole.height();
  const auto normal = [&](const CVector& v) -> CVector {
    const ComplexImage img(n, n, v);
    return apply_reference_adjoint(apply_reference_operator(img, r_pinhole), r_pinhole).vec() +
           apply_reference_adjoint(apply_reference_operator(img, r_block), r_block).vec();
  };
  const CVector rhs = apply_reference_adjoint(y_pinhole, r_pinhole).vec() +
                      apply_reference_adjoint(y_block, r_block).vec();
  const double rhs_norm = rhs.norm();
  CVector x = (b_ok ? referenced_deconvolve(y_block, r_block)
                    : referenced_deconvolve(y_pinhole, r_pinhole)).vec();
  if (rhs_norm == 0.0) return ComplexImage(n, n);

  CVector res = rhs - normal(x);
  CVector dir = res;
  double rr = res.squaredNorm();
  for (int it = 0; it < options.max_iters && std::sqrt(rr) > options.tolerance * rhs_norm; ++it) {
    const CVector q = normal(dir);
    const double alpha = rr / std::real(dir.dot(q));
    x += alpha * dir;
    res -= alpha * q;
    const double rr_new = res.squaredNorm();
    dir = res + (rr_new / rr) * dir;
    rr = rr_new;
  }
  return ComplexImage(n, n, x);
}

ComplexImage dual_reference_deconvolve(const HoloMeasurement& meas, const ComplexImage& r_pinhole,
                                       const ComplexImage& r_block,
                                       const DualDeconvOptions& options, double wrap_tolerance) {
  const int n = meas.specimen;
  if (meas.composite_rows != 2 * n || meas.composite_cols != 2 * n)
    throw std::invalid_argument("dual_reference_deconvolve: not a dual-layout measurement");
  const ComplexImage ac = autocorr_from_magnitudes(meas, wrap_tolerance);
  return dual_deconvolve_blocks(extract_crosscorr(ac, n, 0, n), extract_crosscorr(ac, n, n, 0),
                                r_pinhole, r_block, options);
}

std::string to_string(HoloScheme scheme) {
  switch (scheme) {
    case HoloScheme::pinhole: return "pinhole";
    case HoloScheme::slit: return "slit";
    case HoloScheme::block: return "block";
    case HoloScheme::dual: return "dual";
  }
  return "unknown";
}

HoloScheme parse_holo_scheme(const std::string& name) {
  for (HoloScheme s : {HoloScheme::pinhole, HoloScheme::slit, HoloScheme::block, HoloScheme::dual})
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown holography scheme: " + name);
}

namespace {

ReferenceKind single_kind(HoloScheme scheme) {
  switch (scheme) {
    case HoloScheme::pinhole: return ReferenceKind::pinhole;
    case HoloScheme::slit: return ReferenceKind::slit;
    default: return ReferenceKind::block;
  }
}

}  // namespace

ComplexImage holo_composite(const ComplexImage& x, HoloScheme scheme) {
  const int n = x.height();
  if (scheme == HoloScheme::dual)
    return compose_dual(x, make_reference(ReferenceKind::pinhole, n),
                        make_reference(ReferenceKind::block, n));
  return compose(x, make_reference(single_kind(scheme), n));
}

ComplexImage holo_recover(const HoloMeasurement& meas, HoloScheme scheme, double wrap_tolerance) {
  const int n = meas.specimen;
  if (scheme == HoloScheme::dual)
    return dual_reference_deconvolve(meas, make_reference(ReferenceKind::pinhole, n),
                                     make_reference(ReferenceKind::block, n), {}, wrap_tolerance);
  if (meas.composite_rows != n || meas.composite_cols != 2 * n)
    throw std::invalid_argument("holo_recover: not a single-reference measurement");
  const ComplexImage ac = autocorr_from_magnitudes(meas, wrap_tolerance);
  return referenced_deconvolve(extract_crosscorr(ac, n), make_reference(single_kind(scheme), n));
}

double photon_scale(const ComplexImage& x, double photons, int grid_rows, int grid_cols) {
  if (!(photons > 0.0)) throw std::invalid_argument("photon_scale: photons must be > 0");
  const double energy = x.vec().squaredNorm() * double(grid_rows) * double(grid_cols);
  if (!(energy > 0.0)) throw std::invalid_argument("photon_scale: zero specimen");
  return photons / energy;
}

std::vector<HoloErrorRow> holo_noise_sweep(const ComplexImage& x,
                                           const std::vector<HoloScheme>& schemes,
                                           const std::vector<double>& photons, int seeds,
                                           std::uint64_t seed0, int grid) {
  if (seeds < 1) throw std::invalid_argument("holo_noise_sweep: seeds must be >= 1");
  const double xnorm = x.vec().norm();
  if (!(xnorm > 0.0)) throw std::invalid_argument("holo_noise_sweep: zero specimen");
  const double no_wrap_check = std::numeric_limits<double>::infinity();
  std::vector<HoloErrorRow> rows;
  for (HoloScheme scheme : schemes) {
    const ComplexImage c = holo_composite(x, scheme);
    const HoloMeasurement clean = measure_holo(c, x.height(), grid, grid);
    for (double budget : photons)
      for (int s = 0; s < seeds; ++s) {
        const std::uint64_t seed = seed0 + std::uint64_t(s);
        const double scale = photon_scale(x, budget, grid, grid);
        const ComplexImage est =
            holo_recover(add_photon_noise(clean, scale, seed), scheme, no_wrap_check);
        rows.push_back({scheme, budget, seed, (est.vec() - x.vec()).norm() / xnorm});
      }
  }
  return rows;
}

void write_holo_error_csv(std::ostream& os, const std::vector<HoloErrorRow>& rows) {
  os << "scheme,photons,seed,rel_error\n" << std::setprecision(17);
  for (const HoloErrorRow& r : rows)
    os << to_string(r.scheme) << ',' << r.photons << ',' << r.seed << ',' << r.rel_error << '\n';
}

}  // namespace phasekit
