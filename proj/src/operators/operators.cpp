#include "phasekit/operators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace phasekit {

void MeasurementOperator::check_object(const CVector& x) const {
  if (x.size() != object_size())
    throw std::invalid_argument("operator: object length " + std::to_string(x.size()) +
                                " != " + std::to_string(object_size()));
}

void MeasurementOperator::check_data(const CVector& u) const {
  if (u.size() != data_size())
    throw std::invalid_argument("operator: data length " + std::to_string(u.size()) +
                                " != " + std::to_string(data_size()));
}

CVector project_data(const RVector& b, const CVector& u) {
  if (b.size() != u.size()) throw std::invalid_argument("project_data: length mismatch");
  return b.cast<cplx>().cwiseProduct(sgn(u));
}

CVector reflect_data(const RVector& b, const CVector& u) {
  return 2.0 * project_data(b, u) - u;
}

FrameTransform::FrameTransform(int h, int w, int grid_rows, int grid_cols, double scale)
    : h_(h), w_(w), gr_(grid_rows), gc_(grid_cols), scale_(scale) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("FrameTransform: empty frame");
  if (grid_rows < h || grid_cols < w)
    throw std::invalid_argument("FrameTransform: grid smaller than frame");
  fft_ = fft_plan(grid_rows, grid_cols);
}

void FrameTransform::forward(const cplx* in, cplx* out) const {
  std::vector<cplx> pad(std::size_t(gr_) * gc_, cplx(0.0));
  for (int r = 0; r < h_; ++r)
    for (int c = 0; c < w_; ++c) pad[std::size_t(r) * gc_ + c] = in[std::size_t(r) * w_ + c];
  fft_->forward(pad.data(), out);
  for (Index k = 0; k < grid_size(); ++k) out[k] *= scale_;
}

void FrameTransform::adjoint(const cplx* in, cplx* out) const {
  std::vector<cplx> full(std::size_t(gr_) * gc_);
  fft_->backward(in, full.data());
  for (int r = 0; r < h_; ++r)
    for (int c = 0; c < w_; ++c)
      out[std::size_t(r) * w_ + c] = scale_ * full[std::size_t(r) * gc_ + c];
}

CVector oversampled_dft(const ComplexImage& f) {
  return oversampled_dft(f, 2 * f.height() - 1, 2 * f.width() - 1);
}

CVector oversampled_dft(const ComplexImage& f, int grid_rows, int grid_cols) {
  FrameTransform t(f.height(), f.width(), grid_rows, grid_cols, 1.0);
  CVector out(t.grid_size());
  t.forward(f.vec().data(), out.data());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

FrameTransform coded_frame(int h, int w, std::size_t mask_count, Sampling s) {
  const int gr = s == Sampling::oversampled ? 2 * h - 1 : h;
  const int gc = s == Sampling::oversampled ? 2 * w - 1 : w;
  const double c = 1.0 / std::sqrt(double(gr) * gc * double(mask_count));
  return FrameTransform(h, w, gr, gc, c);
}

}  // namespace

CodedDiffractionOperator::CodedDiffractionOperator(int height, int width,
                                                   std::vector<ComplexImage> masks,
                                                   Sampling sampling)
    : height_(height),
      width_(width),
      masks_(std::move(masks)),
      frame_(coded_frame(height, width, masks_.empty() ? 1 : masks_.size(), sampling)) {
  if (masks_.empty()) throw std::invalid_argument("CodedDiffractionOperator: no masks");
  for (const ComplexImage& m : masks_) {
    if (m.height() != height || m.width() != width)
      throw std::invalid_argument("CodedDiffractionOperator: mask shape mismatch");
    if (((m.vec().cwiseAbs().array() - 1.0).abs() > 1e-12).any())
      throw std::invalid_argument(
          "CodedDiffractionOperator: masks must have unit modulus (see absorb_mask_modulus)");
  }
}

CVector CodedDiffractionOperator::forward(const CVector& x) const {
  check_object(x);
  CVector out(data_size());
  const Index g = frame_.grid_size();
  for (std::size_t l = 0; l < masks_.size(); ++l) {
    const CVector coded = masks_[l].vec().cwiseProduct(x);
    frame_.forward(coded.data(), out.data() + Index(l) * g);
  }
  return out;
}

CVector CodedDiffractionOperator::adjoint(const CVector& u) const {
  check_data(u);
  CVector out = CVector::Zero(object_size());
  CVector tmp(object_size());
  const Index g = frame_.grid_size();
  for (std::size_t l = 0; l < masks_.size(); ++l) {
    frame_.adjoint(u.data() + Index(l) * g, tmp.data());
    out += masks_[l].vec().conjugate().cwiseProduct(tmp);
  }
  return out;
}

std::pair<ComplexImage, ComplexImage> absorb_mask_modulus(const ComplexImage& x,
                                                          const ComplexImage& mask) {
  if (!x.same_shape(mask)) throw std::invalid_argument("absorb_mask_modulus: shape mismatch");
  ComplexImage obj(x.height(), x.width()), unit(x.height(), x.width());
  obj.vec() = mask.vec().cwiseAbs().cast<cplx>().cwiseProduct(x.vec());
  unit.vec() = sgn(mask.vec());
  return {obj, unit};
}

// ---------------------------------------------------------------------------

DenseOperator::DenseOperator(CMatrix matrix) : matrix_(std::move(matrix)) {
  const CMatrix g = matrix_.adjoint() * matrix_;
  gram_.compute(g);
  isometric_ = (g - CMatrix::Identity(g.rows(), g.cols())).norm() < 1e-10;
}

CVector DenseOperator::forward(const CVector& x) const {
  check_object(x);
  return matrix_ * x;
}

CVector DenseOperator::adjoint(const CVector& u) const {
  check_data(u);
  return matrix_.adjoint() * u;
}

CVector DenseOperator::pseudo_inverse(const CVector& u) const {
  if (isometric_) return adjoint(u);
  return gram_.solve(adjoint(u));
}

// ---------------------------------------------------------------------------

namespace {

FrameTransform ptycho_frame(int n0, int n1, int m0, int m1, std::size_t frames) {
  const int g0 = 2 * m0 - 1, g1 = 2 * m1 - 1;
  // Mean coverage count; makes unit-modulus masks on uniform scans isometric
  // while keeping the scale independent of mask and object values.
  const double coverage = double(frames) * m0 * m1 / (double(n0) * n1);
  return FrameTransform(m0, m1, g0, g1, 1.0 / std::sqrt(double(g0) * g1 * coverage));
}

}  // namespace

PtychoGeometry::PtychoGeometry(int object_rows, int object_cols, int mask_rows, int mask_cols,
                               std::vector<Shift> shifts)
    : n0_(object_rows),
      n1_(object_cols),
      m0_(mask_rows),
      m1_(mask_cols),
      shifts_(std::move(shifts)),
      frame_(ptycho_frame(object_rows, object_cols, mask_rows, mask_cols,
                          shifts_.empty() ? 1 : shifts_.size())) {
  if (shifts_.empty()) throw std::invalid_argument("PtychoGeometry: empty shift set");
  if (mask_rows > object_rows || mask_cols > object_cols)
    throw std::invalid_argument("PtychoGeometry: mask larger than object");
  for (Shift& s : shifts_) {
    s.row = ((s.row % n0_) + n0_) % n0_;
    s.col = ((s.col % n1_) + n1_) % n1_;
  }
}

bool PtychoGeometry::wraps() const {
  for (const Shift& s : shifts_)
    if (s.row + m0_ > n0_ || s.col + m1_ > n1_) return true;
  return false;
}

Index PtychoGeometry::object_index(Index t, int r, int c) const {
  const Shift& s = shifts_[std::size_t(t)];
  int rr = s.row + r, cc = s.col + c;
  if (rr >= n0_) rr -= n0_;
  if (cc >= n1_) cc -= n1_;
  return Index(rr) * n1_ + cc;
}

CVector PtychoGeometry::frames(const ComplexImage& mask, const ComplexImage& object) const {
  if (mask.height() != m0_ || mask.width() != m1_)
    throw std::invalid_argument("ptycho frames: mask shape mismatch");
  if (object.height() != n0_ || object.width() != n1_)
    throw std::invalid_argument("ptycho frames: object shape mismatch");
  CVector out(data_size());
  std::vector<cplx> exit_wave(std::size_t(m0_) * m1_);
  for (Index t = 0; t < frame_count(); ++t) {
    for (int r = 0; r < m0_; ++r)
      for (int c = 0; c < m1_; ++c)
        exit_wave[std::size_t(r) * m1_ + c] = mask(r, c) * object.vec()[object_index(t, r, c)];
    frame_.forward(exit_wave.data(), out.data() + t * frame_size());
  }
  return out;
}

std::vector<CVector> PtychoGeometry::back_transform(const CVector& frames) const {
  if (frames.size() != data_size())
    throw std::invalid_argument("ptycho back_transform: data length mismatch");
  std::vector<CVector> out(std::size_t(frame_count()), CVector(Index(m0_) * m1_));
  for (Index t = 0; t < frame_count(); ++t)
    frame_.adjoint(frames.data() + t * frame_size(), out[std::size_t(t)].data());
  return out;
}

// ---------------------------------------------------------------------------

PtychographicOperator::PtychographicOperator(PtychoGeometry geometry, ComplexImage mask)
    : geom_(std::move(geometry)), mask_(std::move(mask)) {
  if (mask_.height() != geom_.mask_rows() || mask_.width() != geom_.mask_cols())
    throw std::invalid_argument("PtychographicOperator: mask shape mismatch");
  const FrameTransform& f = geom_.frame_transform();
  const double phi_gain = f.scale() * f.scale() * double(f.grid_size());
  gram_ = RVector::Zero(object_size());
  for (Index t = 0; t < geom_.frame_count(); ++t)
    for (int r = 0; r < geom_.mask_rows(); ++r)
      for (int c = 0; c < geom_.mask_cols(); ++c)
        gram_[geom_.object_index(t, r, c)] += phi_gain * std::norm(mask_(r, c));
  isometric_ = ((gram_.array() - 1.0).abs() < 1e-12).all();
}

CVector PtychographicOperator::forward(const CVector& x) const {
  check_object(x);
  return geom_.frames(mask_, ComplexImage(geom_.object_rows(), geom_.object_cols(), x));
}

CVector PtychographicOperator::adjoint(const CVector& u) const {
  check_data(u);
  const std::vector<CVector> back = geom_.back_transform(u);
  CVector out = CVector::Zero(object_size());
  for (Index t = 0; t < geom_.frame_count(); ++t)
    for (int r = 0; r < geom_.mask_rows(); ++r)
      for (int c = 0; c < geom_.mask_cols(); ++c)
        out[geom_.object_index(t, r, c)] +=
            std::conj(mask_(r, c)) * back[std::size_t(t)][Index(r) * geom_.mask_cols() + c];
  return out;
}

CVector PtychographicOperator::pseudo_inverse(const CVector& u) const {
  return pseudo_inverse(u, CVector::Zero(object_size()));
}

CVector PtychographicOperator::pseudo_inverse(const CVector& u, const CVector& fallback) const {
  if (fallback.size() != object_size())
    throw std::invalid_argument("pseudo_inverse: fallback length mismatch");
  CVector out = adjoint(u);
  for (Index p = 0; p < out.size(); ++p)
    out[p] = gram_[p] > kGramFloor ? out[p] / gram_[p] : fallback[p];
  return out;
}

MaskSideOperator::MaskSideOperator(PtychoGeometry geometry, ComplexImage object)
    : geom_(std::move(geometry)), object_(std::move(object)) {
  if (object_.height() != geom_.object_rows() || object_.width() != geom_.object_cols())
    throw std::invalid_argument("MaskSideOperator: object shape mismatch");
  const FrameTransform& f = geom_.frame_transform();
  const double phi_gain = f.scale() * f.scale() * double(f.grid_size());
  gram_ = RVector::Zero(object_size());
  for (Index t = 0; t < geom_.frame_count(); ++t)
    for (int r = 0; r < geom_.mask_rows(); ++r)
      for (int c = 0; c < geom_.mask_cols(); ++c)
        gram_[Index(r) * geom_.mask_cols() + c] +=
            phi_gain * std::norm(object_.vec()[geom_.object_index(t, r, c)]);
  isometric_ = ((gram_.array() - 1.0).abs() < 1e-12).all();
}

CVector MaskSideOperator::forward(const CVector& mask) const {
  check_object(mask);
  return geom_.frames(ComplexImage(geom_.mask_rows(), geom_.mask_cols(), mask), object_);
}

CVector MaskSideOperator::adjoint(const CVector& u) const {
  check_data(u);
  const std::vector<CVector> back = geom_.back_transform(u);
  CVector out = CVector::Zero(object_size());
  for (Index t = 0; t < geom_.frame_count(); ++t)
    for (int r = 0; r < geom_.mask_rows(); ++r)
      for (int c = 0; c < geom_.mask_cols(); ++c) {
        const Index k = Index(r) * geom_.mask_cols() + c;
        out[k] += std::conj(object_.vec()[geom_.object_index(t, r, c)]) * back[std::size_t(t)][k];
      }
  return out;
}

CVector MaskSideOperator::pseudo_inverse(const CVector& u) const {
  return pseudo_inverse(u, CVector::Zero(object_size()));
}

CVector MaskSideOperator::pseudo_inverse(const CVector& u, const CVector& fallback) const {
  if (fallback.size() != object_size())
    throw std::invalid_argument("pseudo_inverse: fallback length mismatch");
  CVector out = adjoint(u);
  for (Index p = 0; p < out.size(); ++p)
    out[p] = gram_[p] > kGramFloor ? out[p] / gram_[p] : fallback[p];
  return out;
}

}  // namespace phasekit
