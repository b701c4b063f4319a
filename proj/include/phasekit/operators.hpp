#pragma once

#include <memory>
#include <vector>

#include "phasekit/core.hpp"
#include "phasekit/fft.hpp"

namespace phasekit {

// Linear map x -> Ax between flattened object space and transform space.
class MeasurementOperator {
 public:
  virtual ~MeasurementOperator() = default;

  virtual Index object_size() const = 0;
  virtual Index data_size() const = 0;
  virtual CVector forward(const CVector& x) const = 0;
  virtual CVector adjoint(const CVector& u) const = 0;
  // (A^*A)^{-1} A^* u; the adjoint itself for isometric operators.
  virtual CVector pseudo_inverse(const CVector& u) const = 0;
  virtual bool isometric() const = 0;
  // trace(A^*A) = sum_k ||a_k||^2.
  virtual double frobenius_norm_sq() const = 0;

  // P_X u = A A^+ u.
  CVector project_range(const CVector& u) const { return forward(pseudo_inverse(u)); }
  // R_X = 2 P_X - I.
  CVector reflect_range(const CVector& u) const { return 2.0 * project_range(u) - u; }

 protected:
  void check_object(const CVector& x) const;
  void check_data(const CVector& u) const;
};

// P_Y u = b (.) sgn(u).
CVector project_data(const RVector& b, const CVector& u);
// R_Y = 2 P_Y - I.
CVector reflect_data(const RVector& b, const CVector& u);

// Zero-padded DFT of an h x w frame onto a grid_rows x grid_cols grid,
// scaled by `scale`. The adjoint crops the inverse transform.
class FrameTransform {
 public:
  FrameTransform(int h, int w, int grid_rows, int grid_cols, double scale);

  int frame_rows() const { return h_; }
  int frame_cols() const { return w_; }
  int grid_rows() const { return gr_; }
  int grid_cols() const { return gc_; }
  Index grid_size() const { return Index(gr_) * gc_; }
  double scale() const { return scale_; }

  // in: h*w row-major frame; out: grid_size() samples.
  void forward(const cplx* in, cplx* out) const;
  // in: grid_size() samples; out: h*w row-major frame.
  void adjoint(const cplx* in, cplx* out) const;

 private:
  int h_, w_, gr_, gc_;
  double scale_;
  std::shared_ptr<const Fft2> fft_;
};

// Unnormalized samples sum_p f(p) e^{-2 pi i p.omega} on the oversampled grid
// omega_j = k / (2 h_j - 1); pass explicit grid dims to override.
CVector oversampled_dft(const ComplexImage& f);
CVector oversampled_dft(const ComplexImage& f, int grid_rows, int grid_cols);

enum class Sampling { oversampled, standard };

// Stacked coded diffraction patterns A = c [Phi diag(mu_1); ...; Phi diag(mu_L)].
// Masks must have unit modulus; then A^*A = I.
class CodedDiffractionOperator : public MeasurementOperator {
 public:
  CodedDiffractionOperator(int height, int width, std::vector<ComplexImage> masks,
                           Sampling sampling = Sampling::oversampled);

  Index object_size() const override { return Index(height_) * width_; }
  Index data_size() const override { return frame_.grid_size() * Index(masks_.size()); }
  CVector forward(const CVector& x) const override;
  CVector adjoint(const CVector& u) const override;
  CVector pseudo_inverse(const CVector& u) const override { return adjoint(u); }
  bool isometric() const override { return true; }
  double frobenius_norm_sq() const override { return double(object_size()); }

  int height() const { return height_; }
  int width() const { return width_; }
  int grid_rows() const { return frame_.grid_rows(); }
  int grid_cols() const { return frame_.grid_cols(); }
  double normalization() const { return frame_.scale(); }
  const std::vector<ComplexImage>& masks() const { return masks_; }

 private:
  int height_, width_;
  std::vector<ComplexImage> masks_;
  FrameTransform frame_;
};

// Splits a non-unit-modulus mask into (|mu| (.) x, sgn(mu)) so that the
// operator keeps unit-modulus masks.
std::pair<ComplexImage, ComplexImage> absorb_mask_modulus(const ComplexImage& x,
                                                          const ComplexImage& mask);

// Dense matrix operator; row k of the matrix is a_k^*.
class DenseOperator : public MeasurementOperator {
 public:
  explicit DenseOperator(CMatrix matrix);

  Index object_size() const override { return matrix_.cols(); }
  Index data_size() const override { return matrix_.rows(); }
  CVector forward(const CVector& x) const override;
  CVector adjoint(const CVector& u) const override;
  CVector pseudo_inverse(const CVector& u) const override;
  bool isometric() const override { return isometric_; }
  double frobenius_norm_sq() const override { return matrix_.squaredNorm(); }

  const CMatrix& matrix() const { return matrix_; }

 private:
  CMatrix matrix_;
  Eigen::LDLT<CMatrix> gram_;
  bool isometric_;
};

struct Shift {
  int row;
  int col;
  bool operator==(const Shift&) const = default;
};

// Shared geometry of the bilinear ptychographic map F(mask, object).
// Frame t holds c * Phi(mask (.) object restricted to the block at shift t,
// wrapped periodically); frames are stacked frame-major.
class PtychoGeometry {
 public:
  PtychoGeometry(int object_rows, int object_cols, int mask_rows, int mask_cols,
                 std::vector<Shift> shifts);

  int object_rows() const { return n0_; }
  int object_cols() const { return n1_; }
  int mask_rows() const { return m0_; }
  int mask_cols() const { return m1_; }
  const std::vector<Shift>& shifts() const { return shifts_; }
  Index frame_count() const { return Index(shifts_.size()); }
  Index frame_size() const { return frame_.grid_size(); }
  Index data_size() const { return frame_size() * frame_count(); }
  const FrameTransform& frame_transform() const { return frame_; }
  double scale() const { return frame_.scale(); }
  // True when some frame crosses the periodic boundary.
  bool wraps() const;

  // Object pixel covered by mask pixel (r, c) in frame t (row-major index).
  Index object_index(Index t, int r, int c) const;

  CVector frames(const ComplexImage& mask, const ComplexImage& object) const;
  // Per-frame Phi^* c applied to frames; returns frame_count blocks of mask size.
  std::vector<CVector> back_transform(const CVector& frames) const;

 private:
  int n0_, n1_, m0_, m1_;
  std::vector<Shift> shifts_;
  FrameTransform frame_;
};

// A_mu : object -> frames for a fixed mask.
class PtychographicOperator : public MeasurementOperator {
 public:
  PtychographicOperator(PtychoGeometry geometry, ComplexImage mask);

  Index object_size() const override { return Index(geom_.object_rows()) * geom_.object_cols(); }
  Index data_size() const override { return geom_.data_size(); }
  CVector forward(const CVector& x) const override;
  CVector adjoint(const CVector& u) const override;
  CVector pseudo_inverse(const CVector& u) const override;
  bool isometric() const override { return isometric_; }
  double frobenius_norm_sq() const override { return gram_.sum(); }

  // Pixels with Gram weight <= 1e-12 are taken from `fallback`.
  CVector pseudo_inverse(const CVector& u, const CVector& fallback) const;
  const RVector& gram_diagonal() const { return gram_; }
  const PtychoGeometry& geometry() const { return geom_; }
  const ComplexImage& mask() const { return mask_; }

 private:
  PtychoGeometry geom_;
  ComplexImage mask_;
  RVector gram_;
  bool isometric_;
};

// B_x : mask -> frames for a fixed object.
class MaskSideOperator : public MeasurementOperator {
 public:
  MaskSideOperator(PtychoGeometry geometry, ComplexImage object);

  Index object_size() const override { return Index(geom_.mask_rows()) * geom_.mask_cols(); }
  Index data_size() const override { return geom_.data_size(); }
  CVector forward(const CVector& mask) const override;
  CVector adjoint(const CVector& u) const override;
  CVector pseudo_inverse(const CVector& u) const override;
  bool isometric() const override { return isometric_; }
  double frobenius_norm_sq() const override { return gram_.sum(); }

  CVector pseudo_inverse(const CVector& u, const CVector& fallback) const;
  const RVector& gram_diagonal() const { return gram_; }
  const PtychoGeometry& geometry() const { return geom_; }
  const ComplexImage& object() const { return object_; }

 private:
  PtychoGeometry geom_;
  ComplexImage object_;
  RVector gram_;
  bool isometric_;
};

inline constexpr double kGramFloor = 1e-12;

}  // namespace phasekit
