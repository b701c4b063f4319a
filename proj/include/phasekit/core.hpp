#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace phasekit {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

// Row-major complex grid. vec() exposes the flattened storage, so
// pixel (row, col) lives at vec()[row * width + col].
class ComplexImage {
 public:
  ComplexImage() = default;
  ComplexImage(int height, int width, cplx fill = cplx(0.0, 0.0));
  // Throws if data.size() != height * width or any entry is not finite.
  ComplexImage(int height, int width, CVector data);

  int height() const { return height_; }
  int width() const { return width_; }
  Index size() const { return data_.size(); }

  cplx& operator()(int row, int col) { return data_[Index(row) * width_ + col]; }
  const cplx& operator()(int row, int col) const {
    return data_[Index(row) * width_ + col];
  }

  // Periodic access; row/col may be any integer.
  const cplx& wrapped(int row, int col) const;

  const CVector& vec() const { return data_; }
  CVector& vec() { return data_; }

  bool same_shape(const ComplexImage& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  CVector data_;
};

// Measured magnitudes b >= 0 together with provenance.
struct AmplitudeData {
  RVector values;
  std::string scheme;
  std::optional<double> nsr;
};

// Unit-modulus phase vector; zero entries map to 1.
CVector sgn(const CVector& u);

// min over global phase of ||z - e^{i phi} x||.
double dist(const CVector& z, const CVector& x);

// |<x, z>| / (||x|| ||z||); 0 when either vector vanishes.
double correlation(const CVector& z, const CVector& x);

// ||b - |u||| / ||b||.
double relative_residual(const RVector& b, const CVector& u);

// ||b - clean|| / ||clean||.
double nsr(const RVector& b, const RVector& clean);

// Affine-phase-waived relative error: min over complex scale alpha and ramp
// r in [0,1)^2 (cycles per pixel) of ||x - alpha e^{-i 2 pi p.r} x_hat|| / ||x||.
double affine_phase_error(const ComplexImage& x_hat, const ComplexImage& x);

// Ramp (cycles per pixel) attaining affine_phase_error; useful for alignment.
struct AffineFit {
  double error;
  double r_row;
  double r_col;
  cplx alpha;
};
AffineFit affine_phase_fit(const ComplexImage& x_hat, const ComplexImage& x);

// min of dist over circular translations, conjugate inversion and global phase.
double trivial_ambiguity_distance(const ComplexImage& x_hat, const ComplexImage& x);

// Conjugate inversion on the periodic grid: out(p) = conj(x(-p mod n)).
ComplexImage conjugate_inversion(const ComplexImage& x);

// Circular shift: out(p) = x(p - shift).
ComplexImage circular_shift(const ComplexImage& x, int shift_row, int shift_col);

}  // namespace phasekit
