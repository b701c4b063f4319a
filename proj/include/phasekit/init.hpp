#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "phasekit/operators.hpp"

namespace phasekit {

using LinearMap = std::function<CVector(const CVector&)>;

struct PowerOptions {
  double tol = 1e-10;
  int max_iter = 10000;
  std::uint64_t seed = 0;
};

struct EigenPair {
  CVector vector;  // unit norm
  double value = 0.0;
  int iterations = 0;
  double residual = 0.0;  // ||Mv - lambda v||
  bool converged = false;
};

// Leading eigenpair of a self-adjoint PSD map; stops once
// ||Mv - lambda v|| <= tol |lambda|. Non-convergence is reported, not thrown.
EigenPair power_method(const LinearMap& apply, Index dim, const PowerOptions& opts = {});

struct InitReport {
  CVector estimate;
  std::string method;
  int iterations = 0;
  std::optional<double> correlation;
  bool converged = true;

  InitReport& with_truth(const CVector& x);
};

// CSV row "method,correlation,iterations" (correlation empty when unknown).
void write_init_csv_header(std::ostream& os);
void write_init_csv_row(std::ostream& os, const InitReport& r);

// Leading eigenvector of (1/N) A^* diag(y) A scaled to ||z||^2 = n sum(y) / ||A||_F^2.
InitReport spectral_init(const MeasurementOperator& A, const RVector& y,
                         const PowerOptions& opts = {});

// Default weak-set size ceil(sqrt(n N)).
Index default_null_set_size(Index n, Index N);
// Indices of the `count` smallest b, ties broken by smallest index.
std::vector<Index> weak_index_set(const RVector& b, Index count);

// Maximizes ||A_{I^c} x|| over ||x|| = ||b||, I the weak set.
InitReport null_init(const MeasurementOperator& A, const RVector& b, Index weak_count,
                     const PowerOptions& opts = {});
// QR variant: A = QR, z maximizes ||Q_{I^c} z|| over ||z|| = ||b||, x = R^{-1} z.
InitReport null_init_qr(const CMatrix& A, const RVector& b, Index weak_count,
                        const PowerOptions& opts = {});

// T(y, delta) = (y_+ - 1) / (y_+ + sqrt(delta) - 1).
double optimal_preprocessing(double y, double delta);
// Leading eigenvector of A^* diag(T(y_j)) A with y normalized to unit mean;
// output scaled to ||x|| = sqrt(sum y) (= ||b|| for intensities y = b^2).
InitReport optimal_preprocessing_init(const MeasurementOperator& A, const RVector& y, double delta,
                                      const PowerOptions& opts = {});

// i.i.d. circular complex Gaussian entries scaled to `norm`.
InitReport random_init(Index n, double norm, std::uint64_t seed);

}  // namespace phasekit
