#include "phasekit/init.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace phasekit {

namespace {

CVector gaussian_vector(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, std::sqrt(0.5));
  CVector v(n);
  for (Index j = 0; j < n; ++j) {
    const double re = d(rng);
    const double im = d(rng);
    v[j] = cplx(re, im);
  }
  return v;
}

}  // namespace

EigenPair power_method(const LinearMap& apply, Index dim, const PowerOptions& opts) {
  if (dim <= 0) throw std::invalid_argument("power_method: dim must be positive");
  EigenPair out;
  CVector v = gaussian_vector(dim, opts.seed);
  v.normalize();
  for (int it = 1; it <= opts.max_iter; ++it) {
    const CVector w = apply(v);
    if (w.size() != dim) throw std::invalid_argument("power_method: map changed dimension");
    const double lambda = std::real(v.dot(w));
    out.vector = v;
    out.value = lambda;
    out.iterations = it;
    out.residual = (w - lambda * v).norm();
    if (out.residual <= opts.tol * std::abs(lambda)) {
      out.converged = true;
      return out;
    }
    const double nw = w.norm();
    if (nw == 0.0) {
      // v lies in the null space; any vector is a leading eigenvector of 0.
      out.converged = true;
      return out;
    }
    v = w / nw;
  }
  return out;
}

InitReport& InitReport::with_truth(const CVector& x) {
  correlation = phasekit::correlation(estimate, x);
  return *this;
}

void write_init_csv_header(std::ostream& os) { os << "method,correlation,iterations\n"; }

void write_init_csv_row(std::ostream& os, const InitReport& r) {
  os << r.method << ',';
  if (r.correlation) os << *r.correlation;
  os << ',' << r.iterations << '\n';
}

InitReport spectral_init(const MeasurementOperator& A, const RVector& y, const PowerOptions& opts) {
  if (y.size() != A.data_size()) throw std::invalid_argument("spectral_init: length mismatch");
  const double ysum = y.sum();
  if (y.cwiseAbs().maxCoeff() == 0.0) throw std::invalid_argument("spectral_init: all-zero data");
  const double N = double(y.size());
  const LinearMap M = [&](const CVector& v) {
    return CVector(A.adjoint(y.cast<cplx>().cwiseProduct(A.forward(v))) / N);
  };
  const EigenPair e = power_method(M, A.object_size(), opts);
  const double lambda = double(A.object_size()) * ysum / A.frobenius_norm_sq();
  InitReport r;
  r.estimate = e.vector * std::sqrt(std::max(0.0, lambda));
  r.method = "spectral";
  r.iterations = e.iterations;
  r.converged = e.converged;
  return r;
}

Index default_null_set_size(Index n, Index N) {
  return Index(std::ceil(std::sqrt(double(n) * double(N))));
}

std::vector<Index> weak_index_set(const RVector& b, Index count) {
  if (count < 0 || count > b.size()) throw std::invalid_argument("weak_index_set: bad count");
  std::vector<Index> order(std::size_t(b.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return b[i] < b[j]; });
  order.resize(std::size_t(count));
  return order;
}

namespace {

RVector strong_indicator(const RVector& b, Index weak_count) {
  if (weak_count >= b.size()) throw std::invalid_argument("null_init: |I| must be < N");
  if (weak_count <= 0) throw std::invalid_argument("null_init: |I| must be positive");
  RVector keep = RVector::Ones(b.size());
  for (Index i : weak_index_set(b, weak_count)) keep[i] = 0.0;
  return keep;
}

}  // namespace

InitReport null_init(const MeasurementOperator& A, const RVector& b, Index weak_count,
                     const PowerOptions& opts) {
  if (b.size() != A.data_size()) throw std::invalid_argument("null_init: length mismatch");
  const RVector keep = strong_indicator(b, weak_count);
  const LinearMap M = [&](const CVector& v) {
    return A.adjoint(keep.cast<cplx>().cwiseProduct(A.forward(v)));
  };
  const EigenPair e = power_method(M, A.object_size(), opts);
  InitReport r;
  r.estimate = e.vector * b.norm();
  r.method = "null";
  r.iterations = e.iterations;
  r.converged = e.converged;
  return r;
}

InitReport null_init_qr(const CMatrix& A, const RVector& b, Index weak_count,
                        const PowerOptions& opts) {
  if (b.size() != A.rows()) throw std::invalid_argument("null_init_qr: length mismatch");
  if (A.rows() < A.cols()) throw std::invalid_argument("null_init_qr: rank-deficient operator");
  Eigen::HouseholderQR<CMatrix> qr(A);
  const Index n = A.cols();
  const CMatrix Q = qr.householderQ() * CMatrix::Identity(A.rows(), n);
  const CMatrix R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  const RVector diag = R.diagonal().cwiseAbs();
  if (diag.minCoeff() <= 1e-10 * diag.maxCoeff())
    throw std::invalid_argument("null_init_qr: rank-deficient operator");
  const RVector keep = strong_indicator(b, weak_count);
  const LinearMap M = [&](const CVector& v) {
    return CVector(Q.adjoint() * keep.cast<cplx>().cwiseProduct(Q * v));
  };
  const EigenPair e = power_method(M, n, opts);
  const CVector z = e.vector * b.norm();
  InitReport r;
  r.estimate = R.triangularView<Eigen::Upper>().solve(z);
  r.method = "null_qr";
  r.iterations = e.iterations;
  r.converged = e.converged;
  return r;
}

double optimal_preprocessing(double y, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("optimal_preprocessing: delta must be > 0");
  const double yp = std::max(y, 0.0);
  return (yp - 1.0) / (yp + std::sqrt(delta) - 1.0);
}

InitReport optimal_preprocessing_init(const MeasurementOperator& A, const RVector& y, double delta,
                                      const PowerOptions& opts) {
  if (!(delta > 0.0)) throw std::invalid_argument("optimal_preprocessing_init: delta must be > 0");
  if (y.size() != A.data_size())
    throw std::invalid_argument("optimal_preprocessing_init: length mismatch");
  const double ysum = y.sum();
  if (!(ysum > 0.0)) throw std::invalid_argument("optimal_preprocessing_init: all-zero data");
  const double N = double(y.size());
  RVector T(y.size());
  for (Index j = 0; j < y.size(); ++j) T[j] = optimal_preprocessing(y[j] * N / ysum, delta);

  // Shift by c ||A||^2 so the map is PSD and the top of the spectrum is kept.
  double op_norm_sq = 1.0;
  if (!A.isometric()) {
    PowerOptions o = opts;
    o.tol = 1e-6;
    const EigenPair g = power_method(
        [&](const CVector& v) { return A.adjoint(A.forward(v)); }, A.object_size(), o);
    op_norm_sq = 1.01 * g.value;
  }
  const double shift = (1.0 + T.cwiseAbs().maxCoeff()) * op_norm_sq;
  const LinearMap M = [&](const CVector& v) {
    return CVector(A.adjoint(T.cast<cplx>().cwiseProduct(A.forward(v))) + shift * v);
  };
  const EigenPair e = power_method(M, A.object_size(), opts);
  InitReport r;
  r.estimate = e.vector * std::sqrt(ysum);
  r.method = "optimal";
  r.iterations = e.iterations;
  r.converged = e.converged;
  return r;
}

InitReport random_init(Index n, double norm, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("random_init: n must be positive");
  if (norm <= 0.0) throw std::invalid_argument("random_init: norm must be positive");
  InitReport r;
  r.estimate = gaussian_vector(n, seed);
  r.estimate *= norm / r.estimate.norm();
  r.method = "random";
  return r;
}

}  // namespace phasekit
