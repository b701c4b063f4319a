#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "phasekit/init.hpp"
#include "phasekit/masks_scans.hpp"
#include "support.hpp"

using namespace phasekit;
using phasekit::testing::gaussian_matrix;
using phasekit::testing::random_cvector;

namespace {

LinearMap dense_map(const CMatrix& M) {
  return [M](const CVector& v) { return CVector(M * v); };
}

double init_error(const CVector& est, const CVector& x) { return dist(est, x) / x.norm(); }

}  // namespace

TEST_CASE("power method on a diagonal map") {
  const RVector d = (RVector(3) << 3.0, 2.0, 1.0).finished();
  const EigenPair e = power_method(dense_map(d.cast<cplx>().asDiagonal()), 3);
  CHECK(e.converged);
  CHECK(e.value == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(std::abs(e.vector[0]) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e.residual <= 1e-10 * 3.0);
}

TEST_CASE("power method on a rank-one map returns its direction") {
  const CVector x = random_cvector(10, 1);
  const EigenPair e = power_method(dense_map(x * x.adjoint()), 10);
  CHECK(dist(e.vector, x / x.norm()) < 1e-9);
  CHECK(e.value == doctest::Approx(x.squaredNorm()).epsilon(1e-9));
}

TEST_CASE("power method agrees with a dense eigensolver") {
  const CMatrix G = gaussian_matrix(32, 32, 2);
  const CMatrix M = G.adjoint() * G;
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(M);
  PowerOptions opts;
  opts.tol = 1e-12;
  opts.max_iter = 100000;
  const EigenPair e = power_method(dense_map(M), 32, opts);
  CHECK(e.converged);
  CHECK(std::abs(e.value - es.eigenvalues()[31]) < 1e-8 * es.eigenvalues()[31]);
  CHECK(dist(e.vector, es.eigenvectors().col(31)) < 1e-6);
}

TEST_CASE("power method reports non-convergence instead of throwing") {
  const CMatrix G = gaussian_matrix(16, 16, 3);
  PowerOptions opts;
  opts.max_iter = 2;
  const EigenPair e = power_method(dense_map(G.adjoint() * G), 16, opts);
  CHECK_FALSE(e.converged);
  CHECK(e.iterations == 2);
  CHECK(e.residual > 0.0);
}

TEST_CASE("spectral init on the infinite-data surrogate") {
  const CVector x = random_cvector(12, 4);
  const CMatrix Y = CMatrix::Identity(12, 12) + 2.0 * x * x.adjoint();
  const EigenPair e = power_method(dense_map(Y), 12);
  CHECK(dist(e.vector, x / x.norm()) < 1e-8);
}

// At N = 8n a dense eigensolver gives correlations 0.61 to 0.78 (mean 0.72) for
// complex Gaussian rows, so the floor is set below that band.
TEST_CASE("spectral init correlates with the truth for Gaussian measurements") {
  const Index n = 64, N = 8 * n;
  int good = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CMatrix A = gaussian_matrix(N, n, 1000 + seed);
    const CVector x = random_cvector(n, 2000 + seed);
    const RVector y = (A * x).cwiseAbs2();
    PowerOptions opts;
    opts.tol = 1e-8;
    InitReport r = spectral_init(DenseOperator(A), y, opts).with_truth(x);
    good += *r.correlation > 0.6;
  }
  CHECK(good >= 95);
}

TEST_CASE("spectral init scaling, phase and order invariance") {
  const Index n = 8, N = 64;
  const CMatrix A = gaussian_matrix(N, n, 5);
  const CVector x = random_cvector(n, 6);
  const RVector y = (A * x).cwiseAbs2();
  const DenseOperator op(A);
  const InitReport r = spectral_init(op, y);
  CHECK(r.estimate.squaredNorm() ==
        doctest::Approx(double(n) * y.sum() / A.squaredNorm()).epsilon(1e-12));
  const RVector y_rot = (A * (std::polar(1.0, 1.2) * x)).cwiseAbs2();
  CHECK((y_rot - y).norm() < 1e-12 * y.norm());

  std::vector<Index> perm(N);
  std::iota(perm.begin(), perm.end(), Index(0));
  std::reverse(perm.begin(), perm.end());
  CMatrix Ap(N, n);
  RVector yp(N);
  for (Index k = 0; k < N; ++k) {
    Ap.row(k) = A.row(perm[k]);
    yp[k] = y[perm[k]];
  }
  CHECK(dist(spectral_init(DenseOperator(Ap), yp).estimate, r.estimate) < 1e-6 * r.estimate.norm());
  CHECK_THROWS_AS(spectral_init(op, RVector::Zero(N)), std::invalid_argument);
}

TEST_CASE("weak index set takes the smallest entries with index tie-break") {
  const RVector b = (RVector(6) << 0.5, 0.1, 0.5, 0.3, 0.5, 0.9).finished();
  const std::vector<Index> w = weak_index_set(b, 3);
  CHECK(w == std::vector<Index>{1, 3, 0});
  CHECK(weak_index_set(b, 4) == std::vector<Index>{1, 3, 0, 2});
  CHECK(default_null_set_size(64 * 64, 2 * 127 * 127) == Index(std::ceil(std::sqrt(4096.0 * 2 * 127 * 127))));
}

TEST_CASE("weak set entries never exceed the strong set") {
  const RVector b = testing::random_rvector(200, 7);
  const std::vector<Index> w = weak_index_set(b, 60);
  std::vector<bool> weak(200, false);
  for (Index i : w) weak[std::size_t(i)] = true;
  double max_weak = 0.0, min_strong = 1e9;
  for (Index j = 0; j < 200; ++j) {
    if (weak[std::size_t(j)])
      max_weak = std::max(max_weak, b[j]);
    else
      min_strong = std::min(min_strong, b[j]);
  }
  CHECK(max_weak <= min_strong);
}

TEST_CASE("null init errors and determinism") {
  const CodedDiffractionOperator A(8, 8, {random_phase_mask(8, 1), random_phase_mask(8, 2)});
  const CVector x = random_cvector(64, 8);
  const RVector b = A.forward(x).cwiseAbs();
  CHECK_THROWS_AS(null_init(A, b, b.size()), std::invalid_argument);
  CHECK_THROWS_AS(null_init(A, b, 0), std::invalid_argument);
  const InitReport r1 = null_init(A, b, default_null_set_size(64, b.size()));
  const InitReport r2 = null_init(A, b, default_null_set_size(64, b.size()));
  CHECK((r1.estimate - r2.estimate).norm() == 0.0);
  CHECK(r1.estimate.norm() == doctest::Approx(b.norm()).epsilon(1e-12));
  CHECK(init_error(r1.estimate, x) < 1.0);
}

TEST_CASE("qr null init matches plain null init for isometric operators") {
  const Index n = 10, N = 60;
  const Eigen::HouseholderQR<CMatrix> qr(gaussian_matrix(N, n, 9));
  const CMatrix Q = qr.householderQ() * CMatrix::Identity(N, n);
  const CVector x = random_cvector(n, 10);
  const RVector b = (Q * x).cwiseAbs();
  PowerOptions opts;
  opts.tol = 1e-14;
  opts.max_iter = 200000;
  const InitReport plain = null_init(DenseOperator(Q), b, 25, opts);
  const InitReport viaqr = null_init_qr(Q, b, 25, opts);
  CHECK(dist(plain.estimate, viaqr.estimate) < 1e-8 * b.norm());
}

TEST_CASE("qr null init solves the constrained maximization") {
  // max ||A_S x||^2 s.t. ||A x|| = ||b|| is the generalized eigenproblem (A_S^* A_S, A^* A).
  const Index n = 4, N = 12;
  const CMatrix A = gaussian_matrix(N, n, 11);
  const CVector x = random_cvector(n, 12);
  const RVector b = (A * x).cwiseAbs();
  const Index weak = 5;
  CMatrix As = A;
  for (Index i : weak_index_set(b, weak)) As.row(i).setZero();
  const Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> ges(As.adjoint() * As, A.adjoint() * A);
  CVector oracle = ges.eigenvectors().col(n - 1);
  oracle *= b.norm() / (A * oracle).norm();
  PowerOptions opts;
  opts.tol = 1e-14;
  opts.max_iter = 200000;
  const InitReport r = null_init_qr(A, b, weak, opts);
  CHECK(dist(r.estimate, oracle) < 1e-8 * oracle.norm());
  CHECK_THROWS_AS(null_init_qr(CMatrix::Zero(12, 4), b, weak), std::invalid_argument);
}

TEST_CASE("qr null init beats plain null init on Gaussian matrices") {
  const Index n = 32, N = 4 * n;
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const CMatrix A = gaussian_matrix(N, n, 3000 + seed);
    const CVector x = random_cvector(n, 4000 + seed);
    const RVector b = (A * x).cwiseAbs();
    const Index weak = default_null_set_size(n, N);
    PowerOptions opts;
    opts.tol = 1e-8;
    const double plain = *null_init(DenseOperator(A), b, weak, opts).with_truth(x).correlation;
    const double viaqr = *null_init_qr(A, b, weak, opts).with_truth(x).correlation;
    wins += viaqr >= plain;
  }
  CHECK(wins >= 80);
}

TEST_CASE("null init improves as measurements grow") {
  const Index n = 16;
  double prev = 2.0;
  for (Index N : {64, 256, 1024}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const CMatrix A = gaussian_matrix(N, n, 5000 + seed);
      const CVector x = random_cvector(n, 6000 + seed);
      const RVector b = (A * x).cwiseAbs();
      PowerOptions opts;
      opts.tol = 1e-8;
      const InitReport r = null_init_qr(A, b, N / 2, opts);
      total += init_error(r.estimate * ((A * x).norm() / (A * r.estimate).norm()), x);
    }
    CHECK(total / 10 < prev);
    prev = total / 10;
  }
}

TEST_CASE("optimal preprocessing function") {
  CHECK(optimal_preprocessing(1.0, 4.0) == 0.0);
  CHECK(optimal_preprocessing(1.0, 0.3) == 0.0);
  CHECK(optimal_preprocessing(0.0, 4.0) == -1.0);
  CHECK(optimal_preprocessing(-3.0, 4.0) == -1.0);
  CHECK(optimal_preprocessing(3.0, 4.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(optimal_preprocessing(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("optimal preprocessing init is normalized and validates delta") {
  const CodedDiffractionOperator A(8, 8, {random_phase_mask(8, 1), random_phase_mask(8, 2),
                                          random_phase_mask(8, 3), random_phase_mask(8, 4)},
                                   Sampling::standard);
  const CVector x = random_cvector(64, 13);
  const RVector y = A.forward(x).cwiseAbs2();
  const InitReport r = optimal_preprocessing_init(A, y, 4.0);
  CHECK(r.estimate.norm() == doctest::Approx(std::sqrt(y.sum())).epsilon(1e-12));
  CHECK(init_error(r.estimate, x) < 1.0);
  CHECK_THROWS_AS(optimal_preprocessing_init(A, y, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(optimal_preprocessing_init(A, y, -1.0), std::invalid_argument);
}

TEST_CASE("optimal preprocessing init handles non-isometric operators") {
  const Index n = 16, N = 8 * n;
  const CMatrix A = gaussian_matrix(N, n, 14);
  const CVector x = random_cvector(n, 15);
  const RVector y = (A * x).cwiseAbs2();
  InitReport r = optimal_preprocessing_init(DenseOperator(A), y, double(N) / n).with_truth(x);
  CHECK(r.converged);
  CHECK(*r.correlation > 0.8);
}

TEST_CASE("random init norm, reproducibility and weak correlation") {
  const InitReport r = random_init(100, 3.5, 1);
  CHECK(r.estimate.norm() == doctest::Approx(3.5).epsilon(1e-12));
  CHECK((random_init(100, 3.5, 1).estimate - r.estimate).norm() == 0.0);
  const Index n = 64;
  const CVector x = random_cvector(n, 16);
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    mean += correlation(random_init(n, 1.0, 100 + seed).estimate, x);
  CHECK(mean / 1000 < 3.0 / std::sqrt(double(n)));
  CHECK_THROWS_AS(random_init(0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(random_init(4, 0.0, 1), std::invalid_argument);
}

TEST_CASE("init csv rows") {
  std::ostringstream os;
  write_init_csv_header(os);
  InitReport r;
  r.method = "null";
  r.iterations = 42;
  write_init_csv_row(os, r);
  r.correlation = 0.5;
  write_init_csv_row(os, r);
  CHECK(os.str() == "method,correlation,iterations\nnull,,42\nnull,0.5,42\n");
}
