#include "phasekit/convex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phasekit {

namespace {

constexpr int kMaxLiftDim = 64;

void check_rows(const CMatrix& A, Index len, const char* what) {
  if (A.rows() != len) throw std::invalid_argument(std::string(what) + ": length mismatch");
}

CMatrix hermitian_part(const CMatrix& X) { return 0.5 * (X + X.adjoint()); }

// Projection onto the disks |z_k| <= b_k.
CVector project_disks(const CVector& z, const RVector& b) {
  CVector out = z;
  for (Index k = 0; k < z.size(); ++k) {
    const double r = std::abs(z[k]);
    if (r > b[k]) out[k] = z[k] * (b[k] / r);
  }
  return out;
}

// Largest s <= 1 with |<a_k, s x>| <= b_k for all k.
double feasibility_scale(const CVector& ax, const RVector& b) {
  double s = 1.0;
  for (Index k = 0; k < ax.size(); ++k) {
    const double r = std::abs(ax[k]);
    if (r > b[k]) s = std::min(s, b[k] / r);
  }
  return s;
}

}  // namespace

RVector lift_apply(const CMatrix& A, const CMatrix& X) {
  if (X.rows() != A.cols() || X.cols() != A.cols())
    throw std::invalid_argument("lift_apply: shape mismatch");
  const CMatrix AX = A * X;
  return AX.cwiseProduct(A.conjugate()).rowwise().sum().real();
}

CMatrix lift_adjoint(const CMatrix& A, const RVector& z) {
  check_rows(A, z.size(), "lift_adjoint");
  return A.adjoint() * z.cast<cplx>().asDiagonal() * A;
}

CMatrix project_psd(const CMatrix& X) {
  if (X.rows() != X.cols()) throw std::invalid_argument("project_psd: matrix not square");
  const Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitian_part(X));
  const RVector lam = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * lam.cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();
}

PhaseLiftResult phaselift_solve(const CMatrix& A, const RVector& y,
                                const PhaseLiftOptions& options) {
  check_rows(A, y.size(), "phaselift_solve");
  const Index n = A.cols();
  if (n > kMaxLiftDim) throw std::invalid_argument("phaselift_solve: n exceeds desk scale");
  if (options.max_iters < 1 || !(options.trace_weight >= 0.0))
    throw std::invalid_argument("phaselift_solve: invalid options");

  // Gram of the lifted map: G_jk = |a_j^* a_k|^2.
  const Eigen::MatrixXd G = (A * A.adjoint()).cwiseAbs2();
  const Eigen::LDLT<Eigen::MatrixXd> gram(G);
  const auto affine = [&](const CMatrix& Z) -> CMatrix {
    const RVector r = lift_apply(A, Z) - y;
    return Z - lift_adjoint(A, gram.solve(r));
  };
  const double shrink = options.trace_weight * y.mean();
  const CMatrix shift = shrink * CMatrix::Identity(n, n);

  PhaseLiftResult res;
  if (options.start.size() != 0 && (options.start.rows() != n || options.start.cols() != n))
    throw std::invalid_argument("phaselift_solve: start shape mismatch");
  CMatrix Z = options.start.size() != 0 ? hermitian_part(options.start) : CMatrix::Zero(n, n);
  CMatrix X = Z;
  for (int it = 1; it <= options.max_iters; ++it) {
    const CMatrix Xa = affine(Z);
    X = project_psd(2.0 * Xa - Z - shift);
    const CMatrix step = X - Xa;
    Z += step;
    res.iterations = it;
    if (step.norm() <= options.tolerance * std::max(Z.norm(), 1e-300)) {
      res.converged = true;
      break;
    }
  }
  res.X = hermitian_part(X);
  res.residual = (lift_apply(A, res.X) - y).norm() / std::max(y.norm(), 1e-300);
  const Eigen::SelfAdjointEigenSolver<CMatrix> eig(res.X);
  const double trace = eig.eigenvalues().cwiseMax(0.0).sum();
  res.x = std::sqrt(trace) * eig.eigenvectors().col(n - 1);
  return res;
}

PhaseMaxResult phasemax_solve(const CMatrix& A, const RVector& b, const CVector& anchor,
                              const PhaseMaxOptions& options) {
  check_rows(A, b.size(), "phasemax_solve");
  if (anchor.size() != A.cols()) throw std::invalid_argument("phasemax_solve: anchor length");
  if (anchor.norm() == 0.0) throw std::invalid_argument("phasemax_solve: zero anchor");
  if (b.minCoeff() < 0.0) throw std::invalid_argument("phasemax_solve: negative magnitudes");

  const Eigen::LLT<CMatrix> gram(A.adjoint() * A);
  if (gram.info() != Eigen::Success)
    throw std::invalid_argument("phasemax_solve: measurement vectors do not span");
  const double rho =
      options.penalty > 0.0 ? options.penalty : anchor.norm() / std::max(b.norm(), 1e-300);
  const CVector lin = anchor / rho;

  PhaseMaxResult res;
  CVector x = gram.solve(lin);
  CVector z = project_disks(A * x, b), w = CVector::Zero(b.size());
  for (int it = 1; it <= options.max_iters; ++it) {
    x = gram.solve(A.adjoint() * (z - w) + lin);
    const CVector ax = A * x;
    const CVector z_old = z;
    z = project_disks(ax + w, b);
    w += ax - z;
    res.iterations = it;
    const double primal = (ax - z).norm();
    const double dual = (z - z_old).norm();
    const double scale = std::max(z.norm(), 1e-300);
    if (primal <= options.tolerance * scale && dual <= options.tolerance * scale) {
      res.converged = true;
      break;
    }
  }
  const CVector ax = A * x;
  x *= feasibility_scale(ax, b);
  if (x.norm() == 0.0) throw std::runtime_error("phasemax_solve: no nonzero feasible iterate");
  res.x = x;
  res.objective = std::real(anchor.dot(x));
  return res;
}

PhaseLampResult phaselamp(const CMatrix& A, const RVector& b, const CVector& anchor, int rounds,
                          double tolerance, const PhaseMaxOptions& options) {
  if (rounds < 1) throw std::invalid_argument("phaselamp: rounds must be >= 1");
  PhaseLampResult res;
  CVector u = anchor;
  for (int r = 1; r <= rounds; ++r) {
    const PhaseMaxResult pm = phasemax_solve(A, b, u, options);
    res.objectives.push_back(pm.objective / u.norm());
    res.rounds = r;
    const double change = (pm.x - u).norm() / u.norm();
    res.x = pm.x;
    u = pm.x;
    if (change <= tolerance) break;
  }
  return res;
}

DualCheck dual_phase_check(const CMatrix& A, const RVector& b, const CVector& anchor,
                           const CVector& x) {
  check_rows(A, b.size(), "dual_phase_check");
  if (anchor.size() != A.cols() || x.size() != A.cols())
    throw std::invalid_argument("dual_phase_check: vector length mismatch");
  DualCheck out;
  out.z = CVector::Zero(b.size());
  if (b.maxCoeff() == 0.0) return out;
  if (b.minCoeff() <= 0.0) throw std::invalid_argument("dual_phase_check: b must be positive");

  // Weighted basis pursuit in w = z / b: min sum_k b_k |w_k| s.t. A^* w = u.
  const Eigen::LLT<CMatrix> gram(A.adjoint() * A);
  const auto affine = [&](const CVector& v) -> CVector {
    return v - A * gram.solve(A.adjoint() * v - anchor);
  };
  const double rho = b.norm() * std::sqrt(double(b.size())) / anchor.norm();
  const RVector kappa = b / rho;
  CVector v = CVector::Zero(b.size()), lam = v, w = v;
  for (int it = 0; it < 50000; ++it) {
    w = affine(v - lam);
    const CVector t = w + lam;
    const CVector v_old = v;
    for (Index k = 0; k < t.size(); ++k) {
      const double r = std::abs(t[k]);
      v[k] = r > kappa[k] ? t[k] * ((r - kappa[k]) / r) : cplx(0.0);
    }
    lam += w - v;
    const double scale = std::max(v.norm(), 1e-300);
    if ((w - v).norm() <= 1e-12 * scale && (v - v_old).norm() <= 1e-12 * scale) break;
  }
  out.z = b.cast<cplx>().cwiseProduct(v);
  const double zmax = out.z.cwiseAbs().maxCoeff();
  if (!(zmax > 0.0)) throw std::runtime_error("dual_phase_check: empty dual support");
  // Global phase of x that maximizes Re <x, u>; only that representative is optimal.
  const cplx c = anchor.dot(x);
  const cplx align = std::abs(c) > 0.0 ? std::conj(c) / std::abs(c) : cplx(1.0);
  const CVector ax = align * (A * x);
  for (Index k = 0; k < b.size(); ++k)
    if (std::abs(out.z[k]) > 1e-6 * zmax) {
      out.support.push_back(k);
      const cplx phase = out.z[k] / std::abs(out.z[k]);
      out.deviation = std::max(out.deviation, std::abs(b[k] * phase - ax[k]));
    }
  return out;
}

}  // namespace phasekit
