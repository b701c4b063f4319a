#pragma once

#include <vector>

#include "phasekit/core.hpp"

namespace phasekit {

// Measurement vectors are the rows a_k^* of an N x n matrix, so that
// (A x)_k = <a_k, x> and y_k = |<a_k, x>|^2 = Tr(a_k a_k^* x x^*).

// X -> (a_k^* X a_k)_k; real part only, exact for Hermitian X.
RVector lift_apply(const CMatrix& A, const CMatrix& X);
// z -> sum_k z_k a_k a_k^*.
CMatrix lift_adjoint(const CMatrix& A, const RVector& z);

// Nearest positive semidefinite matrix in Frobenius norm (Hermitian part,
// negative eigenvalues clipped).
CMatrix project_psd(const CMatrix& X);

struct PhaseLiftOptions {
  double trace_weight = 1e-3;  // relative to mean(y)
  int max_iters = 5000;
  double tolerance = 1e-12;  // relative change of the splitting iterate
  CMatrix start;             // initial splitting iterate; empty means zero
};

struct PhaseLiftResult {
  CMatrix X;       // PSD estimate
  CVector x;       // sqrt(Tr X) times the leading unit eigenvector
  double residual = 0.0;  // ||A(X) - y|| / ||y||
  int iterations = 0;
  bool converged = false;
};

// Douglas-Rachford splitting between the affine set {A(X) = y} and the PSD
// cone with a trace penalty. Throws for n > 64 or shape mismatch.
PhaseLiftResult phaselift_solve(const CMatrix& A, const RVector& y,
                                const PhaseLiftOptions& options = {});

struct PhaseMaxOptions {
  double penalty = 0.0;  // ADMM penalty; 0 picks ||u|| / ||b||
  int max_iters = 20000;
  double tolerance = 1e-10;  // primal and dual residual, relative
};

struct PhaseMaxResult {
  CVector x;               // feasible: |<a_k, x>| <= b_k
  double objective = 0.0;  // Re <x, u>
  int iterations = 0;
  bool converged = false;
};

// max Re <x, u> subject to |<a_k, x>| <= b_k, by ADMM on the split z = A x
// with disk projections; the final iterate is scaled radially into the
// feasible set. Throws if u = 0 or no nonzero feasible point is found.
PhaseMaxResult phasemax_solve(const CMatrix& A, const RVector& b, const CVector& anchor,
                              const PhaseMaxOptions& options = {});

struct PhaseLampResult {
  CVector x;
  std::vector<double> objectives;  // Re <x_r, u_r> / ||u_r|| per round, u_r its anchor
  int rounds = 0;
};

// Repeated PhaseMax with each output as the next anchor; stops when the
// relative anchor change drops below `tolerance`.
PhaseLampResult phaselamp(const CMatrix& A, const RVector& b, const CVector& anchor, int rounds,
                          double tolerance = 1e-8, const PhaseMaxOptions& options = {});

struct DualCheck {
  double deviation = 0.0;   // max over the support of |b_k sgn(z_k) - <a_k, x>|
  CVector z;                // basis-pursuit solution
  std::vector<Index> support;
};

// Solves min ||z||_1 subject to sum_k a_k z_k / b_k = u and compares
// b_k sgn(z_k) with <a_k, x> on the support of z, x taken at the global
// phase that maximizes Re <x, u>. All-zero b is vacuous.
// Throws when the dual is not recoverable (no support).
DualCheck dual_phase_check(const CMatrix& A, const RVector& b, const CVector& anchor,
                           const CVector& x);

}  // namespace phasekit
