#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "phasekit/operators.hpp"

namespace phasekit {

using Projector = std::function<CVector(const CVector&)>;

// P_X (onto the range of A) and P_Y (onto the magnitude set |u| = b).
struct Projectors {
  Projector range;
  Projector data;

  CVector reflect_range(const CVector& u) const { return 2.0 * range(u) - u; }
  CVector reflect_data(const CVector& u) const { return 2.0 * data(u) - u; }
};

Projectors make_projectors(const MeasurementOperator& A, const RVector& b);

// x' = A^+[b (.) sgn(Ax)].
CVector ap_step(const MeasurementOperator& A, const RVector& b, const CVector& x);
// u' = u/2 + R_Y R_X u / 2.
CVector aar_step(const Projectors& P, const CVector& u);
// v' = v/2 + R_X R_Y v / 2.
CVector aar_step_alt(const Projectors& P, const CVector& v);
// v' = [R_X (R_Y + (beta - 1) P_Y) + I + (1 - beta) P_Y] v / 2.
CVector hio_step(const Projectors& P, const CVector& v, double beta);
// u' = beta (u/2 + R_X R_Y u / 2) + (1 - beta) P_Y u.
CVector raar_step(const Projectors& P, const CVector& u, double beta);
// u' = u/(rho+1) + (rho-1)/(rho+1) P_X u + P_Y R_X u / (rho+1).
CVector gaussian_drs_step(const Projectors& P, const CVector& u, double rho);
// u' = u/2 - R_X u/(rho+2) + rho/(2(rho+2)) sqrt(|R_X u|^2 + 8(2+rho) b^2/rho^2) sgn(R_X u),
// with b read off as |P_Y R_X u|. Throws for rho <= 0.
CVector poisson_drs_step(const Projectors& P, const CVector& u, double rho);
// Object-domain counterpart of AAR: x' = x + A^+[P_Y R_Y (Ax) - P_Y (Ax)].
// Kept as a negative control; it is much slower than the transform-domain form.
CVector object_domain_aar_step(const MeasurementOperator& A, const RVector& b, const CVector& x);

enum class Algorithm { ap, aar, aar_alt, hio, raar, gaussian_drs, poisson_drs, object_aar, wf };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);

struct SolverConfig {
  Algorithm algorithm = Algorithm::aar;
  double beta = 0.8;       // RAAR / HIO, in [1/2, 1]
  double rho = 1.0;        // DRS, >= 0 (> 0 for Poisson)
  double step = 0.2;       // WF step, > 0
  int max_iters = 300;
  double tolerance = 0.0;  // stop once RR <= tolerance
  int ap_handoff_iters = 0;
  int stagnation_window = 50;
  double stagnation_tol = 1e-12;
  bool record_time = true;  // ms column is zero when false
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on out-of-range parameters.
  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  double re = 0.0;  // NaN when no truth is supplied
  double rr = 0.0;
  double norm_u = 0.0;
  double ms = 0.0;  // wall time since start
};

struct IterationTrace {
  std::vector<IterationRecord> records;

  void write_csv(std::ostream& os) const;
  std::vector<double> re() const;
  std::vector<double> rr() const;
};

enum class StopReason { max_iters, tolerance, stagnated };

struct SolverResult {
  CVector estimate;  // object estimate A^+ u
  CVector iterate;   // final transform-domain iterate (Ax for object-domain methods)
  IterationTrace trace;
  StopReason stop = StopReason::max_iters;
  int iterations = 0;
};

// Runs the configured solver from the object guess x0. Row 0 of the trace
// records x0 itself.
SolverResult run(const SolverConfig& config, const MeasurementOperator& A, const RVector& b,
                 const CVector& x0, const std::optional<CVector>& truth = std::nullopt);

// z_{j+1} = z_j - (step / ||z_0||^2) grad, grad the intensity-loss gradient.
SolverResult wirtinger_flow(const MeasurementOperator& A, const RVector& y, const CVector& z0,
                            double step, int iters,
                            const std::optional<CVector>& truth = std::nullopt,
                            bool record_time = true);

struct GapOptions {
  double tol = 1e-12;
  int max_iter = 200000;
  std::uint64_t seed = 1;
};

// Second singular value of zeta -> Re(B zeta), B = diag(sgn(conj(Ax))) A,
// with zeta in C^n viewed as R^{2n}. The leading pair is (1, x) for isometric A.
double spectral_gap_lambda2(const MeasurementOperator& A, const CVector& x,
                            const GapOptions& opts = {});

// Contraction factor exp(slope) of log RE over the last `window` records
// with floor < RE < ceiling. Throws when fewer than 10 records qualify.
double fit_rate(const std::vector<double>& re, int window = 50, double ceiling = 1e-3,
                double floor = 1e-13);

// 2 lambda sqrt(1 - lambda^2).
double optimal_rho(double lambda2);
// (1 - beta) / (2 beta - 1); beta must exceed 1/2.
double beta_to_rho(double beta);

}  // namespace phasekit
