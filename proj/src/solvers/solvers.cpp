#include "phasekit/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "phasekit/loss_noise.hpp"

namespace phasekit {

Projectors make_projectors(const MeasurementOperator& A, const RVector& b) {
  if (b.size() != A.data_size()) throw std::invalid_argument("make_projectors: length mismatch");
  return {[&A](const CVector& u) { return A.project_range(u); },
          [b](const CVector& u) { return project_data(b, u); }};
}

CVector ap_step(const MeasurementOperator& A, const RVector& b, const CVector& x) {
  return A.pseudo_inverse(project_data(b, A.forward(x)));
}

CVector aar_step(const Projectors& P, const CVector& u) {
  return 0.5 * u + 0.5 * P.reflect_data(P.reflect_range(u));
}

CVector aar_step_alt(const Projectors& P, const CVector& v) {
  return 0.5 * v + 0.5 * P.reflect_range(P.reflect_data(v));
}

CVector hio_step(const Projectors& P, const CVector& v, double beta) {
  const CVector py = P.data(v);
  const CVector inner = 2.0 * py - v + (beta - 1.0) * py;
  return 0.5 * (P.reflect_range(inner) + v + (1.0 - beta) * py);
}

CVector raar_step(const Projectors& P, const CVector& u, double beta) {
  const CVector py = P.data(u);
  return beta * (0.5 * u + 0.5 * P.reflect_range(2.0 * py - u)) + (1.0 - beta) * py;
}

CVector gaussian_drs_step(const Projectors& P, const CVector& u, double rho) {
  if (rho < 0.0) throw std::invalid_argument("gaussian_drs_step: rho < 0");
  const CVector px = P.range(u);
  const CVector rx = 2.0 * px - u;
  return (u + (rho - 1.0) * px + P.data(rx)) / (rho + 1.0);
}

CVector poisson_drs_step(const Projectors& P, const CVector& u, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("poisson_drs_step: rho must be > 0");
  const CVector rx = P.reflect_range(u);
  const CVector py = P.data(rx);
  const CVector phase = sgn(rx);
  const double c = 8.0 * (2.0 + rho) / (rho * rho);
  CVector out(u.size());
  for (Index j = 0; j < u.size(); ++j) {
    const double b2 = std::norm(py[j]);
    const double mag = std::sqrt(std::norm(rx[j]) + c * b2);
    out[j] = 0.5 * u[j] - rx[j] / (rho + 2.0) + rho / (2.0 * (rho + 2.0)) * mag * phase[j];
  }
  return out;
}

CVector object_domain_aar_step(const MeasurementOperator& A, const RVector& b, const CVector& x) {
  const CVector ax = A.forward(x);
  const CVector py = project_data(b, ax);
  return x + A.pseudo_inverse(project_data(b, 2.0 * py - ax) - py);
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::ap: return "ap";
    case Algorithm::aar: return "aar";
    case Algorithm::aar_alt: return "aar_alt";
    case Algorithm::hio: return "hio";
    case Algorithm::raar: return "raar";
    case Algorithm::gaussian_drs: return "gaussian_drs";
    case Algorithm::poisson_drs: return "poisson_drs";
    case Algorithm::object_aar: return "object_aar";
    case Algorithm::wf: return "wf";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::ap, Algorithm::aar, Algorithm::aar_alt, Algorithm::hio,
                      Algorithm::raar, Algorithm::gaussian_drs, Algorithm::poisson_drs,
                      Algorithm::object_aar, Algorithm::wf})
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

void SolverConfig::validate() const {
  if (max_iters < 0) throw std::invalid_argument("SolverConfig: max_iters < 0");
  if (ap_handoff_iters < 0) throw std::invalid_argument("SolverConfig: ap_handoff_iters < 0");
  if (tolerance < 0.0) throw std::invalid_argument("SolverConfig: tolerance < 0");
  if (stagnation_window < 1) throw std::invalid_argument("SolverConfig: stagnation_window < 1");
  if ((algorithm == Algorithm::raar || algorithm == Algorithm::hio) &&
      !(beta >= 0.5 && beta <= 1.0))
    throw std::invalid_argument("SolverConfig: beta must lie in [1/2, 1]");
  if (algorithm == Algorithm::gaussian_drs && !(rho >= 0.0))
    throw std::invalid_argument("SolverConfig: rho must be >= 0");
  if (algorithm == Algorithm::poisson_drs && !(rho > 0.0))
    throw std::invalid_argument("SolverConfig: rho must be > 0");
  if (algorithm == Algorithm::wf && !(step > 0.0))
    throw std::invalid_argument("SolverConfig: step must be > 0");
}

void IterationTrace::write_csv(std::ostream& os) const {
  os << "iter,re,rr,norm_u,ms\n";
  const auto old = os.precision(17);
  for (const IterationRecord& r : records) {
    os << r.iter << ',';
    if (!std::isnan(r.re)) os << r.re;
    os << ',' << r.rr << ',' << r.norm_u << ',' << r.ms << '\n';
  }
  os.precision(old);
}

std::vector<double> IterationTrace::re() const {
  std::vector<double> v;
  for (const IterationRecord& r : records) v.push_back(r.re);
  return v;
}

std::vector<double> IterationTrace::rr() const {
  std::vector<double> v;
  for (const IterationRecord& r : records) v.push_back(r.rr);
  return v;
}

namespace {

class Recorder {
 public:
  Recorder(const std::optional<CVector>& truth, bool timed)
      : truth_(truth), timed_(timed), start_(std::chrono::steady_clock::now()) {
    if (truth_ && truth_->norm() == 0.0) throw std::invalid_argument("run: zero truth");
  }

  void record(IterationTrace& trace, int iter, const CVector& x, double rr, double norm_u) const {
    IterationRecord r;
    r.iter = iter;
    r.re = truth_ ? dist(x, *truth_) / truth_->norm() : std::numeric_limits<double>::quiet_NaN();
    r.rr = rr;
    r.norm_u = norm_u;
    if (timed_)
      r.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
                 .count();
    trace.records.push_back(r);
  }

 private:
  const std::optional<CVector>& truth_;
  bool timed_;
  std::chrono::steady_clock::time_point start_;
};

bool stagnated(const IterationTrace& trace, int window, double tol) {
  const auto& r = trace.records;
  if (r.size() <= std::size_t(window)) return false;
  const double now = r.back().rr;
  const double then = r[r.size() - 1 - std::size_t(window)].rr;
  return std::abs(now - then) <= tol * std::abs(then);
}

}  // namespace

SolverResult run(const SolverConfig& config, const MeasurementOperator& A, const RVector& b,
                 const CVector& x0, const std::optional<CVector>& truth) {
  config.validate();
  if (b.size() != A.data_size()) throw std::invalid_argument("run: data length mismatch");
  if (x0.size() != A.object_size()) throw std::invalid_argument("run: init length mismatch");
  if (truth && truth->size() != A.object_size())
    throw std::invalid_argument("run: truth length mismatch");

  if (config.algorithm == Algorithm::wf) {
    SolverResult r = wirtinger_flow(A, b.cwiseAbs2(), x0, config.step, config.max_iters, truth,
                                    config.record_time);
    return r;
  }

  const Projectors P = make_projectors(A, b);
  const Recorder rec(truth, config.record_time);
  SolverResult res;
  const bool object_domain =
      config.algorithm == Algorithm::ap || config.algorithm == Algorithm::object_aar;

  CVector x = x0;
  CVector u = A.forward(x0);
  rec.record(res.trace, 0, x, relative_residual(b, u), u.norm());

  const int total = config.max_iters + config.ap_handoff_iters;
  for (int k = 1; k <= total; ++k) {
    const bool handoff = k > config.max_iters;
    if (handoff || object_domain) {
      if (handoff && k == config.max_iters + 1 && !object_domain) x = A.pseudo_inverse(u);
      x = (config.algorithm == Algorithm::object_aar && !handoff) ? object_domain_aar_step(A, b, x)
                                                                  : ap_step(A, b, x);
      u = A.forward(x);
    } else {
      switch (config.algorithm) {
        case Algorithm::aar: u = aar_step(P, u); break;
        case Algorithm::aar_alt: u = aar_step_alt(P, u); break;
        case Algorithm::hio: u = hio_step(P, u, config.beta); break;
        case Algorithm::raar: u = raar_step(P, u, config.beta); break;
        case Algorithm::gaussian_drs: u = gaussian_drs_step(P, u, config.rho); break;
        case Algorithm::poisson_drs: u = poisson_drs_step(P, u, config.rho); break;
        default: throw std::logic_error("run: unhandled algorithm");
      }
      x = A.pseudo_inverse(u);
    }
    const double rr = relative_residual(b, object_domain || handoff ? u : A.forward(x));
    rec.record(res.trace, k, x, rr, u.norm());
    res.iterations = k;
    if (rr <= config.tolerance) {
      res.stop = StopReason::tolerance;
      break;
    }
    if (stagnated(res.trace, config.stagnation_window, config.stagnation_tol)) {
      res.stop = StopReason::stagnated;
      break;
    }
  }
  res.estimate = x;
  res.iterate = u;
  return res;
}

SolverResult wirtinger_flow(const MeasurementOperator& A, const RVector& y, const CVector& z0,
                            double step, int iters, const std::optional<CVector>& truth,
                            bool record_time) {
  if (!(step > 0.0)) throw std::invalid_argument("wirtinger_flow: step must be > 0");
  if (iters < 0) throw std::invalid_argument("wirtinger_flow: iters < 0");
  const double n0 = z0.squaredNorm();
  if (n0 == 0.0) throw std::invalid_argument("wirtinger_flow: ||z0|| = 0");
  if (y.size() != A.data_size()) throw std::invalid_argument("wirtinger_flow: length mismatch");
  const RVector b = y.cwiseMax(0.0).cwiseSqrt();
  const Recorder rec(truth, record_time);
  SolverResult res;
  CVector z = z0;
  CVector az = A.forward(z);
  rec.record(res.trace, 0, z, relative_residual(b, az), az.norm());
  for (int k = 1; k <= iters; ++k) {
    z -= (step / n0) * intensity_gradient(z, y, A);
    az = A.forward(z);
    rec.record(res.trace, k, z, relative_residual(b, az), az.norm());
    res.iterations = k;
  }
  res.estimate = z;
  res.iterate = az;
  return res;
}

double spectral_gap_lambda2(const MeasurementOperator& A, const CVector& x, const GapOptions& opts) {
  if (x.size() != A.object_size()) throw std::invalid_argument("spectral_gap_lambda2: bad x");
  const CVector ax = A.forward(x);
  const RVector mag = ax.cwiseAbs();
  if (mag.maxCoeff() == 0.0 || mag.minCoeff() <= 1e-12 * mag.maxCoeff())
    throw std::invalid_argument("spectral_gap_lambda2: Ax has vanishing components");
  const CVector phase = sgn(ax).conjugate();

  // M zeta = B^* Re(B zeta) is the real Gram map in complex form.
  const auto apply = [&](const CVector& z) {
    const RVector re = phase.cwiseProduct(A.forward(z)).real();
    return CVector(A.adjoint(phase.conjugate().cwiseProduct(re.cast<cplx>())));
  };
  const CVector lead = x / x.norm();
  const auto deflate = [&](CVector& z) { z -= std::real(lead.dot(z)) * lead; };

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> d;
  CVector z(x.size());
  for (Index j = 0; j < z.size(); ++j) {
    const double re = d(rng);
    const double im = d(rng);
    z[j] = cplx(re, im);
  }
  deflate(z);
  z.normalize();
  double value = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    CVector w = apply(z);
    deflate(w);
    value = std::real(z.dot(w));
    const double resid = (w - value * z).norm();
    if (resid <= opts.tol * std::abs(value)) break;
    const double nw = w.norm();
    if (nw == 0.0) break;
    z = w / nw;
  }
  return std::sqrt(std::max(0.0, value));
}

double fit_rate(const std::vector<double>& re, int window, double ceiling, double floor) {
  if (window < 2) throw std::invalid_argument("fit_rate: window < 2");
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < re.size(); ++k)
    if (re[k] > floor && re[k] < ceiling) idx.push_back(k);
  if (idx.size() < 10) throw std::invalid_argument("fit_rate: too few records in the fit window");
  if (idx.size() > std::size_t(window)) idx.erase(idx.begin(), idx.end() - window);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = double(idx.size());
  for (std::size_t k : idx) {
    const double t = double(k);
    const double l = std::log(re[k]);
    sx += t;
    sy += l;
    sxx += t * t;
    sxy += t * l;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return std::exp(slope);
}

double optimal_rho(double lambda2) {
  if (!(lambda2 >= 0.0 && lambda2 <= 1.0))
    throw std::invalid_argument("optimal_rho: lambda2 must lie in [0, 1]");
  return 2.0 * lambda2 * std::sqrt(1.0 - lambda2 * lambda2);
}

double beta_to_rho(double beta) {
  if (!(beta > 0.5)) throw std::invalid_argument("beta_to_rho: beta must exceed 1/2");
  return (1.0 - beta) / (2.0 * beta - 1.0);
}

}  // namespace phasekit
