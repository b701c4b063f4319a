#include "phasekit/blind_ptycho.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace phasekit {

namespace {

constexpr double kPi = std::numbers::pi;

ComplexImage object_image(const PtychoGeometry& g, CVector v) {
  return ComplexImage(g.object_rows(), g.object_cols(), std::move(v));
}

ComplexImage mask_image(const PtychoGeometry& g, CVector v) {
  return ComplexImage(g.mask_rows(), g.mask_cols(), std::move(v));
}

// A_mask^+ u, keeping `fallback` where the Gram weight vanishes.
ComplexImage solve_object(const PtychoGeometry& g, const ComplexImage& mask, const CVector& u,
                          const ComplexImage& fallback) {
  return object_image(g, PtychographicOperator(g, mask).pseudo_inverse(u, fallback.vec()));
}

// B_object^+ u, keeping `fallback` where the Gram weight vanishes.
ComplexImage solve_mask(const PtychoGeometry& g, const ComplexImage& object, const CVector& u,
                        const ComplexImage& fallback) {
  return mask_image(g, MaskSideOperator(g, object).pseudo_inverse(u, fallback.vec()));
}

CVector data_or_frames(const CVector& v, const CVector& fallback) {
  return v.size() == fallback.size() ? v : fallback;
}

void check_data_length(const PtychoGeometry& g, const RVector& b) {
  if (b.size() != g.data_size()) throw std::invalid_argument("blind: data length mismatch");
}

// |Phi|^2 gain of one frame: Phi^* Phi = gain I.
double frame_gain(const FrameTransform& f) {
  return f.scale() * f.scale() * double(f.grid_size());
}

CVector inner_step(const Projectors& P, const CVector& u, InnerMap kind, double param) {
  switch (kind) {
    case InnerMap::raar: return raar_step(P, u, param);
    case InnerMap::gaussian_drs: return gaussian_drs_step(P, u, param);
    case InnerMap::poisson_drs: return poisson_drs_step(P, u, param);
  }
  throw std::logic_error("blind: unhandled inner map");
}

void check_inner_param(InnerMap kind, double param) {
  if (kind == InnerMap::raar && !(param >= 0.5 && param < 1.0))
    throw std::invalid_argument("blind: beta must lie in [1/2, 1)");
  if (kind == InnerMap::gaussian_drs && !(param >= 0.0))
    throw std::invalid_argument("blind: rho must be >= 0");
  if (kind == InnerMap::poisson_drs && !(param > 0.0))
    throw std::invalid_argument("blind: rho must be > 0");
}

BlindState next_state(const BlindState& s) {
  BlindState out = s;
  ++out.epoch;
  return out;
}

}  // namespace

void BlindState::validate(const PtychoGeometry& g) const {
  if (object.height() != g.object_rows() || object.width() != g.object_cols())
    throw std::invalid_argument("BlindState: object shape mismatch");
  if (mask.height() != g.mask_rows() || mask.width() != g.mask_cols())
    throw std::invalid_argument("BlindState: mask shape mismatch");
  if (u.size() != g.data_size()) throw std::invalid_argument("BlindState: frame length mismatch");
  if (v.size() != 0 && v.size() != g.data_size())
    throw std::invalid_argument("BlindState: mask-loop length mismatch");
  if (multiplier.size() != 0 && multiplier.size() != g.data_size())
    throw std::invalid_argument("BlindState: multiplier length mismatch");
}

BlindState make_blind_state(const PtychoGeometry& g, ComplexImage object, ComplexImage mask) {
  BlindState s;
  s.u = g.frames(mask, object);
  s.v = s.u;
  s.multiplier = CVector::Zero(s.u.size());
  s.object = std::move(object);
  s.mask = std::move(mask);
  return s;
}

RVector blind_magnitudes(const PtychoGeometry& g, const ComplexImage& mask,
                         const ComplexImage& object) {
  return g.frames(mask, object).cwiseAbs();
}

double blind_residual(const PtychoGeometry& g, const RVector& b, const ComplexImage& mask,
                      const ComplexImage& object) {
  check_data_length(g, b);
  return relative_residual(b, g.frames(mask, object));
}

ComplexImage mpc_mask_init(const ComplexImage& mask0, const MpcConfig& config) {
  if (!(config.delta > 0.0 && config.delta <= 0.5))
    throw std::invalid_argument("mpc_mask_init: delta must lie in (0, 1/2]");
  const double half_width = kPi * config.delta;
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> phase(-half_width, half_width);
  ComplexImage out(mask0.height(), mask0.width());
  for (int r = 0; r < mask0.height(); ++r)
    for (int c = 0; c < mask0.width(); ++c) {
      double phi = phase(rng);
      while (phi == -half_width) phi = phase(rng);  // keep the interval open
      const double ramp = 2.0 * kPi *
                          (double(config.ramp_row) * r / mask0.height() +
                           double(config.ramp_col) * c / mask0.width());
      out(r, c) = mask0(r, c) * std::polar(1.0, ramp) * std::polar(1.0, phi);
    }
  return out;
}

BlindState epie_epoch(const PtychoGeometry& g, const RVector& b, const BlindState& state,
                      std::uint64_t seed, BlindUpdate update, int* skipped) {
  check_data_length(g, b);
  state.validate(g);
  const FrameTransform& f = g.frame_transform();
  const double gain = frame_gain(f);
  const Index fs = g.frame_size();
  const int m0 = g.mask_rows(), m1 = g.mask_cols();
  const Index msize = Index(m0) * m1;

  std::vector<Index> order(std::size_t(g.frame_count()));
  std::iota(order.begin(), order.end(), Index(0));
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  BlindState out = next_state(state);
  CVector& x = out.object.vec();
  CVector& mu = out.mask.vec();
  CVector psi(msize), patch(msize), spectrum(fs), psi_new(msize);
  int skip = 0;
  for (Index t : order) {
    for (int r = 0; r < m0; ++r)
      for (int c = 0; c < m1; ++c) {
        const Index k = Index(r) * m1 + c;
        patch[k] = x[g.object_index(t, r, c)];
        psi[k] = mu[k] * patch[k];
      }
    const double mu_max = mu.cwiseAbs2().maxCoeff();
    const double patch_max = patch.cwiseAbs2().maxCoeff();
    if ((update.object && mu_max <= kGramFloor) || (update.mask && patch_max <= kGramFloor)) {
      ++skip;
      continue;
    }
    f.forward(psi.data(), spectrum.data());
    spectrum = project_data(b.segment(t * fs, fs), spectrum);
    f.adjoint(spectrum.data(), psi_new.data());
    const CVector diff = psi_new / gain - psi;
    if (update.object)
      for (int r = 0; r < m0; ++r)
        for (int c = 0; c < m1; ++c) {
          const Index k = Index(r) * m1 + c;
          x[g.object_index(t, r, c)] += std::conj(mu[k]) * diff[k] / mu_max;
        }
    if (update.mask) mu += (patch.conjugate().array() * diff.array()).matrix() / patch_max;
  }
  out.u = g.frames(out.mask, out.object);
  if (skipped) *skipped = skip;
  return out;
}

ComplexImage object_least_squares(const PtychoGeometry& g, const ComplexImage& mask,
                                  const std::vector<CVector>& psi, const ComplexImage& fallback) {
  if (psi.size() != std::size_t(g.frame_count()))
    throw std::invalid_argument("object_least_squares: frame count mismatch");
  const int m1 = g.mask_cols();
  CVector num = CVector::Zero(Index(g.object_rows()) * g.object_cols());
  RVector den = RVector::Zero(num.size());
  for (Index t = 0; t < g.frame_count(); ++t)
    for (int r = 0; r < g.mask_rows(); ++r)
      for (int c = 0; c < m1; ++c) {
        const Index k = Index(r) * m1 + c, p = g.object_index(t, r, c);
        num[p] += std::conj(mask(r, c)) * psi[std::size_t(t)][k];
        den[p] += std::norm(mask(r, c));
      }
  ComplexImage out = fallback;
  for (Index p = 0; p < num.size(); ++p)
    if (den[p] > kGramFloor) out.vec()[p] = num[p] / den[p];
  return out;
}

ComplexImage mask_least_squares(const PtychoGeometry& g, const ComplexImage& object,
                                const std::vector<CVector>& psi, const ComplexImage& fallback) {
  if (psi.size() != std::size_t(g.frame_count()))
    throw std::invalid_argument("mask_least_squares: frame count mismatch");
  const int m1 = g.mask_cols();
  const Index msize = Index(g.mask_rows()) * m1;
  CVector num = CVector::Zero(msize);
  RVector den = RVector::Zero(msize);
  for (Index t = 0; t < g.frame_count(); ++t)
    for (int r = 0; r < g.mask_rows(); ++r)
      for (int c = 0; c < m1; ++c) {
        const Index k = Index(r) * m1 + c;
        const cplx xp = object.vec()[g.object_index(t, r, c)];
        num[k] += std::conj(xp) * psi[std::size_t(t)][k];
        den[k] += std::norm(xp);
      }
  ComplexImage out = fallback;
  for (Index k = 0; k < msize; ++k)
    if (den[k] > kGramFloor) out.vec()[k] = num[k] / den[k];
  return out;
}

BlindState dm_epoch(const PtychoGeometry& g, const RVector& b, const BlindState& state,
                    BlindUpdate update) {
  check_data_length(g, b);
  state.validate(g);
  BlindState out = next_state(state);
  const CVector w = data_or_frames(state.multiplier, CVector::Zero(g.data_size()));
  const CVector z = project_data(b, g.frames(state.mask, state.object) - w);
  const CVector s = z + w;
  if (update.mask) out.mask = solve_mask(g, state.object, s, state.mask);
  if (update.object) out.object = solve_object(g, out.mask, s, state.object);
  out.multiplier = w + z - g.frames(out.mask, out.object);
  out.u = z;
  return out;
}

BlindState eraar_step(const PtychoGeometry& g, const RVector& b, const BlindState& state,
                      double beta, BlindUpdate update) {
  check_inner_param(InnerMap::raar, beta);
  check_data_length(g, b);
  state.validate(g);
  const PtychographicOperator A(g, state.mask);
  const CVector& u = state.u;
  const CVector py = project_data(b, u);
  const CVector ry = 2.0 * py - u;
  BlindState out = next_state(state);
  out.u = beta * u + (1.0 - 2.0 * beta) * py + beta * A.project_range(ry);
  if (update.object) out.object = object_image(g, A.pseudo_inverse(ry, state.object.vec()));
  if (update.mask) out.mask = solve_mask(g, out.object, out.u + py - u, state.mask);
  return out;
}

BlindState egaussian_drs_step(const PtychoGeometry& g, const RVector& b, const BlindState& state,
                              double rho, BlindUpdate update) {
  check_inner_param(InnerMap::gaussian_drs, rho);
  check_data_length(g, b);
  state.validate(g);
  const PtychographicOperator A(g, state.mask);
  const CVector& u = state.u;
  const CVector pu = A.project_range(u);
  BlindState out = next_state(state);
  out.u = (u + (rho - 1.0) * pu + project_data(b, 2.0 * pu - u)) / (rho + 1.0);
  // Object from the current mask, then mask against that object; both fit u'.
  if (update.object) out.object = solve_object(g, state.mask, out.u, state.object);
  if (update.mask) out.mask = solve_mask(g, out.object, out.u, state.mask);
  return out;
}

std::string to_string(InnerMap kind) {
  switch (kind) {
    case InnerMap::raar: return "raar";
    case InnerMap::gaussian_drs: return "gaussian_drs";
    case InnerMap::poisson_drs: return "poisson_drs";
  }
  throw std::logic_error("to_string: unhandled inner map");
}

BlindState one_loop_epoch(const PtychoGeometry& g, const RVector& b, const BlindState& state,
                          InnerMap kind, int ell, double param, BlindUpdate update) {
  if (ell < 1) throw std::invalid_argument("one_loop_epoch: ell must be >= 1");
  check_inner_param(kind, param);
  check_data_length(g, b);
  state.validate(g);
  const PtychographicOperator A(g, state.mask);
  const Projectors P = make_projectors(A, b);
  CVector prev = state.u, u = state.u;
  for (int i = 0; i < ell; ++i) {
    prev = u;
    u = inner_step(P, u, kind, param);
  }
  BlindState out = next_state(state);
  out.u = u;
  if (kind == InnerMap::raar) {
    const CVector py = P.data(prev);
    if (update.object)
      out.object = object_image(g, A.pseudo_inverse(2.0 * py - prev, state.object.vec()));
    if (update.mask) out.mask = solve_mask(g, out.object, u + py - prev, state.mask);
  } else {
    if (update.object) out.object = solve_object(g, state.mask, u, state.object);
    if (update.mask) out.mask = solve_mask(g, out.object, u, state.mask);
  }
  return out;
}

BlindState two_loop_epoch(const PtychoGeometry& g, const RVector& b, const BlindState& state,
                          InnerMap kind, int ell_obj, int ell_mask, double param,
                          BlindUpdate update) {
  if (ell_obj < 1 || ell_mask < 1)
    throw std::invalid_argument("two_loop_epoch: inner iteration counts must be >= 1");
  check_inner_param(kind, param);
  check_data_length(g, b);
  state.validate(g);
  BlindState out = next_state(state);

  const auto loop = [&](const MeasurementOperator& op, CVector& w, int ell) {
    const Projectors P = make_projectors(op, b);
    CVector prev = w;
    for (int i = 0; i < ell; ++i) {
      prev = w;
      w = inner_step(P, w, kind, param);
    }
    // RAAR reads R_Y of the previous inner iterate; DRS reads the last one.
    return kind == InnerMap::raar ? P.reflect_data(prev) : w;
  };

  if (update.object) {
    const PtychographicOperator A(g, state.mask);
    const CVector src = loop(A, out.u, ell_obj);
    out.object = object_image(g, A.pseudo_inverse(src, state.object.vec()));
  }
  if (update.mask) {
    out.v = data_or_frames(state.v, state.u);
    const MaskSideOperator B(g, out.object);
    const CVector src = loop(B, out.v, ell_mask);
    out.mask = mask_image(g, B.pseudo_inverse(src, state.mask.vec()));
  }
  return out;
}

std::string to_string(BlindMethod m) {
  switch (m) {
    case BlindMethod::epie: return "epie";
    case BlindMethod::dm: return "dm";
    case BlindMethod::eraar: return "eraar";
    case BlindMethod::egaussian_drs: return "egaussian_drs";
    case BlindMethod::one_loop: return "one_loop";
    case BlindMethod::two_loop: return "two_loop";
  }
  throw std::logic_error("to_string: unhandled blind method");
}

BlindMethod parse_blind_method(const std::string& name) {
  for (BlindMethod m : {BlindMethod::epie, BlindMethod::dm, BlindMethod::eraar,
                        BlindMethod::egaussian_drs, BlindMethod::one_loop, BlindMethod::two_loop})
    if (to_string(m) == name) return m;
  throw std::invalid_argument("unknown blind method: " + name);
}

void BlindConfig::validate() const {
  if (!(beta >= 0.5 && beta < 1.0)) throw std::invalid_argument("BlindConfig: beta not in [1/2, 1)");
  if (!(rho >= 0.0)) throw std::invalid_argument("BlindConfig: rho < 0");
  if (inner == InnerMap::poisson_drs && !(rho > 0.0))
    throw std::invalid_argument("BlindConfig: Poisson inner map needs rho > 0");
  if (inner_iters < 1 || mask_iters < 1)
    throw std::invalid_argument("BlindConfig: inner iteration counts must be >= 1");
  if (max_epochs < 0) throw std::invalid_argument("BlindConfig: max_epochs < 0");
  if (stagnation_window < 1) throw std::invalid_argument("BlindConfig: stagnation_window < 1");
}

void BlindTrace::write_csv(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "iter,re,rr,norm_u,ms,re_obj,re_mask\n";
  for (const BlindRecord& r : records)
    os << r.epoch << ',' << r.re_obj << ',' << r.rr << ',' << r.norm_u << ',' << r.ms << ','
       << r.re_obj << ',' << r.re_mask << '\n';
  os.precision(old);
}

std::vector<double> BlindTrace::re_obj() const {
  std::vector<double> out;
  for (const BlindRecord& r : records) out.push_back(r.re_obj);
  return out;
}

std::vector<double> BlindTrace::rr() const {
  std::vector<double> out;
  for (const BlindRecord& r : records) out.push_back(r.rr);
  return out;
}

BlindResult run_blind(const BlindConfig& config, const PtychoGeometry& g, const RVector& b,
                      BlindState init, const std::optional<BlindTruth>& truth,
                      const EpochCallback& on_epoch) {
  config.validate();
  check_data_length(g, b);
  init.validate(g);
  if (truth && (!truth->object.same_shape(init.object) || !truth->mask.same_shape(init.mask)))
    throw std::invalid_argument("run_blind: truth shape mismatch");

  const auto start = std::chrono::steady_clock::now();
  BlindResult res;
  const auto record = [&](const BlindState& s) {
    BlindRecord r;
    r.epoch = s.epoch;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.re_obj = truth ? affine_phase_error(s.object, truth->object) : nan;
    r.re_mask = truth ? affine_phase_error(s.mask, truth->mask) : nan;
    r.rr = blind_residual(g, b, s.mask, s.object);
    r.norm_u = s.u.norm();
    if (config.record_time)
      r.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                 .count();
    res.trace.records.push_back(r);
  };

  BlindState s = std::move(init);
  s.epoch = 0;
  record(s);
  for (int k = 1; k <= config.max_epochs; ++k) {
    switch (config.method) {
      case BlindMethod::epie:
        s = epie_epoch(g, b, s, config.seed + std::uint64_t(k), config.update);
        break;
      case BlindMethod::dm: s = dm_epoch(g, b, s, config.update); break;
      case BlindMethod::eraar: s = eraar_step(g, b, s, config.beta, config.update); break;
      case BlindMethod::egaussian_drs:
        s = egaussian_drs_step(g, b, s, config.rho, config.update);
        break;
      case BlindMethod::one_loop: {
        const double param = config.inner == InnerMap::raar ? config.beta : config.rho;
        s = one_loop_epoch(g, b, s, config.inner, config.inner_iters, param, config.update);
        break;
      }
      case BlindMethod::two_loop: {
        const double param = config.inner == InnerMap::raar ? config.beta : config.rho;
        s = two_loop_epoch(g, b, s, config.inner, config.inner_iters, config.mask_iters, param,
                           config.update);
        break;
      }
    }
    record(s);
    res.epochs = k;
    if (on_epoch) on_epoch(s);
    const auto& rec = res.trace.records;
    if (rec.back().rr <= config.tolerance) {
      res.stop = StopReason::tolerance;
      break;
    }
    if (rec.size() > std::size_t(config.stagnation_window)) {
      const double then = rec[rec.size() - 1 - std::size_t(config.stagnation_window)].rr;
      if (std::abs(rec.back().rr - then) <= config.stagnation_tol * std::abs(then)) {
        res.stop = StopReason::stagnated;
        break;
      }
    }
  }
  res.state = std::move(s);
  return res;
}

std::pair<ComplexImage, ComplexImage> make_affine_phase_pair(const ComplexImage& object,
                                                             const ComplexImage& mask, double a,
                                                             double b, double w_row,
                                                             double w_col) {
  ComplexImage x = object, nu = mask;
  for (int r = 0; r < x.height(); ++r)
    for (int c = 0; c < x.width(); ++c) x(r, c) *= std::polar(1.0, b + w_row * r + w_col * c);
  for (int r = 0; r < nu.height(); ++r)
    for (int c = 0; c < nu.width(); ++c) nu(r, c) *= std::polar(1.0, -a - w_row * r - w_col * c);
  return {x, nu};
}

TwinSymmetry twin_symmetry(const ComplexImage& mask) {
  const int m = mask.height();
  if (mask.width() != m || m % 2 != 0)
    throw std::invalid_argument("twin_symmetry: mask must be square with even size");
  TwinSymmetry out;
  out.h = ComplexImage(m, m);
  // conj of the conjugate inversion is the plain inversion.
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) out.h(r, c) = mask(m - 1 - r, m - 1 - c) * mask(r, c);
  const int h = m / 2;
  cplx overlap = 0.0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < h; ++c) overlap += std::conj(out.h(r, c + h)) * out.h(r, c);
  out.sigma = overlap.real() < 0.0 ? -1 : 1;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < h; ++c) {
      const cplx h1 = out.h(r, c);
      out.defect = std::max({out.defect, std::abs(h1 - out.h(r + h, c + h)),
                             std::abs(h1 - double(out.sigma) * out.h(r, c + h)),
                             std::abs(h1 - double(out.sigma) * out.h(r + h, c))});
    }
  return out;
}

std::pair<ComplexImage, ComplexImage> make_raster_ambiguity(const ComplexImage& object,
                                                            const ComplexImage& mask,
                                                            RasterAmbiguity kind,
                                                            const AmbiguityParams& params) {
  const int n0 = object.height(), n1 = object.width();
  const int m0 = mask.height(), m1 = mask.width();
  const int tau = params.tau;
  if (kind == RasterAmbiguity::fresnel_twin) {
    if (n0 != n1 || m0 != n0 || m1 != n1 || n0 % 2 != 0)
      throw std::invalid_argument("fresnel twin: needs square even n and mask as large as object");
    if (tau != 0 && tau != n0 / 2) throw std::invalid_argument("fresnel twin: needs tau = n/2");
    const TwinSymmetry sym = twin_symmetry(mask);
    if (sym.defect > 1e-9)
      throw std::invalid_argument("fresnel twin: mask lacks the quadrant symmetry");
    ComplexImage x(n0, n0);
    for (int r = 0; r < n0; ++r)
      for (int c = 0; c < n0; ++c)
        x(r, c) = std::conj(object(n0 - 1 - r, n0 - 1 - c)) * std::conj(sym.h(r, c));
    return {x, mask};
  }

  if (tau < 1 || n0 % tau != 0 || n1 % tau != 0 || m0 % tau != 0 || m1 % tau != 0)
    throw std::invalid_argument("raster ambiguity: tau must divide object and mask sizes");
  ComplexImage x = object, nu = mask;
  if (kind == RasterAmbiguity::block_phase) {
    if (n0 != n1) throw std::invalid_argument("block phase: needs a square object");
    const int q = n0 / tau;
    const auto phase = [q](int k) { return std::polar(1.0, 2.0 * kPi * double(k % q) / q); };
    for (int r = 0; r < n0; ++r)
      for (int c = 0; c < n1; ++c) x(r, c) *= phase(r / tau + c / tau);
    for (int r = 0; r < m0; ++r)
      for (int c = 0; c < m1; ++c) nu(r, c) *= std::conj(phase(r / tau + c / tau));
    return {x, nu};
  }

  if (params.psi.height() != tau || params.psi.width() != tau)
    throw std::invalid_argument("grid pathology: psi must be tau x tau");
  const cplx i(0.0, 1.0);
  for (int r = 0; r < n0; ++r)
    for (int c = 0; c < n1; ++c) x(r, c) *= std::exp(-i * params.psi(r % tau, c % tau));
  for (int r = 0; r < m0; ++r)
    for (int c = 0; c < m1; ++c) nu(r, c) *= std::exp(i * params.psi(r % tau, c % tau));
  return {x, nu};
}

}  // namespace phasekit
