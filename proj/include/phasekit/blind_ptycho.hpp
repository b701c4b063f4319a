#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phasekit/operators.hpp"
#include "phasekit/solvers.hpp"

namespace phasekit {

// Joint object/mask iterate. u holds frames; v is the mask-loop iterate of
// the two-loop method; multiplier is the scaled dual of the DM scheme.
struct BlindState {
  ComplexImage object;
  ComplexImage mask;
  CVector u;
  CVector v;
  CVector multiplier;
  int epoch = 0;

  // Throws std::invalid_argument when shapes disagree with the geometry.
  void validate(const PtychoGeometry& geometry) const;
};

// Object and mask with u = v = F(mask, object) and a zero multiplier.
BlindState make_blind_state(const PtychoGeometry& geometry, ComplexImage object,
                            ComplexImage mask);

// |F(mask, object)|.
RVector blind_magnitudes(const PtychoGeometry& geometry, const ComplexImage& mask,
                         const ComplexImage& object);

// ||b - |F(mask, object)||| / ||b||.
double blind_residual(const PtychoGeometry& geometry, const RVector& b,
                      const ComplexImage& mask, const ComplexImage& object);

struct MpcConfig {
  double delta = 0.5;  // in (0, 1/2]
  int ramp_row = 0;
  int ramp_col = 0;
  std::uint64_t seed = 0;
};

// mask0 (.) exp(i 2 pi k.p / m) (.) exp(i phi), phi i.i.d. uniform on the open
// interval (-pi delta, pi delta).
ComplexImage mpc_mask_init(const ComplexImage& mask0, const MpcConfig& config);

// Which factors a step may change; freezing the mask gives the known-mask map.
struct BlindUpdate {
  bool object = true;
  bool mask = true;
};

// Per-frame sweep in a seeded random order. Each frame takes a gradient step
// on 1/2 ||mask (.) patch - psi||^2 with step 1 / (2 max |mask|^2) for the
// object and 1 / (2 max |patch|^2) for the mask, psi the projected exit wave.
// Frames whose mask or patch vanishes are skipped and counted in `skipped`.
BlindState epie_epoch(const PtychoGeometry& geometry, const RVector& b, const BlindState& state,
                      std::uint64_t seed, BlindUpdate update = {}, int* skipped = nullptr);

// Object x = sum_k conj(mask) psi_k / sum_k |mask|^2 over the frames covering
// each pixel; uncovered pixels keep `fallback`. psi holds one mask-sized exit
// wave per frame.
ComplexImage object_least_squares(const PtychoGeometry& geometry, const ComplexImage& mask,
                                  const std::vector<CVector>& psi, const ComplexImage& fallback);
// Mask counterpart with the object patches as weights.
ComplexImage mask_least_squares(const PtychoGeometry& geometry, const ComplexImage& object,
                                const std::vector<CVector>& psi, const ComplexImage& fallback);

// Difference map as one-step alternating ADMM:
//   z = P_Y(F(mask, x) - w), mask' = B_x^+(z + w), x' = A_{mask'}^+(z + w),
//   w' = w + z - F(mask', x'), with w the scaled multiplier.
BlindState dm_epoch(const PtychoGeometry& geometry, const RVector& b, const BlindState& state,
                    BlindUpdate update = {});

// u' = beta u + (1 - 2 beta) P_Y u + beta P_k R_Y u, x' = A_k^+ R_Y u,
// mask' = B_{x'}^+(u' + P_Y u - u), with P_k = A_k A_k^+ and A_k = A_{mask}.
BlindState eraar_step(const PtychoGeometry& geometry, const RVector& b, const BlindState& state,
                      double beta, BlindUpdate update = {});

// u' = u/(rho+1) + (rho-1)/(rho+1) P_k u + P_Y(2 P_k u - u)/(rho+1),
// x' = A_k^+ u', mask' = B_{x'}^+ u'.
BlindState egaussian_drs_step(const PtychoGeometry& geometry, const RVector& b,
                              const BlindState& state, double rho, BlindUpdate update = {});

enum class InnerMap { raar, gaussian_drs, poisson_drs };

std::string to_string(InnerMap kind);

// One epoch of the one-loop method: ell inner steps of the RAAR or
// Gaussian-DRS map at the current mask, then the matching factor updates
// from the last two inner iterates. ell = 1 is eraar_step / egaussian_drs_step.
// `param` is beta for RAAR and rho for the DRS maps.
BlindState one_loop_epoch(const PtychoGeometry& geometry, const RVector& b,
                          const BlindState& state, InnerMap kind, int ell, double param,
                          BlindUpdate update = {});

// One epoch of the two-loop method: ell_obj inner steps on u with P_k = A_k A_k^+
// giving x', then ell_mask inner steps on v with Q = B_{x'} B_{x'}^+ giving
// mask'. DRS maps read x' = A_k^+ u and mask' = B_{x'}^+ v; RAAR reads the
// reflected previous inner iterate. Both loops warm-start from the last epoch.
// `param` is beta for RAAR and rho for the DRS maps.
BlindState two_loop_epoch(const PtychoGeometry& geometry, const RVector& b,
                          const BlindState& state, InnerMap kind, int ell_obj, int ell_mask,
                          double param, BlindUpdate update = {});

enum class BlindMethod { epie, dm, eraar, egaussian_drs, one_loop, two_loop };

std::string to_string(BlindMethod m);
BlindMethod parse_blind_method(const std::string& name);

struct BlindConfig {
  BlindMethod method = BlindMethod::two_loop;
  InnerMap inner = InnerMap::gaussian_drs;  // one_loop / two_loop
  double beta = 0.8;                        // eRAAR and RAAR inner maps, in [1/2, 1)
  double rho = 1.0;                         // DRS maps
  int inner_iters = 10;                     // ell (object loop)
  int mask_iters = 10;                      // ell (mask loop)
  int max_epochs = 150;
  double tolerance = 0.0;  // stop once RR <= tolerance
  int stagnation_window = 20;
  double stagnation_tol = 1e-12;
  bool record_time = true;
  std::uint64_t seed = 0;  // ePIE frame order
  BlindUpdate update{};

  void validate() const;
};

struct BlindRecord {
  int epoch = 0;
  double re_obj = 0.0;   // affine-waived, NaN without truth
  double re_mask = 0.0;  // affine-waived, NaN without truth
  double rr = 0.0;       // ||b - |F(mask, x)||| / ||b||
  double norm_u = 0.0;
  double ms = 0.0;
};

struct BlindTrace {
  std::vector<BlindRecord> records;

  // Header iter,re,rr,norm_u,ms,re_obj,re_mask; re repeats re_obj.
  void write_csv(std::ostream& os) const;
  std::vector<double> re_obj() const;
  std::vector<double> rr() const;
};

struct BlindTruth {
  ComplexImage object;
  ComplexImage mask;
};

struct BlindResult {
  BlindState state;
  BlindTrace trace;
  StopReason stop = StopReason::max_iters;
  int epochs = 0;
};

using EpochCallback = std::function<void(const BlindState&)>;

// Runs epochs from `init`; row 0 of the trace records the initial pair.
BlindResult run_blind(const BlindConfig& config, const PtychoGeometry& geometry, const RVector& b,
                      BlindState init, const std::optional<BlindTruth>& truth = std::nullopt,
                      const EpochCallback& on_epoch = {});

// (object e^{i(b + w.p)}, mask e^{-i(a + w.p)}). Frames that wrap keep the
// data only when w_j n_j is a multiple of 2 pi.
std::pair<ComplexImage, ComplexImage> make_affine_phase_pair(const ComplexImage& object,
                                                             const ComplexImage& mask, double a,
                                                             double b, double w_row,
                                                             double w_col);

enum class RasterAmbiguity { block_phase, grid_pathology, fresnel_twin };

struct AmbiguityParams {
  int tau = 0;        // raster step; must divide the object and mask sizes
  ComplexImage psi;   // tau x tau phase field for the grid pathology
};

// h = conj(check(mask)) (.) mask split into four quadrants with
// h1 = h4 = sigma h2 = sigma h3 for Fresnel masks with integer f.
struct TwinSymmetry {
  ComplexImage h;
  int sigma = 1;
  double defect = 0.0;  // max deviation from the quadrant symmetry
};
TwinSymmetry twin_symmetry(const ComplexImage& mask);

// Pairs sharing the raster-scan data of (object, mask):
//   block_phase: object tau-block (I, J) times e^{i 2 pi (I+J)/q}, mask
//     tau-block (i, j) times e^{-i 2 pi (i+j)/q}, q = n / tau;
//   grid_pathology: object times e^{-i psi}, mask times e^{i psi}, psi tiled;
//   fresnel_twin: object check(x) (.) conj(h), mask unchanged; needs a square
//     mask as large as the object, even n, tau = n/2 and the twin symmetry.
std::pair<ComplexImage, ComplexImage> make_raster_ambiguity(const ComplexImage& object,
                                                            const ComplexImage& mask,
                                                            RasterAmbiguity kind,
                                                            const AmbiguityParams& params);

}  // namespace phasekit
