#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "phasekit/core.hpp"

namespace phasekit {

// Composite layouts place the n x n specimen x at the top-left corner:
//   single: [x, r]            (n x 2n)
//   dual:   [[x, r_p], [r_b, 0]]  (2n x 2n)
// Autocorrelation A_c(s) = sum_t c(t) conj(c(t - s)), zero outside c.

enum class ReferenceKind { pinhole, slit, block };

std::string to_string(ReferenceKind kind);

// pinhole: single 1 at (n-1, n-1); slit: ones in column n-1; block: all ones.
ComplexImage make_reference(ReferenceKind kind, int n);

// [x, r]; throws unless both are n x n.
ComplexImage compose(const ComplexImage& x, const ComplexImage& r);
// [[x, r_p], [r_b, 0]]; throws unless all three are n x n.
ComplexImage compose_dual(const ComplexImage& x, const ComplexImage& r_pinhole,
                          const ComplexImage& r_block);

// Squared Fourier magnitudes of a zero-padded composite on a grid_rows x
// grid_cols DFT grid, stored row-major.
struct HoloMeasurement {
  RVector intensities;
  int grid_rows = 0;
  int grid_cols = 0;
  int composite_rows = 0;
  int composite_cols = 0;
  int specimen = 0;  // n

  void validate() const;
};

// Default grid: 8 n per axis.
int default_holo_grid(int n);

// Throws if the grid is smaller than the composite.
HoloMeasurement measure_holo(const ComplexImage& composite, int specimen, int grid_rows,
                             int grid_cols);

// Counts ~ Poisson(scale * I), rescaled back to intensity units so that the
// noiseless limit is the clean measurement.
HoloMeasurement add_photon_noise(const HoloMeasurement& clean, double scale, std::uint64_t seed);

// Scale at which the specimen alone yields `photons` expected counts on the
// grid. One fluence for every scheme: references add their own photons.
double photon_scale(const ComplexImage& x, double photons, int grid_rows, int grid_cols);

// Linear autocorrelation of the composite, (2H-1) x (2W-1) with lag (s1, s2)
// stored at (s1 + H - 1, s2 + W - 1). Throws if the grid is below 2H-1 or
// 2W-1 per axis, or if the circular autocorrelation carries more than
// wrap_tolerance (relative, in norm) outside the valid lag window.
ComplexImage autocorr_from_magnitudes(const HoloMeasurement& meas,
                                      double wrap_tolerance = 1e-9);

// Cross-correlation block y(p) = A_c(p - (n-1) - offset), p in [0, n)^2,
// for a reference placed at (row_offset, col_offset) relative to x.
// Equals sum_t x(t) conj(r(t + n-1 - p)). Throws if a lag falls outside
// the autocorrelation grid.
ComplexImage extract_crosscorr(const ComplexImage& autocorr, int n, int row_offset,
                               int col_offset);
// Reference to the right of x: offset (0, n).
ComplexImage extract_crosscorr(const ComplexImage& autocorr, int n);

// y = T(r) x: causal 2-D convolution with kernel k(e) = conj(r(n-1-e)).
ComplexImage apply_reference_operator(const ComplexImage& x, const ComplexImage& r);
// x = T(r)^* y.
ComplexImage apply_reference_adjoint(const ComplexImage& y, const ComplexImage& r);

// Solves T(r) x = y by forward substitution in row-major order.
// Throws unless r(n-1, n-1) != 0 and shapes agree.
ComplexImage referenced_deconvolve(const ComplexImage& y_block, const ComplexImage& r);

struct DualDeconvOptions {
  int max_iters = 2000;
  double tolerance = 1e-13;  // relative normal-equation residual
};

// Least squares over both cross-correlation blocks,
//   min ||T(r_p) x - y_p||^2 + ||T(r_b) x - y_b||^2,
// by conjugate gradients on the normal equations, started from the
// single-reference solution. An all-zero portion drops out exactly.
// Throws when neither portion satisfies the separation condition.
ComplexImage dual_deconvolve_blocks(const ComplexImage& y_pinhole, const ComplexImage& y_block,
                                    const ComplexImage& r_pinhole, const ComplexImage& r_block,
                                    const DualDeconvOptions& options = {});
// Extracts both blocks from a dual-layout measurement and solves.
ComplexImage dual_reference_deconvolve(const HoloMeasurement& meas, const ComplexImage& r_pinhole,
                                       const ComplexImage& r_block,
                                       const DualDeconvOptions& options = {},
                                       double wrap_tolerance = 1e-9);

enum class HoloScheme { pinhole, slit, block, dual };

std::string to_string(HoloScheme scheme);
HoloScheme parse_holo_scheme(const std::string& name);

// Composite for a scheme; dual uses the pinhole and block references.
ComplexImage holo_composite(const ComplexImage& x, HoloScheme scheme);
// Recovers the specimen from a measurement taken with holo_composite.
ComplexImage holo_recover(const HoloMeasurement& meas, HoloScheme scheme,
                          double wrap_tolerance = 1e-9);

struct HoloErrorRow {
  HoloScheme scheme = HoloScheme::pinhole;
  double photons = 0.0;
  std::uint64_t seed = 0;
  double rel_error = 0.0;  // ||x_hat - x|| / ||x||
};

// Simulates, adds photon noise and recovers for every (scheme, budget, seed)
// in order; seeds are seed0, seed0 + 1, ...
std::vector<HoloErrorRow> holo_noise_sweep(const ComplexImage& x,
                                           const std::vector<HoloScheme>& schemes,
                                           const std::vector<double>& photons, int seeds,
                                           std::uint64_t seed0, int grid);

// Header "scheme,photons,seed,rel_error", 17 significant digits.
void write_holo_error_csv(std::ostream& os, const std::vector<HoloErrorRow>& rows);

}  // namespace phasekit
