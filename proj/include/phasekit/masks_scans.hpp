#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "phasekit/operators.hpp"

namespace phasekit {

// e^{i phi}, phi i.i.d. uniform on (-pi, pi]; rows x cols (square by default).
ComplexImage random_phase_mask(int m, std::uint64_t seed);
ComplexImage random_phase_mask(int rows, int cols, std::uint64_t seed);

// mu(k1, k2) = exp(i pi f (k1^2 + k2^2) / m) with 1-based k; stored at (k1-1, k2-1).
ComplexImage fresnel_mask(int m, double f);

enum class ScanKind { raster, perturbed_rank1, perturbed_fullrank };

struct ScanPattern {
  std::vector<Shift> shifts;    // wrapped into [0, n)
  std::vector<int> k_index;     // lattice row index of each shift
  std::vector<int> l_index;     // lattice column index of each shift
  int n = 0;
  int tau = 0;
  int q = 0;
  ScanKind kind = ScanKind::raster;

  // Raster steps with no overlap (tau >= m) leave the object undetermined.
  bool zero_overlap(int m) const { return tau >= m; }
};

inline constexpr int kDefaultJitter = 4;

ScanPattern raster_scan(int n, int q);
// Jitter uniform on [-jitter, jitter]; rank-1 shares the row jitter along k
// and the column jitter along l. Duplicate shifts are redrawn.
ScanPattern perturbed_rank1(int n, int q, std::uint64_t seed, int jitter = kDefaultJitter);
ScanPattern perturbed_fullrank(int n, int q, std::uint64_t seed, int jitter = kDefaultJitter);

// CSV with header k,l,shift1,shift2.
void write_scan_csv(std::ostream& os, const ScanPattern& pattern);

struct Connectivity {
  int s;           // largest s for which the s-connective graph is connected
  bool connected;  // s >= 2
};

// Edge weight between shifts t, t' is |block(t) cap block(t') cap support| on
// the periodic n0 x n1 grid. An empty support means full support.
Connectivity s_connectivity(const std::vector<Shift>& shifts, int mask_rows, int mask_cols,
                            int object_rows, int object_cols,
                            const std::vector<bool>& support = {});
Connectivity s_connectivity(const ScanPattern& pattern, int m,
                            const std::vector<bool>& support = {});

// 1 - n^2 |(alpha + beta)/2|^{floor(S/2)}; alpha + beta must lie in (0, 2).
// Not clamped: small S gives negative (vacuous) bounds.
double uniqueness_probability_bound(int n, int S, double alpha, double beta);

}  // namespace phasekit
