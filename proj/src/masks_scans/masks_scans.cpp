#include "phasekit/masks_scans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>

namespace phasekit {

ComplexImage random_phase_mask(int m, std::uint64_t seed) {
  return random_phase_mask(m, m, seed);
}

ComplexImage random_phase_mask(int rows, int cols, std::uint64_t seed) {
  if (rows <= 0 || cols <= 0) throw std::invalid_argument("random_phase_mask: m <= 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ComplexImage mask(rows, cols);
  for (Index k = 0; k < mask.size(); ++k) {
    // (-pi, pi]: 1 - u lies in (0, 1].
    const double phi = std::numbers::pi * (2.0 * (1.0 - u(rng)) - 1.0);
    mask.vec()[k] = std::polar(1.0, phi);
  }
  return mask;
}

ComplexImage fresnel_mask(int m, double f) {
  if (m <= 0) throw std::invalid_argument("fresnel_mask: m <= 0");
  ComplexImage mask(m, m);
  for (int k1 = 1; k1 <= m; ++k1)
    for (int k2 = 1; k2 <= m; ++k2)
      mask(k1 - 1, k2 - 1) =
          std::polar(1.0, std::numbers::pi * f * double(k1 * k1 + k2 * k2) / m);
  return mask;
}

namespace {

int wrap(int v, int n) { return ((v % n) + n) % n; }

ScanPattern lattice(int n, int q, ScanKind kind) {
  if (n <= 0 || q <= 0) throw std::invalid_argument("scan: n and q must be positive");
  if (n % q != 0) throw std::invalid_argument("scan: q must divide n");
  ScanPattern p;
  p.n = n;
  p.q = q;
  p.tau = n / q;
  p.kind = kind;
  return p;
}

}  // namespace

ScanPattern raster_scan(int n, int q) {
  ScanPattern p = lattice(n, q, ScanKind::raster);
  for (int k = 0; k < q; ++k)
    for (int l = 0; l < q; ++l) {
      p.shifts.push_back({k * p.tau, l * p.tau});
      p.k_index.push_back(k);
      p.l_index.push_back(l);
    }
  return p;
}

namespace {

ScanPattern perturbed(int n, int q, std::uint64_t seed, int jitter, bool full_rank) {
  if (jitter < 0) throw std::invalid_argument("scan: negative jitter");
  ScanPattern p = lattice(n, q, full_rank ? ScanKind::perturbed_fullrank
                                          : ScanKind::perturbed_rank1);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(-jitter, jitter);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    p.shifts.clear();
    p.k_index.clear();
    p.l_index.clear();
    std::vector<int> row_jitter(q), col_jitter(q);
    for (int k = 0; k < q; ++k) row_jitter[k] = d(rng);
    for (int l = 0; l < q; ++l) col_jitter[l] = d(rng);
    std::set<std::pair<int, int>> seen;
    bool distinct = true;
    for (int k = 0; k < q; ++k)
      for (int l = 0; l < q; ++l) {
        const int dr = full_rank ? d(rng) : row_jitter[k];
        const int dc = full_rank ? d(rng) : col_jitter[l];
        const Shift s{wrap(k * p.tau + dr, n), wrap(l * p.tau + dc, n)};
        distinct = distinct && seen.insert({s.row, s.col}).second;
        p.shifts.push_back(s);
        p.k_index.push_back(k);
        p.l_index.push_back(l);
      }
    if (distinct) return p;
  }
  throw std::runtime_error("scan: could not draw distinct perturbed shifts");
}

}  // namespace

ScanPattern perturbed_rank1(int n, int q, std::uint64_t seed, int jitter) {
  return perturbed(n, q, seed, jitter, false);
}

ScanPattern perturbed_fullrank(int n, int q, std::uint64_t seed, int jitter) {
  return perturbed(n, q, seed, jitter, true);
}

void write_scan_csv(std::ostream& os, const ScanPattern& pattern) {
  os << "k,l,shift1,shift2\n";
  for (std::size_t i = 0; i < pattern.shifts.size(); ++i)
    os << pattern.k_index[i] << ',' << pattern.l_index[i] << ',' << pattern.shifts[i].row << ','
       << pattern.shifts[i].col << '\n';
}

Connectivity s_connectivity(const std::vector<Shift>& shifts, int mask_rows, int mask_cols,
                            int object_rows, int object_cols, const std::vector<bool>& support) {
  if (shifts.empty()) throw std::invalid_argument("s_connectivity: empty pattern");
  const std::size_t npix = std::size_t(object_rows) * object_cols;
  if (!support.empty() && support.size() != npix)
    throw std::invalid_argument("s_connectivity: support size mismatch");

  // Per-shift indicator of covered support pixels.
  const std::size_t T = shifts.size();
  std::vector<std::vector<char>> cover(T, std::vector<char>(npix, 0));
  for (std::size_t t = 0; t < T; ++t)
    for (int r = 0; r < mask_rows; ++r)
      for (int c = 0; c < mask_cols; ++c) {
        const std::size_t p = std::size_t(wrap(shifts[t].row + r, object_rows)) * object_cols +
                              wrap(shifts[t].col + c, object_cols);
        if (support.empty() || support[p]) cover[t][p] = 1;
      }
  if (T == 1) {
    const int s = int(std::count(cover[0].begin(), cover[0].end(), 1));
    return {s, s >= 2};
  }

  std::vector<std::vector<int>> weight(T, std::vector<int>(T, 0));
  for (std::size_t a = 0; a < T; ++a)
    for (std::size_t b = a + 1; b < T; ++b) {
      int w = 0;
      for (std::size_t p = 0; p < npix; ++p) w += cover[a][p] & cover[b][p];
      weight[a][b] = weight[b][a] = w;
    }

  // Bottleneck of a maximum spanning tree (Prim) = largest connecting s.
  std::vector<int> best(T, -1);
  std::vector<char> in_tree(T, 0);
  best[0] = std::numeric_limits<int>::max();
  int bottleneck = std::numeric_limits<int>::max();
  for (std::size_t it = 0; it < T; ++it) {
    std::size_t u = T;
    for (std::size_t v = 0; v < T; ++v)
      if (!in_tree[v] && (u == T || best[v] > best[u])) u = v;
    in_tree[u] = 1;
    bottleneck = std::min(bottleneck, best[u]);
    for (std::size_t v = 0; v < T; ++v)
      if (!in_tree[v]) best[v] = std::max(best[v], weight[u][v]);
  }
  return {bottleneck, bottleneck >= 2};
}

Connectivity s_connectivity(const ScanPattern& pattern, int m, const std::vector<bool>& support) {
  return s_connectivity(pattern.shifts, m, m, pattern.n, pattern.n, support);
}

double uniqueness_probability_bound(int n, int S, double alpha, double beta) {
  const double sum = alpha + beta;
  if (!(sum > 0.0 && sum < 2.0))
    throw std::invalid_argument("uniqueness_probability_bound: alpha + beta must lie in (0, 2)");
  if (S < 0) throw std::invalid_argument("uniqueness_probability_bound: S < 0");
  return 1.0 - double(n) * double(n) * std::pow(std::abs(sum / 2.0), S / 2);
}

}  // namespace phasekit
