#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "phasekit/holography.hpp"
#include "support.hpp"

using namespace phasekit;
using phasekit::testing::random_image;

namespace {

double rel_err(const ComplexImage& a, const ComplexImage& x) {
  return (a.vec() - x.vec()).norm() / x.vec().norm();
}

// Direct linear autocorrelation, lag (s1, s2) at (s1 + H - 1, s2 + W - 1).
ComplexImage brute_autocorr(const ComplexImage& c) {
  const int H = c.height(), W = c.width();
  ComplexImage out(2 * H - 1, 2 * W - 1);
  for (int s1 = -(H - 1); s1 < H; ++s1)
    for (int s2 = -(W - 1); s2 < W; ++s2) {
      cplx acc = 0.0;
      for (int t1 = 0; t1 < H; ++t1)
        for (int t2 = 0; t2 < W; ++t2) {
          const int u1 = t1 - s1, u2 = t2 - s2;
          if (u1 >= 0 && u1 < H && u2 >= 0 && u2 < W) acc += c(t1, t2) * std::conj(c(u1, u2));
        }
      out(s1 + H - 1, s2 + W - 1) = acc;
    }
  return out;
}

// Cross-correlation sum_t x(t) conj(r(t - s)) with Dirichlet boundary, for
// s in {-(n-1)..0}^2 stored at s + n - 1.
ComplexImage brute_crosscorr(const ComplexImage& x, const ComplexImage& r) {
  const int n = x.height();
  ComplexImage out(n, n);
  for (int p1 = 0; p1 < n; ++p1)
    for (int p2 = 0; p2 < n; ++p2) {
      const int s1 = p1 - (n - 1), s2 = p2 - (n - 1);
      cplx acc = 0.0;
      for (int t1 = 0; t1 < n; ++t1)
        for (int t2 = 0; t2 < n; ++t2) {
          const int u1 = t1 - s1, u2 = t2 - s2;
          if (u1 < n && u2 < n) acc += x(t1, t2) * std::conj(r(u1, u2));
        }
      out(p1, p2) = acc;
    }
  return out;
}

// Dense T(r) over row-major pixel indices.
CMatrix dense_reference_matrix(const ComplexImage& r) {
  const int n = r.height();
  CMatrix T = CMatrix::Zero(Index(n) * n, Index(n) * n);
  for (int p1 = 0; p1 < n; ++p1)
    for (int p2 = 0; p2 < n; ++p2)
      for (int t1 = 0; t1 <= p1; ++t1)
        for (int t2 = 0; t2 <= p2; ++t2)
          T(Index(p1) * n + p2, Index(t1) * n + t2) =
              std::conj(r(n - 1 - (p1 - t1), n - 1 - (p2 - t2)));
  return T;
}

// Nonnegative sum of broad Gaussian bumps, peak 1.
ComplexImage smooth_specimen(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ComplexImage x(n, n);
  for (int b = 0; b < 4; ++b) {
    const double ci = u(rng) * n, cj = u(rng) * n;
    const double s = n * (0.15 + 0.2 * u(rng)), a = 0.5 + 0.5 * u(rng);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        x(i, j) += a * std::exp(-((i - ci) * (i - ci) + (j - cj) * (j - cj)) / (2 * s * s));
  }
  x.vec() /= x.vec().cwiseAbs().maxCoeff();
  return x;
}

ComplexImage round_trip(const ComplexImage& x, HoloScheme scheme) {
  const int n = x.height(), g = default_holo_grid(n);
  return holo_recover(measure_holo(holo_composite(x, scheme), n, g, g), scheme);
}

}  // namespace

TEST_CASE("reference definitions") {
  const int n = 5;
  const ComplexImage p = make_reference(ReferenceKind::pinhole, n);
  const ComplexImage s = make_reference(ReferenceKind::slit, n);
  const ComplexImage b = make_reference(ReferenceKind::block, n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      CHECK(p(k, l) == cplx(k == n - 1 && l == n - 1 ? 1.0 : 0.0));
      CHECK(s(k, l) == cplx(l == n - 1 ? 1.0 : 0.0));
      CHECK(b(k, l) == cplx(1.0));
    }
  CHECK(to_string(ReferenceKind::slit) == "slit");
  CHECK_THROWS_AS(make_reference(ReferenceKind::block, 0), std::invalid_argument);
}

TEST_CASE("composite layouts") {
  const int n = 4;
  const ComplexImage x = random_image(n, n, 1);
  const ComplexImage r = random_image(n, n, 2), rb = random_image(n, n, 3);
  const ComplexImage c = compose(x, r);
  CHECK(c.height() == n);
  CHECK(c.width() == 2 * n);
  CHECK(c(2, 1) == x(2, 1));
  CHECK(c(2, n + 1) == r(2, 1));
  const ComplexImage d = compose_dual(x, r, rb);
  CHECK(d.height() == 2 * n);
  CHECK(d.width() == 2 * n);
  CHECK(d(1, 3) == x(1, 3));
  CHECK(d(1, n + 3) == r(1, 3));
  CHECK(d(n + 1, 3) == rb(1, 3));
  CHECK(d(n + 1, n + 3) == cplx(0.0));
  CHECK_THROWS_AS(compose(x, random_image(n, n + 1, 4)), std::invalid_argument);
  CHECK_THROWS_AS(compose(random_image(n, n + 1, 4), random_image(n, n + 1, 4)),
                  std::invalid_argument);
  CHECK_THROWS_AS(compose_dual(x, r, random_image(n + 1, n + 1, 4)), std::invalid_argument);
}

TEST_CASE("autocorrelation of a delta composite is a delta at the origin") {
  ComplexImage c(3, 6);
  c(0, 0) = 1.0;
  const ComplexImage ac = autocorr_from_magnitudes(measure_holo(c, 3, 24, 24));
  CHECK(std::abs(ac(2, 5) - 1.0) < 1e-14);
  CHECK((ac.vec().cwiseAbs().sum() - std::abs(ac(2, 5))) < 1e-13);
}

TEST_CASE("autocorrelation from magnitudes matches the direct sum") {
  for (int n : {2, 4, 8}) {
    const ComplexImage c = compose(random_image(n, n, 10 + n), random_image(n, n, 20 + n));
    const int g = default_holo_grid(n);
    const ComplexImage ac = autocorr_from_magnitudes(measure_holo(c, n, g, g));
    const ComplexImage direct = brute_autocorr(c);
    REQUIRE(ac.same_shape(direct));
    CHECK((ac.vec() - direct.vec()).cwiseAbs().maxCoeff() < 1e-9);
    // Tight grid: exactly 2H-1 by 2W-1.
    const ComplexImage tight =
        autocorr_from_magnitudes(measure_holo(c, n, 2 * n - 1, 4 * n - 1));
    CHECK((tight.vec() - direct.vec()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("autocorrelation is Hermitian and real for nonnegative composites") {
  const int n = 4;
  const ComplexImage c = compose(random_image(n, n, 31), make_reference(ReferenceKind::block, n));
  const ComplexImage ac = autocorr_from_magnitudes(measure_holo(c, n, 32, 32));
  const int H = ac.height(), W = ac.width();
  for (int i = 0; i < H; ++i)
    for (int j = 0; j < W; ++j) CHECK(std::abs(ac(i, j) - std::conj(ac(H - 1 - i, W - 1 - j))) < 1e-10);

  ComplexImage pos(n, 2 * n);
  for (Index k = 0; k < pos.size(); ++k) pos.vec()[k] = std::abs(c.vec()[k]);
  const ComplexImage ap = autocorr_from_magnitudes(measure_holo(pos, n, 32, 32));
  CHECK(ap.vec().imag().cwiseAbs().maxCoeff() < 1e-10);
  CHECK(ap.vec().real().minCoeff() > -1e-10);
}

TEST_CASE("aliasing is detected") {
  const int n = 4;
  const ComplexImage c = compose(random_image(n, n, 41), random_image(n, n, 42));
  CHECK_THROWS_AS(autocorr_from_magnitudes(measure_holo(c, n, 2 * n - 1, 4 * n - 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(measure_holo(c, n, n, 2 * n - 1), std::invalid_argument);
  // A composite wider than declared leaks energy outside the lag window.
  HoloMeasurement m = measure_holo(c, n, 32, 32);
  m.composite_cols = n;
  CHECK_THROWS_AS(autocorr_from_magnitudes(m), std::runtime_error);
  CHECK_NOTHROW(autocorr_from_magnitudes(m, std::numeric_limits<double>::infinity()));
}

TEST_CASE("cross-correlation extraction") {
  const int n = 6, g = default_holo_grid(n);
  const ComplexImage x = random_image(n, n, 51);
  SUBCASE("pinhole block is the specimen") {
    const ComplexImage ac = autocorr_from_magnitudes(
        measure_holo(compose(x, make_reference(ReferenceKind::pinhole, n)), n, g, g));
    CHECK(rel_err(extract_crosscorr(ac, n), x) < 1e-12);
  }
  SUBCASE("slit block is the column cumulative sum") {
    const ComplexImage r = make_reference(ReferenceKind::slit, n);
    const ComplexImage y =
        extract_crosscorr(autocorr_from_magnitudes(measure_holo(compose(x, r), n, g, g)), n);
    const ComplexImage direct = brute_crosscorr(x, r);
    CHECK(rel_err(y, direct) < 1e-12);
    for (int j = 0; j < n; ++j) {
      cplx acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += x(i, j);
        CHECK(std::abs(y(i, j) - acc) < 1e-10);
      }
    }
  }
  SUBCASE("random reference block matches the direct sum and the operator") {
    const ComplexImage r = random_image(n, n, 52);
    const ComplexImage y =
        extract_crosscorr(autocorr_from_magnitudes(measure_holo(compose(x, r), n, g, g)), n);
    CHECK(rel_err(y, brute_crosscorr(x, r)) < 1e-12);
    CHECK(rel_err(apply_reference_operator(x, r), brute_crosscorr(x, r)) < 1e-13);
  }
  SUBCASE("zero specimen gives a zero block") {
    const ComplexImage ac = autocorr_from_magnitudes(
        measure_holo(compose(ComplexImage(n, n), make_reference(ReferenceKind::block, n)), n, g,
                     g));
    CHECK(extract_crosscorr(ac, n).vec().cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("dual layout blocks") {
    const ComplexImage rp = random_image(n, n, 53), rb = random_image(n, n, 54);
    const ComplexImage ac =
        autocorr_from_magnitudes(measure_holo(compose_dual(x, rp, rb), n, g, g));
    CHECK(rel_err(extract_crosscorr(ac, n, 0, n), brute_crosscorr(x, rp)) < 1e-12);
    CHECK(rel_err(extract_crosscorr(ac, n, n, 0), brute_crosscorr(x, rb)) < 1e-12);
  }
  const ComplexImage small(3, 3);
  CHECK_THROWS_AS(extract_crosscorr(small, n), std::out_of_range);
  CHECK_THROWS_AS(extract_crosscorr(ComplexImage(4, 5), 2), std::invalid_argument);
}

TEST_CASE("reference operator adjoint identity and linearity") {
  const int n = 7;
  const ComplexImage r = random_image(n, n, 61);
  const ComplexImage x = random_image(n, n, 62), y = random_image(n, n, 63);
  const cplx lhs = y.vec().dot(apply_reference_operator(x, r).vec());
  const cplx rhs = apply_reference_adjoint(y, r).vec().dot(x.vec());
  CHECK(std::abs(lhs - rhs) < 1e-10 * std::abs(lhs));

  const ComplexImage y1 = random_image(n, n, 64), y2 = random_image(n, n, 65);
  const cplx alpha(0.7, -1.3);
  const ComplexImage combo(n, n, CVector(alpha * y1.vec() + y2.vec()));
  const CVector expect =
      alpha * referenced_deconvolve(y1, r).vec() + referenced_deconvolve(y2, r).vec();
  const CVector got = referenced_deconvolve(combo, r).vec();
  CHECK((got - expect).norm() < 1e-10 * expect.norm());
}

TEST_CASE("forward substitution equals a dense triangular solve") {
  for (int n : {3, 8, 12}) {
    ComplexImage r = phasekit::testing::random_object(n, n, 70 + n);
    r(n - 1, n - 1) *= 4.0;
    const CMatrix T = dense_reference_matrix(r);
    CHECK(T.isLowerTriangular(0.0));
    const ComplexImage y = random_image(n, n, 80 + n);
    const CVector dense = T.triangularView<Eigen::Lower>().solve(y.vec());
    const CVector fast = referenced_deconvolve(y, r).vec();
    CHECK((fast - dense).norm() < 1e-9 * dense.norm());
    CHECK((T * random_image(n, n, 90).vec() -
           apply_reference_operator(random_image(n, n, 90), r).vec())
              .norm() < 1e-12 * T.norm());
  }
}

TEST_CASE("pinhole operator is the identity") {
  const int n = 6;
  const ComplexImage r = make_reference(ReferenceKind::pinhole, n);
  CHECK(dense_reference_matrix(r).isIdentity(0.0));
  const ComplexImage y = random_image(n, n, 91);
  CHECK(referenced_deconvolve(y, r).vec() == y.vec());
}

TEST_CASE("separation condition") {
  const int n = 5;
  ComplexImage r = random_image(n, n, 92);
  r(n - 1, n - 1) = 0.0;
  CHECK_THROWS_AS(referenced_deconvolve(random_image(n, n, 93), r), std::invalid_argument);
  CHECK_THROWS_AS(referenced_deconvolve(random_image(n, n + 1, 93), random_image(n, n + 1, 94)),
                  std::invalid_argument);
  CHECK_THROWS_AS(referenced_deconvolve(random_image(n, n, 93), random_image(n + 1, n + 1, 94)),
                  std::invalid_argument);
}

TEST_CASE("noiseless round trips at n = 16") {
  const ComplexImage x = random_image(16, 16, 101);
  CHECK(rel_err(round_trip(x, HoloScheme::pinhole), x) < 1e-10);
  CHECK(rel_err(round_trip(x, HoloScheme::slit), x) < 1e-8);
  CHECK(rel_err(round_trip(x, HoloScheme::block), x) < 1e-8);
  CHECK(rel_err(round_trip(x, HoloScheme::dual), x) < 1e-8);
  const ComplexImage s = smooth_specimen(16, 102);
  CHECK(rel_err(round_trip(s, HoloScheme::block), s) < 1e-8);
  CHECK(rel_err(round_trip(s, HoloScheme::dual), s) < 1e-8);
}

TEST_CASE("random reference round trip") {
  const int n = 10, g = default_holo_grid(n);
  const ComplexImage x = random_image(n, n, 111);
  ComplexImage r = phasekit::testing::random_object(n, n, 112);
  r(n - 1, n - 1) = 3.0;
  const ComplexImage ac = autocorr_from_magnitudes(measure_holo(compose(x, r), n, g, g));
  CHECK(rel_err(referenced_deconvolve(extract_crosscorr(ac, n), r), x) < 1e-8);
}

TEST_CASE("dual deconvolution") {
  const int n = 8;
  const ComplexImage x = random_image(n, n, 121);
  const ComplexImage rp = make_reference(ReferenceKind::pinhole, n);
  const ComplexImage rb = make_reference(ReferenceKind::block, n);
  const ComplexImage yp = apply_reference_operator(x, rp), yb = apply_reference_operator(x, rb);
  CHECK(rel_err(dual_deconvolve_blocks(yp, yb, rp, rb), x) < 1e-10);

  SUBCASE("zero block portion reduces to the pinhole path") {
    const ComplexImage zero(n, n);
    const ComplexImage y_noisy = random_image(n, n, 122);
    CHECK(dual_deconvolve_blocks(y_noisy, random_image(n, n, 123), rp, zero).vec() ==
          referenced_deconvolve(y_noisy, rp).vec());
    const int g = default_holo_grid(n);
    const ComplexImage est =
        dual_reference_deconvolve(measure_holo(compose_dual(x, rp, zero), n, g, g), rp, zero);
    CHECK(rel_err(est, x) < 1e-12);
  }
  SUBCASE("least squares optimality on inconsistent blocks") {
    const ComplexImage ep = random_image(n, n, 124), eb = random_image(n, n, 125);
    const ComplexImage est = dual_deconvolve_blocks(ep, eb, rp, rb);
    const CMatrix S = [&] {
      CMatrix m(2 * n * n, n * n);
      m << dense_reference_matrix(rp), dense_reference_matrix(rb);
      return m;
    }();
    CVector rhs(2 * n * n);
    rhs << ep.vec(), eb.vec();
    const CVector ls = S.colPivHouseholderQr().solve(rhs);
    CHECK((est.vec() - ls).norm() < 1e-8 * ls.norm());
  }
  SUBCASE("degenerate portions") {
    ComplexImage bad_p = rp, bad_b = rb;
    bad_p(n - 1, n - 1) = 0.0;
    bad_b(n - 1, n - 1) = 0.0;
    CHECK_THROWS_AS(dual_deconvolve_blocks(yp, yb, bad_p, bad_b), std::invalid_argument);
    CHECK(rel_err(dual_deconvolve_blocks(yp, apply_reference_operator(x, rb), bad_p, rb), x) <
          1e-8);
    CHECK_THROWS_AS(dual_reference_deconvolve(measure_holo(compose(x, rp), n, 64, 64), rp, rb),
                    std::invalid_argument);
  }
}

TEST_CASE("photon noise model") {
  const int n = 4;
  const ComplexImage x = random_image(n, n, 131);
  const HoloMeasurement clean = measure_holo(compose(x, make_reference(ReferenceKind::block, n)), n, 32, 32);
  const double scale = photon_scale(x, 1e6, 32, 32);
  CHECK(scale * x.vec().squaredNorm() * 32 * 32 == doctest::Approx(1e6));
  const HoloMeasurement a = add_photon_noise(clean, scale, 5), b = add_photon_noise(clean, scale, 5);
  CHECK(a.intensities == b.intensities);
  CHECK(a.intensities.minCoeff() >= 0.0);
  // Total counts concentrate around scale * sum(I).
  const double counts = a.intensities.sum() * scale, expected = clean.intensities.sum() * scale;
  CHECK(std::abs(counts - expected) < 6.0 * std::sqrt(expected));
  CHECK_THROWS_AS(add_photon_noise(clean, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(photon_scale(ComplexImage(n, n), 1e6, 32, 32), std::invalid_argument);
  CHECK_THROWS_AS(photon_scale(x, -1.0, 32, 32), std::invalid_argument);
}

TEST_CASE("recovery error decreases with photon budget for every scheme") {
  const ComplexImage x = smooth_specimen(16, 141);
  const std::vector<HoloScheme> schemes = {HoloScheme::pinhole, HoloScheme::slit,
                                           HoloScheme::block, HoloScheme::dual};
  const std::vector<double> budgets = {1e8, 1e6, 1e4, 1e2};
  const auto rows = holo_noise_sweep(x, schemes, budgets, 3, 7, default_holo_grid(16));
  REQUIRE(rows.size() == schemes.size() * budgets.size() * 3);
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    double last = 0.0;
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      double mean = 0.0;
      for (int k = 0; k < 3; ++k) {
        const HoloErrorRow& row = rows[(s * budgets.size() + b) * 3 + k];
        CHECK(row.scheme == schemes[s]);
        CHECK(row.photons == budgets[b]);
        mean += row.rel_error / 3.0;
      }
      CHECK(mean > last);
      last = mean;
    }
  }
}

TEST_CASE("dual reference beats single references on a smooth specimen") {
  const int n = 16, g = default_holo_grid(n);
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ComplexImage x = smooth_specimen(n, 150 + seed);
    const double scale = photon_scale(x, 1e6, g, g);
    double best_single = std::numeric_limits<double>::infinity(), dual = 0.0;
    for (HoloScheme s : {HoloScheme::pinhole, HoloScheme::slit, HoloScheme::block, HoloScheme::dual}) {
      const HoloMeasurement m = add_photon_noise(measure_holo(holo_composite(x, s), n, g, g), scale, seed);
      const double e = rel_err(holo_recover(m, s, std::numeric_limits<double>::infinity()), x);
      if (s == HoloScheme::dual) dual = e;
      else best_single = std::min(best_single, e);
    }
    wins += dual < best_single;
  }
  CHECK(wins >= 4);
}

TEST_CASE("scheme names and error csv") {
  for (HoloScheme s : {HoloScheme::pinhole, HoloScheme::slit, HoloScheme::block, HoloScheme::dual})
    CHECK(parse_holo_scheme(to_string(s)) == s);
  CHECK_THROWS_AS(parse_holo_scheme("mirror"), std::invalid_argument);
  std::ostringstream os;
  write_holo_error_csv(os, {{HoloScheme::dual, 1e6, 3, 0.25}});
  CHECK(os.str() == "scheme,photons,seed,rel_error\ndual,1000000,3,0.25\n");
}
