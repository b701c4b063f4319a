#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "phasekit/loss_noise.hpp"
#include "phasekit/masks_scans.hpp"
#include "phasekit/solvers.hpp"
#include "support.hpp"

using namespace phasekit;
using phasekit::testing::random_cvector;

namespace {

struct Instance {
  CodedDiffractionOperator A;
  CVector x;
  RVector b;
};

Instance instance(int n, int masks, std::uint64_t seed) {
  std::vector<ComplexImage> mu;
  for (int l = 0; l < masks; ++l) mu.push_back(random_phase_mask(n, seed * 10 + l));
  CodedDiffractionOperator A(n, n, mu);
  const CVector x = testing::random_object(n, n, seed + 100).vec();
  RVector b = A.forward(x).cwiseAbs();
  return {std::move(A), x, std::move(b)};
}

CVector near(const CVector& x, double rel, std::uint64_t seed) {
  const CVector e = random_cvector(x.size(), seed);
  return x + rel * x.norm() / e.norm() * e;
}

// Two parallel lines Im z = 0 and Im z = 1 in C: disjoint convex sets.
Projectors parallel_lines() {
  return {[](const CVector& u) { return CVector(u.real().cast<cplx>()); },
          [](const CVector& u) {
            CVector out = u.real().cast<cplx>();
            out.array() += cplx(0.0, 1.0);
            return out;
          }};
}

}  // namespace

TEST_CASE("ap step fixes solutions and is a unit gradient step") {
  const Instance I = instance(6, 2, 1);
  CHECK((ap_step(I.A, I.b, I.x) - I.x).norm() < 1e-12 * I.x.norm());
  const CVector z = random_cvector(36, 2);
  CHECK((ap_step(I.A, I.b, z) - (z - gaussian_subgradient(z, I.b, I.A))).norm() < 1e-12);
}

TEST_CASE("ap limit points satisfy the magnitude constraint") {
  const Instance I = instance(8, 2, 3);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::ap;
  cfg.max_iters = 3000;
  cfg.record_time = false;
  const SolverResult r = run(cfg, I.A, I.b, near(I.x, 0.05, 4), I.x);
  CHECK(r.estimate.norm() == doctest::Approx(I.b.norm()).epsilon(1e-6));
  CHECK(relative_residual(I.b, I.A.forward(r.estimate)) < 1e-8);
}

TEST_CASE("aar fixes points of the intersection") {
  const Instance I = instance(6, 2, 5);
  const Projectors P = make_projectors(I.A, I.b);
  const CVector u = I.A.forward(I.x);
  CHECK((aar_step(P, u) - u).norm() < 1e-12 * u.norm());
  CHECK((aar_step_alt(P, u) - u).norm() < 1e-12 * u.norm());
}

TEST_CASE("aar three-step form") {
  const Instance I = instance(6, 2, 6);
  const Projectors P = make_projectors(I.A, I.b);
  const CVector u = random_cvector(I.A.data_size(), 7);
  const CVector three = u + P.data(P.reflect_range(u)) - P.range(u);
  CHECK((aar_step(P, u) - three).norm() < 1e-12 * u.norm());
}

TEST_CASE("aar diverges on disjoint parallel lines") {
  const Projectors P = parallel_lines();
  CVector u(1);
  u[0] = cplx(0.3, -0.2);
  for (int k = 0; k < 200; ++k) u = aar_step(P, u);
  CHECK(std::abs(u[0]) > 150.0);
  CHECK(u[0].real() == doctest::Approx(0.3));
}

TEST_CASE("hio at beta one is the alternate-order aar") {
  const Instance I = instance(6, 2, 8);
  const Projectors P = make_projectors(I.A, I.b);
  const CVector v = random_cvector(I.A.data_size(), 9);
  CHECK((hio_step(P, v, 1.0) - aar_step_alt(P, v)).norm() < 1e-12 * v.norm());
}

TEST_CASE("hio at beta zero matches its expansion") {
  const Instance I = instance(6, 2, 10);
  const Projectors P = make_projectors(I.A, I.b);
  const CVector v = random_cvector(I.A.data_size(), 11);
  const CVector py = P.data(v);
  const CVector ry = 2.0 * py - v;
  const CVector expansion = 0.5 * (P.reflect_range(ry - py) + v + py);
  CHECK((hio_step(P, v, 0.0) - expansion).norm() < 1e-12 * v.norm());
  const CVector u = I.A.forward(I.x);
  for (double beta : {0.0, 0.5, 0.9})
    CHECK((hio_step(P, u, beta) - u).norm() < 1e-12 * u.norm());
}

TEST_CASE("raar at beta one is aar") {
  const Instance I = instance(6, 2, 12);
  const Projectors P = make_projectors(I.A, I.b);
  const CVector u = random_cvector(I.A.data_size(), 13);
  CHECK((raar_step(P, u, 1.0) - aar_step_alt(P, u)).norm() < 1e-12 * u.norm());
}

TEST_CASE("raar at beta one half reproduces ap object iterates") {
  const Instance I = instance(6, 1, 14);
  const Projectors P = make_projectors(I.A, I.b);
  CVector x = random_cvector(36, 15);
  CVector u = I.A.forward(x);
  for (int k = 0; k < 50; ++k) {
    x = ap_step(I.A, I.b, x);
    u = raar_step(P, u, 0.5);
    CHECK((I.A.adjoint(u) - x).norm() < 1e-8 * x.norm());
  }
}

TEST_CASE("raar and gaussian drs stay bounded on noisy data") {
  const Instance I = instance(8, 1, 16);
  const RVector b = apply_rayleigh_noise(I.A, I.x, 0.2 * I.b.norm() / std::sqrt(double(I.b.size())), 17).values;
  const Projectors P = make_projectors(I.A, b);
  const double beta = 0.8;
  CVector u = I.A.forward(random_cvector(64, 18));
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    u = raar_step(P, u, beta);
    if (k > 100) worst = std::max(worst, u.norm());
  }
  CHECK(worst <= b.norm() / (1.0 - beta) + 1e-6);
  for (double rho : {0.3, 1.0, 2.5}) {
    CVector v = I.A.forward(random_cvector(64, 19));
    double top = 0.0;
    for (int k = 0; k < 1000; ++k) {
      v = gaussian_drs_step(P, v, rho);
      if (k > 100) top = std::max(top, v.norm());
    }
    CHECK(top <= b.norm() / std::min(rho, 1.0) + 1e-6);
  }
}

TEST_CASE("gaussian drs at rho one is averaged projection reflection") {
  const Instance I = instance(6, 2, 20);
  const Projectors P = make_projectors(I.A, I.b);
  const CVector u = random_cvector(I.A.data_size(), 21);
  const CVector apr = 0.5 * u + 0.5 * P.data(P.reflect_range(u));
  CHECK((gaussian_drs_step(P, u, 1.0) - apr).norm() < 1e-12 * u.norm());
}

TEST_CASE("gaussian drs fixed points satisfy the stationarity relation") {
  const Instance I = instance(8, 2, 22);
  const Projectors P = make_projectors(I.A, I.b);
  const double rho = 0.5;
  CVector u = I.A.forward(near(I.x, 0.05, 23));
  for (int k = 0; k < 3000; ++k) u = gaussian_drs_step(P, u, rho);
  const CVector v = P.reflect_range(u);
  const CVector pv = P.range(v);
  const CVector lhs = pv - rho * (v - pv);
  CHECK((lhs - P.data(v)).norm() < 1e-8 * I.b.norm());
}

TEST_CASE("poisson drs fixes noiseless solutions") {
  const Instance I = instance(6, 2, 24);
  const Projectors P = make_projectors(I.A, I.b);
  const CVector u = I.A.forward(I.x);
  for (double rho : {0.1, 1.0, 3.0}) CHECK((poisson_drs_step(P, u, rho) - u).norm() < 1e-10 * u.norm());
  CHECK_THROWS_AS(poisson_drs_step(P, u, 0.0), std::invalid_argument);
}

TEST_CASE("poisson drs at rho one uses the constants 1/2, -1/3, 1/6 and 24") {
  const Instance I = instance(6, 2, 25);
  const Projectors P = make_projectors(I.A, I.b);
  const CVector u = random_cvector(I.A.data_size(), 26);
  const CVector r = P.reflect_range(u);
  CVector expected(u.size());
  for (Index j = 0; j < u.size(); ++j)
    expected[j] = 0.5 * u[j] - r[j] / 3.0 +
                  std::sqrt(std::norm(r[j]) + 24.0 * I.b[j] * I.b[j]) / 6.0 * (r[j] / std::abs(r[j]));
  CHECK((poisson_drs_step(P, u, 1.0) - expected).norm() < 1e-12 * u.norm());
}

TEST_CASE("poisson drs stays within the small-rho bound") {
  const Instance I = instance(8, 1, 27);
  const RVector b = apply_poisson_noise(I.b.cwiseAbs2(), 50.0, 28).values;
  const Projectors P = make_projectors(I.A, b);
  const double rho = 0.05;
  CVector u = I.A.forward(random_cvector(64, 29));
  double top = 0.0;
  for (int k = 0; k < 2000; ++k) {
    u = poisson_drs_step(P, u, rho);
    if (k > 200) top = std::max(top, u.norm());
  }
  CHECK(top <= 4.0 * b.norm() / rho);
}

TEST_CASE("steps commute with a global phase") {
  const Instance I = instance(6, 2, 30);
  const Projectors P = make_projectors(I.A, I.b);
  const CVector u = random_cvector(I.A.data_size(), 31);
  const cplx ph = std::polar(1.0, 2.2);
  const double tol = 1e-12 * u.norm();
  CHECK((aar_step(P, ph * u) - ph * aar_step(P, u)).norm() < tol);
  CHECK((hio_step(P, ph * u, 0.7) - ph * hio_step(P, u, 0.7)).norm() < tol);
  CHECK((raar_step(P, ph * u, 0.8) - ph * raar_step(P, u, 0.8)).norm() < tol);
  CHECK((gaussian_drs_step(P, ph * u, 0.4) - ph * gaussian_drs_step(P, u, 0.4)).norm() < tol);
  CHECK((poisson_drs_step(P, ph * u, 0.4) - ph * poisson_drs_step(P, u, 0.4)).norm() < tol);
  const CVector x = random_cvector(36, 32);
  CHECK((ap_step(I.A, I.b, ph * x) - ph * ap_step(I.A, I.b, x)).norm() < 1e-12 * x.norm());
}

TEST_CASE("converged aar points project onto true magnitudes") {
  const Instance I = instance(8, 2, 33);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::aar;
  cfg.max_iters = 2000;
  cfg.tolerance = 1e-13;
  cfg.record_time = false;
  const SolverResult r = run(cfg, I.A, I.b, near(I.x, 0.1, 34), I.x);
  CHECK((I.A.project_range(r.iterate).cwiseAbs() - I.b).norm() < 1e-10 * I.b.norm());
  CHECK(r.trace.records.back().re < 1e-10);
}

TEST_CASE("raar fixed points in the range are regular solutions") {
  const Instance I = instance(8, 2, 35);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::raar;
  cfg.beta = 0.8;
  cfg.max_iters = 3000;
  cfg.record_time = false;
  const SolverResult r = run(cfg, I.A, I.b, near(I.x, 0.1, 36), I.x);
  const CVector perp = r.iterate - I.A.project_range(r.iterate);
  CHECK(perp.norm() < 1e-10 * I.b.norm());
  CHECK((r.iterate.cwiseAbs() - I.b).norm() < 1e-9 * I.b.norm());
}

TEST_CASE("object-domain aar is a weaker negative control") {
  const Instance I = instance(8, 2, 37);
  SolverConfig cfg;
  cfg.max_iters = 200;
  cfg.record_time = false;
  const CVector x0 = near(I.x, 0.3, 38);
  cfg.algorithm = Algorithm::aar;
  const double aar = run(cfg, I.A, I.b, x0, I.x).trace.records.back().re;
  cfg.algorithm = Algorithm::object_aar;
  const double obj = run(cfg, I.A, I.b, x0, I.x).trace.records.back().re;
  CHECK(aar < obj);
}

TEST_CASE("run returns the init at zero iterations") {
  const Instance I = instance(6, 2, 39);
  SolverConfig cfg;
  cfg.max_iters = 0;
  const CVector x0 = random_cvector(36, 40);
  const SolverResult r = run(cfg, I.A, I.b, x0);
  CHECK((r.estimate - x0).norm() == 0.0);
  CHECK(r.trace.records.size() == 1);
  CHECK(std::isnan(r.trace.records[0].re));
}

TEST_CASE("aar then ap handoff preset and trace layout") {
  const Instance I = instance(6, 2, 41);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::aar;
  cfg.max_iters = 300;
  cfg.ap_handoff_iters = 100;
  cfg.stagnation_window = 1000;
  const SolverResult r = run(cfg, I.A, I.b, random_cvector(36, 42), I.x);
  CHECK(r.trace.records.size() == 401);
  CHECK(r.iterations == 400);
  for (std::size_t k = 0; k < r.trace.records.size(); ++k) CHECK(r.trace.records[k].iter == int(k));
  std::ostringstream os;
  r.trace.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("iter,re,rr,norm_u,ms\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 402);
}

TEST_CASE("untimed traces are reproducible byte for byte") {
  const Instance I = instance(6, 2, 43);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::raar;
  cfg.max_iters = 50;
  cfg.record_time = false;
  const CVector x0 = random_cvector(36, 44);
  std::ostringstream a, b;
  run(cfg, I.A, I.b, x0, I.x).trace.write_csv(a);
  run(cfg, I.A, I.b, x0, I.x).trace.write_csv(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("run stops on tolerance and on stagnation") {
  const Instance I = instance(6, 2, 45);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::aar;
  cfg.max_iters = 5000;
  cfg.tolerance = 1e-6;
  const SolverResult r = run(cfg, I.A, I.b, near(I.x, 0.05, 46), I.x);
  CHECK(r.stop == StopReason::tolerance);
  CHECK(r.trace.records.back().rr <= 1e-6);

  // Inconsistent data: AP settles on a fixed point with a nonzero residual.
  const RVector noisy = apply_thermal_noise(I.b, 0.05, 47).values;
  cfg.algorithm = Algorithm::ap;
  cfg.tolerance = 0.0;
  const SolverResult s = run(cfg, I.A, noisy, near(I.x, 0.05, 46), I.x);
  CHECK(s.stop == StopReason::stagnated);
  CHECK(s.iterations < cfg.max_iters);
  CHECK(s.trace.records.back().rr > 1e-3);
}

TEST_CASE("solver config validation") {
  const Instance I = instance(4, 1, 47);
  const CVector x0 = random_cvector(16, 48);
  SolverConfig cfg;
  cfg.algorithm = Algorithm::raar;
  cfg.beta = 0.4;
  CHECK_THROWS_AS(run(cfg, I.A, I.b, x0), std::invalid_argument);
  cfg.algorithm = Algorithm::poisson_drs;
  cfg.rho = 0.0;
  CHECK_THROWS_AS(run(cfg, I.A, I.b, x0), std::invalid_argument);
  cfg.algorithm = Algorithm::aar;
  cfg.max_iters = -1;
  CHECK_THROWS_AS(run(cfg, I.A, I.b, x0), std::invalid_argument);
  cfg.max_iters = 5;
  CHECK_THROWS_AS(run(cfg, I.A, I.b, CVector::Zero(15)), std::invalid_argument);
  CHECK(parse_algorithm("gaussian_drs") == Algorithm::gaussian_drs);
  CHECK_THROWS_AS(parse_algorithm("fienup"), std::invalid_argument);
}

TEST_CASE("wirtinger flow is stationary at the truth and decreases after burn-in") {
  const Index n = 16, N = 8 * n;
  const CMatrix M = testing::gaussian_matrix(N, n, 49);
  const DenseOperator A(M);
  const CVector x = random_cvector(n, 50);
  const RVector y = (M * x).cwiseAbs2();
  const SolverResult still = wirtinger_flow(A, y, x, 0.2, 10, x, false);
  CHECK((still.estimate - x).norm() < 1e-12 * x.norm());

  const SolverResult r = wirtinger_flow(A, y, near(x, 0.2, 51), 0.2, 600, x, false);
  const std::vector<double> re = r.trace.re();
  for (std::size_t k = 50; k + 1 < re.size(); ++k)
    if (re[k] > 1e-13) CHECK(re[k + 1] <= re[k]);
  CHECK(re.back() < 1e-8);
  CHECK_THROWS_AS(wirtinger_flow(A, y, CVector::Zero(n), 0.2, 10), std::invalid_argument);
}

TEST_CASE("leading singular pair of the real Jacobian is (1, x)") {
  const Instance I = instance(6, 1, 52);
  const CVector ph = sgn(I.A.forward(I.x)).conjugate();
  const RVector img = ph.cwiseProduct(I.A.forward(I.x)).real();
  CHECK(img.norm() == doctest::Approx(I.x.norm()).epsilon(1e-8));
}

TEST_CASE("second singular value against a dense oracle") {
  // Dense real matrix of zeta -> Re(B zeta) on R^{2n}; its singular values pair up as
  // sigma_k^2 + sigma_{2n+1-k}^2 = 1.
  const int n = 5;
  const Instance I = instance(n, 1, 53);
  const Index dim = n * n;
  const CVector ph = sgn(I.A.forward(I.x)).conjugate();
  Eigen::MatrixXd Bre(I.A.data_size(), 2 * dim);
  for (Index j = 0; j < 2 * dim; ++j) {
    CVector e = CVector::Zero(dim);
    e[j % dim] = j < dim ? cplx(1.0, 0.0) : cplx(0.0, 1.0);
    Bre.col(j) = ph.cwiseProduct(I.A.forward(e)).real();
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Bre);
  const RVector s = svd.singularValues();
  CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-10));
  for (Index k = 0; k < 2 * dim; ++k) CHECK(s[k] * s[k] + s[2 * dim - 1 - k] * s[2 * dim - 1 - k] ==
                                             doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s[1] < 1.0 - 1e-6);
  CHECK(spectral_gap_lambda2(I.A, I.x) == doctest::Approx(s[1]).epsilon(1e-6));
}

TEST_CASE("spectral gap rejects vanishing measurements") {
  const Instance I = instance(4, 1, 54);
  CHECK_THROWS_AS(spectral_gap_lambda2(I.A, CVector::Zero(16)), std::invalid_argument);
}

TEST_CASE("rate fit recovers a geometric factor") {
  std::vector<double> re;
  for (int k = 0; k < 400; ++k) re.push_back(0.5 * std::pow(0.93, k));
  CHECK(fit_rate(re) == doctest::Approx(0.93).epsilon(1e-10));
  CHECK_THROWS_AS(fit_rate({1.0, 0.5}), std::invalid_argument);
}

TEST_CASE("parameter maps") {
  CHECK(optimal_rho(std::sqrt(0.5)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(beta_to_rho(0.8) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(beta_to_rho(1.0) == 0.0);
  CHECK(beta_to_rho(0.5 + 1e-9) > 1e8);
  CHECK_THROWS_AS(beta_to_rho(0.5), std::invalid_argument);
  CHECK_THROWS_AS(optimal_rho(1.5), std::invalid_argument);
}
