#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "dsttkit/dop853.hpp"
#include "dsttkit/dynamics.hpp"
#include "dsttkit/errors.hpp"
#include "test_util.hpp"

using namespace dstt;

namespace {

constexpr double kPi = std::numbers::pi;

Dop853::Rhs model_rhs(const DynamicsModel& m) {
  return [&m](double t, std::span<const double> y, std::span<double> dy) {
    m.rhs(t, y, dy);
  };
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) {
    out[i] = a + (b - a) * i / (count - 1);
  }
  return out;
}

}  // namespace

TEST_SUITE("integrator") {

TEST_CASE("exponential and oscillator flows match closed forms") {
  Dop853 expo([](double, std::span<const double> y,
                 std::span<double> dy) { dy[0] = -0.7 * y[0]; },
              1);
  double y0[1] = {2.0};
  std::vector<double> yf = expo.integrate_to(0.0, y0, 3.0);
  CHECK(yf[0] == doctest::Approx(2.0 * std::exp(-2.1)).epsilon(1e-12));

  Dop853 osc([](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  },
             2);
  double z0[2] = {1.0, 0.0};
  std::vector<double> zf = osc.integrate_to(0.0, z0, 2.0 * kPi);
  CHECK(zf[0] == doctest::Approx(1.0).epsilon(1e-11));
  CHECK(std::abs(zf[1]) < 1e-11);
  CHECK(osc.steps_accepted() > 0);
  CHECK(osc.rhs_evaluations() > 12 * osc.steps_accepted());
}

TEST_CASE("dense output interpolates to integration accuracy") {
  Dop853 osc([](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  },
             2);
  double z0[2] = {1.0, 0.0};
  std::vector<double> grid = linspace(0.0, 2.0 * kPi, 257);
  double worst = 0.0;
  std::size_t seen = 0;
  osc.integrate(0.0, z0, grid,
                [&](std::size_t idx, double t, std::span<const double> y) {
                  CHECK(idx == seen);
                  ++seen;
                  worst = std::max(worst, std::abs(y[0] - std::cos(t)));
                  worst = std::max(worst, std::abs(y[1] + std::sin(t)));
                });
  CHECK(seen == grid.size());
  CHECK(worst < 1e-11);
  // The grid is much finer than the accepted step sequence, so most samples
  // came from the interpolant rather than step endpoints.
  CHECK(osc.steps_accepted() < 100);
}

TEST_CASE("first integrals conserved over three circular orbits") {
  TwoBodyModel tb;
  Eigen::VectorXd x0(6);
  x0 << 1, 0, 0, 0, 1, 0;
  double e0 = two_body_energy({x0.data(), 6}, 1.0);
  double h0 = two_body_angular_momentum({x0.data(), 6}).norm();

  Dop853 ode(model_rhs(tb), 6);
  std::vector<double> grid = linspace(0.0, 6.0 * kPi, 301);
  double de = 0.0, dh = 0.0;
  Eigen::VectorXd last(6);
  ode.integrate(0.0, {x0.data(), 6}, grid,
                [&](std::size_t, double, std::span<const double> y) {
                  de = std::max(de,
                                std::abs(two_body_energy(y, 1.0) - e0));
                  dh = std::max(
                      dh, std::abs(two_body_angular_momentum(y).norm() - h0));
                  for (int i = 0; i < 6; ++i) last[i] = y[i];
                });
  CHECK(de / std::abs(e0) < 1e-10);
  CHECK(dh / h0 < 1e-10);
  CHECK((last - x0).norm() < 1e-9);
}

TEST_CASE("jacobi constant conserved along the halo orbit") {
  Cr3bpModel cr(Cr3bpParams{testutil::halo_mu_star()});
  Eigen::VectorXd x0 = testutil::halo_state();
  double c0 = cr3bp_jacobi({x0.data(), 6}, cr.mu_star());

  Dop853 ode(model_rhs(cr), 6);
  std::vector<double> grid = linspace(0.0, testutil::kHaloPeriod, 151);
  double dc = 0.0;
  ode.integrate(0.0, {x0.data(), 6}, grid,
                [&](std::size_t, double, std::span<const double> y) {
                  dc = std::max(
                      dc, std::abs(cr3bp_jacobi(y, cr.mu_star()) - c0));
                });
  CHECK(dc / std::abs(c0) < 1e-10);
}

TEST_CASE("ballistic flight over a non-rotating planet conserves energy") {
  AerocaptureParams p = testutil::uranus_params();
  p.omega_planet = 0.0;
  p.j2 = 0.0;
  AerocaptureModel aero(p);

  Eigen::VectorXd x0(7);
  // Log-density pushed far down so drag and lift vanish identically
  x0 << 1.05, 0.4, -0.17, 1.3, -0.08, 0.8, -50.0;
  double e0 = 0.5 * x0[3] * x0[3] - 1.0 / x0[0];

  Dop853 ode(model_rhs(aero), 7);
  std::vector<double> grid = linspace(0.0, 0.25, 26);
  double de = 0.0;
  ode.integrate(0.0, {x0.data(), 7}, grid,
                [&](std::size_t, double, std::span<const double> y) {
                  double e = 0.5 * y[3] * y[3] - 1.0 / y[0];
                  de = std::max(de, std::abs(e - e0));
                });
  CHECK(de < 1e-9);
}

TEST_CASE("log density stays slaved to altitude through the atmosphere") {
  AerocaptureParams p = testutil::uranus_params();
  AerocaptureModel aero(p);
  Eigen::VectorXd x0 =
      aero.nondimensionalize(testutil::entry_state_dimensional(p)).values;

  Dop853 ode(model_rhs(aero), 7);
  double tf = 450.0 / aero.scales().time_s;
  std::vector<double> grid = linspace(0.0, tf, 46);
  const double slope = 1.0 / (aero.scales().mref * aero.scales().scale_height_nd);
  double worst = 0.0;
  double min_r = 1e9;
  ode.integrate(0.0, {x0.data(), 7}, grid,
                [&](std::size_t, double, std::span<const double> y) {
                  aero.check_domain(y);
                  double predicted = x0[6] - slope * (y[0] - x0[0]);
                  worst = std::max(worst, std::abs(y[6] - predicted));
                  min_r = std::min(min_r, y[0]);
                });
  CHECK(worst < 1e-9);
  // The arc dips into the atmosphere and stays above the surface
  CHECK(min_r > 1.0);
  CHECK(min_r < x0[0]);
}

TEST_CASE("tighter tolerances reduce the global error") {
  auto make = [](double tol) {
    OdeSettings s;
    s.rel_tol = tol;
    s.abs_tol = tol;
    return Dop853([](double, std::span<const double> y, std::span<double> dy) {
      dy[0] = y[1];
      dy[1] = -y[0];
    },
                  2, s);
  };
  double z0[2] = {1.0, 0.0};
  double errs[3];
  double tols[3] = {1e-6, 1e-9, 1e-12};
  for (int i = 0; i < 3; ++i) {
    Dop853 ode = make(tols[i]);
    std::vector<double> zf = ode.integrate_to(0.0, z0, 20.0);
    errs[i] = std::hypot(zf[0] - std::cos(20.0), zf[1] + std::sin(20.0));
  }
  CHECK(errs[0] > errs[1]);
  CHECK(errs[1] > errs[2]);
  CHECK(errs[0] / errs[2] > 100.0);
}

TEST_CASE("failure modes surface as exceptions") {
  Dop853 osc([](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  },
             2);
  double z0[2] = {1.0, 0.0};
  double bad_grid[3] = {0.0, 2.0, 1.0};
  CHECK_THROWS_AS(
      osc.integrate(0.0, z0, bad_grid,
                    [](std::size_t, double, std::span<const double>) {}),
      std::invalid_argument);
  double early[1] = {-1.0};
  CHECK_THROWS_AS(
      osc.integrate(0.0, z0, early,
                    [](std::size_t, double, std::span<const double>) {}),
      std::invalid_argument);

  OdeSettings capped;
  capped.max_steps = 3;
  Dop853 slow([](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = y[1];
    dy[1] = -y[0];
  },
              2, capped);
  CHECK_THROWS_AS((void)slow.integrate_to(0.0, z0, 100.0), IntegrationError);

  // Radial free fall reaches the gravitational singularity in finite time
  TwoBodyModel tb;
  Eigen::VectorXd drop(6);
  drop << 1, 0, 0, 0, 0, 0;
  Dop853 ode(model_rhs(tb), 6);
  CHECK_THROWS_AS((void)ode.integrate_to(0.0, {drop.data(), 6}, 2.0),
                  IntegrationError);

  CHECK_THROWS_AS(Dop853([](double, std::span<const double>,
                            std::span<double>) {},
                         0),
                  DimensionError);
}

TEST_CASE("grid points at the initial time are emitted directly") {
  Dop853 osc([](double, std::span<const double> y, std::span<double> dy) {
    dy[0] = -y[0];
  },
             1);
  double y0[1] = {3.0};
  double grid[1] = {0.0};
  int calls = 0;
  osc.integrate(0.0, y0, grid,
                [&](std::size_t idx, double t, std::span<const double> y) {
                  CHECK(idx == 0);
                  CHECK(t == 0.0);
                  CHECK(y[0] == 3.0);
                  ++calls;
                });
  CHECK(calls == 1);
  CHECK(osc.steps_accepted() == 0);
}

}  // TEST_SUITE
