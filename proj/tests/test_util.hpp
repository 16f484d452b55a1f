#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "dsttkit/dynamics.hpp"

// Shared fixtures: the reference parameter sets and initial conditions used
// across test suites.
namespace testutil {

inline dstt::AerocaptureParams uranus_params() {
  dstt::AerocaptureParams p;
  p.omega_planet = 1.01237e-4;
  p.radius_planet = 25559.0;
  p.mu_planet = 5.793939e6;
  p.j2 = 3.34343e-3;
  return p;
}

// Atmospheric-entry state in dimensional units: radius km, angles rad,
// velocity km/s, log-density ln(kg/m^3) from the exponential atmosphere at
// 1000 km altitude.
inline dstt::StateVector entry_state_dimensional(
    const dstt::AerocaptureParams& p) {
  constexpr double deg = std::numbers::pi / 180.0;
  Eigen::VectorXd x(7);
  double h = 1000.0;
  x[0] = p.radius_planet + h;
  x[1] = 190.05 * deg;
  x[2] = -9.76 * deg;
  x[3] = 24.93;
  x[4] = -10.58 * deg;
  x[5] = 45.0 * deg;
  x[6] = std::log(p.rho0) + (p.h0 - h) / p.scale_height;
  return {x, dstt::Frame::dimensional};
}

// Southern L2 halo orbit in the Earth-Moon system: initial state and period
// in synodic units.
inline Eigen::VectorXd halo_state() {
  Eigen::VectorXd x(6);
  x << 1.022022, 0.0, -0.182097, 0.0, -0.103256, 0.0;
  return x;
}
inline constexpr double kHaloPeriod = 1.511111;
inline constexpr double kEarthMoonMassRatio = 81.30059;
inline double halo_mu_star() { return 1.0 / (kEarthMoonMassRatio + 1.0); }

// Circular low orbit in canonical units (distance unit = orbit radius).
inline constexpr double kLeoRadiusKm = 6678.137;
inline constexpr double kEarthMuKm3S2 = 398600.4418;

}  // namespace testutil
