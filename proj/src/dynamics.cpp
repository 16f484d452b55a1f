#include "dsttkit/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Geometry>

#include "dsttkit/errors.hpp"

namespace dstt {
namespace {

inline double reciprocal(double v) { return 1.0 / v; }

void require_dim(std::span<const double> x, int n, const char* what) {
  if (static_cast<int>(x.size()) != n) {
    throw DimensionError(std::string(what) + ": state dimension mismatch");
  }
}

template <typename S>
void two_body_kernel(double mu, std::span<const S> x, std::span<S> dx) {
  using std::sqrt;
  S r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  S c = (-mu) * reciprocal(r2 * sqrt(r2));
  dx[0] = x[3];
  dx[1] = x[4];
  dx[2] = x[5];
  dx[3] = c * x[0];
  dx[4] = c * x[1];
  dx[5] = c * x[2];
}

template <typename S>
void cr3bp_kernel(double mu, std::span<const S> x, std::span<S> dx) {
  using std::sqrt;
  S arm1 = x[0] + mu;
  S arm2 = x[0] - (1.0 - mu);
  S yz2 = x[1] * x[1] + x[2] * x[2];
  S r12 = arm1 * arm1 + yz2;
  S r22 = arm2 * arm2 + yz2;
  S c1 = (1.0 - mu) * reciprocal(r12 * sqrt(r12));
  S c2 = mu * reciprocal(r22 * sqrt(r22));
  dx[0] = x[3];
  dx[1] = x[4];
  dx[2] = x[5];
  dx[3] = 2.0 * x[4] + x[0] - c1 * arm1 - c2 * arm2;
  dx[4] = -2.0 * x[3] + x[1] - c1 * x[1] - c2 * x[1];
  dx[5] = -c1 * x[2] - c2 * x[2];
}

// State layout: [r, theta, phi, V, gamma, psi, z] with z the scaled
// log-density; everything nondimensional per AerocaptureScales.
template <typename S>
void aerocapture_kernel(const AerocaptureScales& sc, std::span<const S> x,
                        std::span<S> dx) {
  using std::cos;
  using std::exp;
  using std::sin;

  const S& r = x[0];
  const S& ph = x[2];
  const S& V = x[3];
  const S& ga = x[4];
  const S& ps = x[5];
  const S& z = x[6];

  S sg = sin(ga), cg = cos(ga);
  S sp = sin(ph), cp = cos(ph);
  S sh = sin(ps), ch = cos(ps);
  S ir = reciprocal(r);
  S ir2 = ir * ir;
  S icp = reciprocal(cp);
  S icg = reciprocal(cg);
  S iV = reciprocal(V);

  S rho = exp(sc.mref * z);
  S drag = (0.5 * sc.drag_const) * rho * V * V;
  S lift = sc.lift_to_drag * drag;

  S gr = ir2 * (1.0 + (1.5 * sc.j2) * ir2 * (1.0 - 3.0 * sp * sp));
  S gp = (3.0 * sc.j2) * ir2 * ir2 * sp * cp;

  const double w = sc.omega_nd;
  const double w2 = w * w;

  dx[0] = V * sg;
  dx[1] = V * cg * sh * ir * icp;
  dx[2] = V * cg * ch * ir;
  dx[3] = -drag - gr * sg - gp * cg * cp +
          w2 * r * cp * (sg * cp - cg * sp * ch);
  dx[4] = iV * (lift * sc.cos_bank + (V * V * ir - gr) * cg + gp * sg * ch +
                (2.0 * w) * V * cp * sh +
                w2 * r * cp * (cg * cp + sg * ch * sp));
  dx[5] = iV * (lift * sc.sin_bank * icg + V * V * ir * cg * sh * sp * icp +
                gp * sh * icg - (2.0 * w) * V * (sg * icg * ch * cp - sp) +
                w2 * r * icg * sh * sp * cp);
  dx[6] = (-1.0 / (sc.mref * sc.scale_height_nd)) * V * sg;
}

}  // namespace

AerocaptureScales AerocaptureScales::from(const AerocaptureParams& p) {
  if (!(p.radius_planet > 0.0) || !(p.mu_planet > 0.0)) {
    throw std::invalid_argument("planet radius and mu must be positive");
  }
  if (!(p.ballistic_coeff > 0.0) || !(p.scale_height > 0.0) ||
      !(p.mref_over_Rp3 > 0.0)) {
    throw std::invalid_argument("aerodynamic constants must be positive");
  }
  AerocaptureScales s;
  s.g0_km_s2 = p.mu_planet / (p.radius_planet * p.radius_planet);
  s.velocity_km_s = std::sqrt(s.g0_km_s2 * p.radius_planet);
  s.time_s = std::sqrt(p.radius_planet / s.g0_km_s2);
  s.omega_nd = p.omega_planet * s.time_s;
  s.scale_height_nd = p.scale_height / p.radius_planet;
  s.drag_const = p.radius_planet * 1000.0 / p.ballistic_coeff;
  s.j2 = p.j2;
  s.lift_to_drag = p.lift_to_drag;
  double bank = p.bank_angle_deg * std::numbers::pi / 180.0;
  s.cos_bank = std::cos(bank);
  s.sin_bank = std::sin(bank);
  s.mref = p.mref_over_Rp3;
  return s;
}

StateVector eval_two_body(const StateVector& x, const TwoBodyParams& p) {
  require_dim(std::span<const double>(x.values.data(), x.values.size()), 6,
              "two_body");
  StateVector out{Eigen::VectorXd(6), x.frame};
  two_body_kernel<double>(p.mu, {x.values.data(), 6}, {out.values.data(), 6});
  return out;
}

StateVector eval_cr3bp(const StateVector& x, const Cr3bpParams& p) {
  require_dim(std::span<const double>(x.values.data(), x.values.size()), 6,
              "cr3bp");
  if (x.frame != Frame::nondimensional) {
    throw std::invalid_argument("cr3bp states are nondimensional");
  }
  StateVector out{Eigen::VectorXd(6), x.frame};
  cr3bp_kernel<double>(p.mu_star, {x.values.data(), 6},
                       {out.values.data(), 6});
  return out;
}

StateVector eval_aerocapture(const StateVector& x,
                             const AerocaptureParams& p) {
  require_dim(std::span<const double>(x.values.data(), x.values.size()), 7,
              "aerocapture");
  if (x.frame != Frame::nondimensional) {
    throw std::invalid_argument("aerocapture evaluation takes the scaled state");
  }
  AerocaptureScales sc = AerocaptureScales::from(p);
  StateVector out{Eigen::VectorXd(7), x.frame};
  aerocapture_kernel<double>(sc, {x.values.data(), 7}, {out.values.data(), 7});
  return out;
}

double two_body_energy(std::span<const double> x, double mu) {
  require_dim(x, 6, "two_body_energy");
  double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  double v2 = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
  return 0.5 * v2 - mu / r;
}

Eigen::Vector3d two_body_angular_momentum(std::span<const double> x) {
  require_dim(x, 6, "two_body_angular_momentum");
  Eigen::Vector3d r(x[0], x[1], x[2]);
  Eigen::Vector3d v(x[3], x[4], x[5]);
  return r.cross(v);
}

double cr3bp_jacobi(std::span<const double> x, double mu_star) {
  require_dim(x, 6, "cr3bp_jacobi");
  double r1 = std::sqrt((x[0] + mu_star) * (x[0] + mu_star) + x[1] * x[1] +
                        x[2] * x[2]);
  double r2 = std::sqrt((x[0] - 1.0 + mu_star) * (x[0] - 1.0 + mu_star) +
                        x[1] * x[1] + x[2] * x[2]);
  double v2 = x[3] * x[3] + x[4] * x[4] + x[5] * x[5];
  return x[0] * x[0] + x[1] * x[1] + 2.0 * (1.0 - mu_star) / r1 +
         2.0 * mu_star / r2 - v2;
}

void DynamicsModel::check_domain(std::span<const double> x) const {
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw IntegrationError(name() + ": state is not finite");
    }
  }
}

StateVector DynamicsModel::nondimensionalize(const StateVector& x) const {
  StateVector out = x;
  out.frame = Frame::nondimensional;
  return out;
}

StateVector DynamicsModel::dimensionalize(const StateVector& x) const {
  StateVector out = x;
  out.frame = Frame::dimensional;
  return out;
}

TwoBodyModel::TwoBodyModel(double mu_nd, double du_km, double tu_s)
    : mu_(mu_nd), du_km_(du_km), tu_s_(tu_s) {
  if (!(mu_ > 0.0) || !(du_km_ > 0.0) || !(tu_s_ > 0.0)) {
    throw std::invalid_argument("two-body scales must be positive");
  }
}

void TwoBodyModel::rhs(double, std::span<const double> x,
                       std::span<double> dx) const {
  two_body_kernel<double>(mu_, x, dx);
}

void TwoBodyModel::rhs_jets(double, std::span<const TaylorJet> x,
                            std::span<TaylorJet> dx) const {
  two_body_kernel<TaylorJet>(mu_, x, dx);
}

void TwoBodyModel::check_domain(std::span<const double> x) const {
  DynamicsModel::check_domain(x);
  double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  if (!(r2 > 1e-24)) {
    throw IntegrationError("two_body: trajectory reached the singularity");
  }
}

StateVector TwoBodyModel::nondimensionalize(const StateVector& x) const {
  if (x.frame != Frame::dimensional) {
    throw std::invalid_argument("state is already nondimensional");
  }
  StateVector out{x.values, Frame::nondimensional};
  out.values.head<3>() /= du_km_;
  out.values.tail<3>() /= du_km_ / tu_s_;
  return out;
}

StateVector TwoBodyModel::dimensionalize(const StateVector& x) const {
  if (x.frame != Frame::nondimensional) {
    throw std::invalid_argument("state is already dimensional");
  }
  StateVector out{x.values, Frame::dimensional};
  out.values.head<3>() *= du_km_;
  out.values.tail<3>() *= du_km_ / tu_s_;
  return out;
}

Cr3bpModel::Cr3bpModel(Cr3bpParams p) : p_(p) {
  if (!(p_.mu_star >= 0.0) || !(p_.mu_star < 0.5)) {
    throw std::invalid_argument("reduced mass must lie in [0, 1/2)");
  }
}

void Cr3bpModel::rhs(double, std::span<const double> x,
                     std::span<double> dx) const {
  cr3bp_kernel<double>(p_.mu_star, x, dx);
}

void Cr3bpModel::rhs_jets(double, std::span<const TaylorJet> x,
                          std::span<TaylorJet> dx) const {
  cr3bp_kernel<TaylorJet>(p_.mu_star, x, dx);
}

void Cr3bpModel::check_domain(std::span<const double> x) const {
  DynamicsModel::check_domain(x);
  double yz2 = x[1] * x[1] + x[2] * x[2];
  double r12 = (x[0] + p_.mu_star) * (x[0] + p_.mu_star) + yz2;
  double r22 =
      (x[0] - 1.0 + p_.mu_star) * (x[0] - 1.0 + p_.mu_star) + yz2;
  if (!(r12 > 1e-16) || !(r22 > 1e-16)) {
    throw IntegrationError("cr3bp: trajectory reached a primary");
  }
}

AerocaptureModel::AerocaptureModel(AerocaptureParams p)
    : p_(p), s_(AerocaptureScales::from(p)) {}

void AerocaptureModel::rhs(double, std::span<const double> x,
                           std::span<double> dx) const {
  aerocapture_kernel<double>(s_, x, dx);
}

void AerocaptureModel::rhs_jets(double, std::span<const TaylorJet> x,
                                std::span<TaylorJet> dx) const {
  aerocapture_kernel<TaylorJet>(s_, x, dx);
}

void AerocaptureModel::check_domain(std::span<const double> x) const {
  DynamicsModel::check_domain(x);
  if (!(x[0] > 1.0)) {
    throw IntegrationError("aerocapture: vehicle reached the surface");
  }
  if (!(x[3] > 1e-9)) {
    throw IntegrationError("aerocapture: velocity collapsed to zero");
  }
  if (!(std::cos(x[4]) > 1e-9)) {
    throw IntegrationError("aerocapture: flight path angle left (-90, 90) deg");
  }
  if (!(std::abs(std::cos(x[2])) > 1e-9)) {
    throw IntegrationError("aerocapture: latitude at a pole");
  }
}

StateVector AerocaptureModel::nondimensionalize(const StateVector& x) const {
  if (x.frame != Frame::dimensional) {
    throw std::invalid_argument("state is already nondimensional");
  }
  StateVector out{x.values, Frame::nondimensional};
  out.values[0] /= p_.radius_planet;
  out.values[3] /= s_.velocity_km_s;
  out.values[6] /= s_.mref;
  return out;
}

StateVector AerocaptureModel::dimensionalize(const StateVector& x) const {
  if (x.frame != Frame::nondimensional) {
    throw std::invalid_argument("state is already dimensional");
  }
  StateVector out{x.values, Frame::dimensional};
  out.values[0] *= p_.radius_planet;
  out.values[3] *= s_.velocity_km_s;
  out.values[6] *= s_.mref;
  return out;
}

}  // namespace dstt
