#pragma once

#include <memory>
#include <span>
#include <string>

#include <Eigen/Core>

#include "dsttkit/jet.hpp"

namespace dstt {

enum class Frame { dimensional, nondimensional };

struct StateVector {
  Eigen::VectorXd values;
  Frame frame = Frame::nondimensional;
};

struct TwoBodyParams {
  double mu = 1.0;  // km^3/s^2 (dimensional) or 1 (canonical units)
};

struct Cr3bpParams {
  double mu_star = 0.0;  // reduced mass, nondimensional
};

struct AerocaptureParams {
  double lift_to_drag = 0.25;
  double ballistic_coeff = 145.0;  // kg/m^2
  double bank_angle_deg = 78.0;
  double omega_planet = 0.0;  // rad/s
  double radius_planet = 0.0;  // km
  double mu_planet = 0.0;      // km^3/s^2
  double j2 = 0.0;
  double rho0 = 6.40e-3;       // kg/m^3 at reference altitude h0
  double h0 = 0.0;             // km
  double scale_height = 54.72;  // km
  double mref_over_Rp3 = 20.0;  // ln-density normalization constant
};

// Nondimensional constants derived from AerocaptureParams. Length scale R_p,
// velocity scale sqrt(g0 R_p), time scale sqrt(R_p / g0) with g0 = mu/R_p^2.
struct AerocaptureScales {
  double g0_km_s2 = 0.0;
  double velocity_km_s = 0.0;
  double time_s = 0.0;
  double omega_nd = 0.0;       // Omega * time scale
  double scale_height_nd = 0.0;
  double drag_const = 0.0;     // R_p[m] / beta, so D* = 1/2 rho V*^2 drag_const
  double j2 = 0.0;
  double lift_to_drag = 0.0;
  double cos_bank = 0.0;
  double sin_bank = 0.0;
  double mref = 0.0;
  static AerocaptureScales from(const AerocaptureParams& p);
};

// Plain-state evaluation entry points. States and derivatives are
// nondimensional; two-body accepts any consistent mu.
StateVector eval_two_body(const StateVector& x, const TwoBodyParams& p);
StateVector eval_cr3bp(const StateVector& x, const Cr3bpParams& p);
StateVector eval_aerocapture(const StateVector& x, const AerocaptureParams& p);

// First integrals used by tests and physics guards.
double two_body_energy(std::span<const double> x, double mu);
Eigen::Vector3d two_body_angular_momentum(std::span<const double> x);
double cr3bp_jacobi(std::span<const double> x, double mu_star);

class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  virtual void rhs(double t, std::span<const double> x,
                   std::span<double> dx) const = 0;
  virtual void rhs_jets(double t, std::span<const TaylorJet> x,
                        std::span<TaylorJet> dx) const = 0;
  // Throws IntegrationError when the state leaves the model's valid domain.
  virtual void check_domain(std::span<const double> x) const;
  virtual StateVector nondimensionalize(const StateVector& x) const;
  virtual StateVector dimensionalize(const StateVector& x) const;
};

class TwoBodyModel : public DynamicsModel {
 public:
  // mu_nd is the gravitational parameter in the integration units (1 for
  // canonical units). du_km/tu_s describe the dimensional scaling.
  explicit TwoBodyModel(double mu_nd = 1.0, double du_km = 1.0,
                        double tu_s = 1.0);
  int dim() const override { return 6; }
  std::string name() const override { return "two_body"; }
  void rhs(double t, std::span<const double> x,
           std::span<double> dx) const override;
  void rhs_jets(double t, std::span<const TaylorJet> x,
                std::span<TaylorJet> dx) const override;
  void check_domain(std::span<const double> x) const override;
  StateVector nondimensionalize(const StateVector& x) const override;
  StateVector dimensionalize(const StateVector& x) const override;
  double mu() const { return mu_; }

 private:
  double mu_, du_km_, tu_s_;
};

class Cr3bpModel : public DynamicsModel {
 public:
  explicit Cr3bpModel(Cr3bpParams p);
  int dim() const override { return 6; }
  std::string name() const override { return "cr3bp"; }
  void rhs(double t, std::span<const double> x,
           std::span<double> dx) const override;
  void rhs_jets(double t, std::span<const TaylorJet> x,
                std::span<TaylorJet> dx) const override;
  void check_domain(std::span<const double> x) const override;
  double mu_star() const { return p_.mu_star; }

 private:
  Cr3bpParams p_;
};

class AerocaptureModel : public DynamicsModel {
 public:
  explicit AerocaptureModel(AerocaptureParams p);
  int dim() const override { return 7; }
  std::string name() const override { return "aerocapture"; }
  void rhs(double t, std::span<const double> x,
           std::span<double> dx) const override;
  void rhs_jets(double t, std::span<const TaylorJet> x,
                std::span<TaylorJet> dx) const override;
  void check_domain(std::span<const double> x) const override;
  StateVector nondimensionalize(const StateVector& x) const override;
  StateVector dimensionalize(const StateVector& x) const override;
  const AerocaptureParams& params() const { return p_; }
  const AerocaptureScales& scales() const { return s_; }

 private:
  AerocaptureParams p_;
  AerocaptureScales s_;
};

}  // namespace dstt
