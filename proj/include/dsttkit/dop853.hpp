#pragma once

#include <functional>
#include <span>
#include <vector>

namespace dstt {

struct OdeSettings {
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  double max_step = 0.0;      // 0 disables the cap
  double initial_step = 0.0;  // 0 selects automatically
  long max_steps = 2000000;
};

// Explicit Runge-Kutta 8(5,3) pair (Dormand-Prince, Hairer's DOP853) with
// 7th-order dense output. Integrates forward in time only.
class Dop853 {
 public:
  using Rhs =
      std::function<void(double, std::span<const double>, std::span<double>)>;
  using Sink =
      std::function<void(std::size_t, double, std::span<const double>)>;

  Dop853(Rhs rhs, int dim, OdeSettings settings = {});

  // Integrates from (t0, y0) past the last entry of the ascending sample
  // grid, invoking sink(index, t, y) for every grid point (dense output
  // between accepted steps). Grid entries equal to t0 are emitted directly.
  void integrate(double t0, std::span<const double> y0,
                 std::span<const double> samples, const Sink& sink);

  std::vector<double> integrate_to(double t0, std::span<const double> y0,
                                   double tf);

  long steps_accepted() const { return accepted_; }
  long steps_rejected() const { return rejected_; }
  long rhs_evaluations() const { return evals_; }

 private:
  void eval(double t, std::span<const double> y, std::span<double> dy);
  double initial_step_size(double t0, std::span<const double> y,
                           std::span<const double> f0) const;

  Rhs rhs_;
  int dim_;
  OdeSettings s_;
  long accepted_ = 0, rejected_ = 0, evals_ = 0;
};

}  // namespace dstt
