#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dsttkit/dynamics.hpp"
#include "dsttkit/tensor.hpp"

namespace dstt {

struct IntegratorSettings {
  double rel_tol = 1e-12;
  double abs_tol = 1e-12;
  double max_step = 0.0;
};

// Reference trajectory plus state transition tensors Phi^[p](t_k, t_0)
// sampled on a time grid. stm[k] maps initial perturbations linearly;
// stt2/stt3 are the second- and third-order Taylor coefficients of the flow.
struct SttHistory {
  int state_dim = 0;
  int order = 0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::MatrixXd> stm;
  std::vector<TensorOneM> stt2;
  std::vector<TensorOneM> stt3;
  // Largest input-asymmetry observed in any sampled stt2/stt3 entry before
  // symmetrization.
  double max_symmetry_defect = 0.0;

  std::size_t epochs() const { return times.size(); }
  const TensorOneM& stt(int order_m, int k) const;
};

SttHistory integrate_stts(const DynamicsModel& model,
                          const StateVector& x0_nd,
                          std::span<const double> grid, int order,
                          const IntegratorSettings& settings = {});

// Truncated Taylor propagation of an initial perturbation (orders 1..M).
Eigen::VectorXd propagate_perturbation_stt(const SttHistory& h, int k,
                                           const Eigen::VectorXd& dx0, int m);

struct Rank1Factors;

// Full STM plus rank-1 directional nonlinear corrections.
Eigen::VectorXd propagate_perturbation_r1(const SttHistory& h, int k,
                                          const Eigen::VectorXd& dx0,
                                          const Rank1Factors& f2,
                                          const Rank1Factors* f3 = nullptr);

// times.csv plus per-epoch state_k.csv, stm_k.csv, stt2_k.csv, stt3_k.csv in
// the tensor dump format.
void save_history_csv(const SttHistory& h, const std::string& dir);
void save_history_epoch_csv(const SttHistory& h, int k,
                            const std::string& dir);

}  // namespace dstt
