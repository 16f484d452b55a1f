#pragma once

#include <Eigen/Core>

#include "dsttkit/rank1.hpp"
#include "dsttkit/stt.hpp"
#include "dsttkit/tensor.hpp"

namespace dstt {

struct GaussianState {
  Eigen::VectorXd dmean;
  Eigen::MatrixXd cov;
};

// E[dx_{g1} ... dx_{gp}] for zero-mean Gaussian dx ~ N(0, P), as a fully
// symmetric tensor of order p in {2, 4, 6}. Odd-order moments vanish and are
// not represented.
SymmetricEvenTensor gaussian_moment_tensors(const Eigen::MatrixXd& p,
                                            int order);

// Precomputed initial moment tensors shared across epochs.
struct MomentTensors {
  int dim = 0;
  int max_order = 0;
  Eigen::MatrixXd m2;
  std::vector<double> m4;  // flat n^4, row-major
  std::vector<double> m6;  // flat n^6, row-major
};
MomentTensors build_moment_tensors(const Eigen::MatrixXd& p, int max_order);

// Taylor-series Gaussian moment propagation through the flow expansion of
// order M using the full tensors.
GaussianState propagate_moments_stt(const SttHistory& h, int k,
                                    const GaussianState& g0, int m);
GaussianState propagate_moments_tensors(const Eigen::MatrixXd& stm,
                                        const TensorOneM* stt2,
                                        const TensorOneM* stt3,
                                        const MomentTensors& mom, int m);

double sigma_projection(const Eigen::MatrixXd& p, const Eigen::VectorXd& v);

// Rank-1 moment propagation keeping the full STM in the linear and cross
// terms. f3 == nullptr selects the second-order form (u3 = 0).
GaussianState propagate_moments_r1(const SttHistory& h, int k,
                                   const GaussianState& g0,
                                   const Rank1Factors& f2,
                                   const Rank1Factors* f3 = nullptr);
GaussianState propagate_moments_r1_tensors(const Eigen::MatrixXd& stm,
                                           const Eigen::MatrixXd& p0,
                                           const Rank1Factors& f2,
                                           const Rank1Factors* f3);

// || P_ref - P_approx ||_F / || P_ref ||_F
double covariance_error_metric(const Eigen::MatrixXd& p_ref,
                               const Eigen::MatrixXd& p_approx);

// Truncated covariances can lose definiteness; this is reported, never
// silently repaired.
struct CovarianceDiagnostics {
  double min_eigenvalue = 0.0;
  bool indefinite = false;
};
CovarianceDiagnostics diagnose_covariance(const Eigen::MatrixXd& p);

}  // namespace dstt
