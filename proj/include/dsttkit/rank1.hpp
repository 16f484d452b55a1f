#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dsttkit/stt.hpp"
#include "dsttkit/tensor.hpp"

namespace dstt {

enum class ShiftMode { conservative, reduced };

struct EigenSolverSettings {
  ShiftMode shift_mode = ShiftMode::reduced;
  int restarts = 20;
  // Relative eigenvalue tolerance. The successive-iterate angle gate is
  // min(1e-10, 100 tol) radians, so tolerances below 1e-12 also tighten it.
  double tol = 1e-12;
  int max_iter = 5000;
  std::uint64_t rng_seed = 0;
  std::uint64_t stream = 0;
  // Deterministic extra start vectors tried in addition to the random ones.
  std::vector<Eigen::VectorXd> warm_starts;
};

struct EigenResult {
  double lambda = 0.0;
  Eigen::VectorXd vector;
  int iterations = 0;
  bool converged = false;
  int restarts_used = 0;
  double residual = 0.0;  // ||G(v) - lambda v|| at the returned iterate
};

enum class R1Method { dstt, odstt };

// Rank-1 directional factors u (output direction, tensor units) and v (unit
// input direction) approximating an order-m STT as u (x) v (x) ... (x) v.
struct Rank1Factors {
  int order = 0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  R1Method method = R1Method::dstt;
  int epoch = -1;
};

// Flips the sign so the largest-magnitude component is positive. Entirely
// deterministic, including the tie rule (first such component wins).
Eigen::VectorXd canonicalize_sign(Eigen::VectorXd v);

// Angle between two unit vectors in degrees, folded to [0, 90] by taking the
// absolute dot product (rank-1 factors are sign-invariant).
double angle_between(const Eigen::VectorXd& v1, const Eigen::VectorXd& v2);

// Shifted symmetric higher-order power iteration on the implicit "square" of
// phi: fixed point of x <- normalize(G(x) + alpha x) with
// G(x) = contract_all_but_one_input(phi, x)^T contract_full(phi, x).
// Returns the best (largest lambda) converged eigenpair across restarts.
EigenResult sshopm_squared(const TensorOneM& phi,
                           const EigenSolverSettings& settings);

// v = dominant right singular vector of the STM at epoch k (shared across
// orders), u = contract_full(stt_m, v).
Rank1Factors build_r1dstt(const SttHistory& h, int k, int m);

// v = maximal z-eigenvector of the square of phi, u = contract_full(phi, v).
Rank1Factors build_r1odstt(const TensorOneM& phi,
                           const EigenSolverSettings& settings,
                           int epoch = -1);

// max_{|x|=1} |phi x^m|: top singular value for m = 1, sqrt(lambda_max)
// otherwise.
double induced_2norm(const TensorOneM& phi, const EigenSolverSettings& settings);

}  // namespace dstt
