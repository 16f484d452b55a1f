#include "dsttkit/rank1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "dsttkit/errors.hpp"
#include "dsttkit/rng.hpp"

namespace dstt {

Eigen::VectorXd canonicalize_sign(Eigen::VectorXd v) {
  if (v.size() == 0) {
    return v;
  }
  int arg = 0;
  double best = std::abs(v[0]);
  for (int i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  }
  if (v[arg] < 0.0) {
    v = -v;
  }
  return v;
}

double angle_between(const Eigen::VectorXd& v1, const Eigen::VectorXd& v2) {
  double n1 = v1.norm();
  double n2 = v2.norm();
  if (n1 == 0.0 || n2 == 0.0) {
    throw std::invalid_argument("angle of a zero vector is undefined");
  }
  double c = std::min(1.0, std::abs(v1.dot(v2)) / (n1 * n2));
  return std::acos(c) * 180.0 / std::numbers::pi;
}

namespace {

struct Candidate {
  double lambda = 0.0;
  Eigen::VectorXd v;
  int iterations = 0;
  bool converged = false;
};

// Gradient direction of the square of phi at x, up to the factor 2m:
// G(x) = (phi x^{m-1})^T (phi x^m). The Rayleigh quotient x . G(x) collapses
// to |phi x^m|^2, returned through lambda.
Eigen::VectorXd square_gradient(const TensorOneM& phi, const Eigen::VectorXd& x,
                                double& lambda) {
  Eigen::MatrixXd b = contract_all_but_one_input(phi, x);
  Eigen::VectorXd c = contract_full(phi, x);
  lambda = c.squaredNorm();
  return b.transpose() * c;
}

Candidate run_start(const TensorOneM& phi, Eigen::VectorXd x, double alpha0,
                    const EigenSolverSettings& s) {
  x.normalize();
  double lam = 0.0;
  Eigen::VectorXd g = square_gradient(phi, x, lam);

  const bool reduced = s.shift_mode == ShiftMode::reduced;
  const double ang_tol = std::min(1e-10, 100.0 * s.tol);
  double alpha = alpha0;
  double alpha_good = alpha0;
  int violations = 0;
  bool frozen = false;

  Candidate cand;
  for (int it = 1; it <= s.max_iter; ++it) {
    cand.iterations = it;
    Eigen::VectorXd y = g + alpha * x;
    double yn = y.norm();
    if (yn == 0.0) {
      break;
    }
    Eigen::VectorXd xn = y / yn;
    double lamn = 0.0;
    Eigen::VectorXd gn = square_gradient(phi, xn, lamn);

    if (reduced && lamn < lam - 1e-14 * std::max(1.0, std::abs(lam))) {
      // The shift was lowered too far for ascent to hold. Back off toward
      // the conservative value and retry the step from the same iterate.
      ++violations;
      alpha = violations == 1 ? alpha_good : std::min(2.0 * alpha, alpha0);
      if (violations >= 2) {
        frozen = true;
      }
      continue;
    }

    double dlam = std::abs(lamn - lam);
    double ang = std::acos(std::min(1.0, std::abs(x.dot(xn))));
    x = xn;
    g = gn;
    lam = lamn;
    if (reduced) {
      alpha_good = alpha;
      if (!frozen) {
        alpha *= 0.5;
      }
    }
    if (dlam < s.tol * std::max(1.0, std::abs(lamn)) && ang < ang_tol) {
      cand.converged = true;
      break;
    }
  }
  cand.lambda = lam;
  cand.v = canonicalize_sign(x);
  return cand;
}

// Derivative of the gradient map: for G(x) = B(x)^T c(x) with
// B = contract_all_but_one_input and c = contract_full,
// G'(x) = (m - 1) E + m B^T B where E_{jk} = sum_i c_i phi_{i,j,k,x..x}.
Eigen::MatrixXd gradient_jacobian(const TensorOneM& phi,
                                  const Eigen::VectorXd& x,
                                  const Eigen::MatrixXd& b,
                                  const Eigen::VectorXd& c) {
  const int n = phi.nin();
  const int m = phi.order();
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < phi.nout(); ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        if (m == 2) {
          s = phi.at(i, j, k);
        } else {
          for (int l = 0; l < n; ++l) s += phi.at(i, j, k, l) * x[l];
        }
        e(j, k) += c[i] * s;
      }
    }
  }
  return (m - 1.0) * e + m * (b.transpose() * b);
}

// The shifted power iteration can stall a small angle away from the
// eigenvector when the tangent contraction is close to one. A few Newton
// corrections of (v, lambda) on the unit sphere remove that plateau. Keeps
// the residual-minimizing iterate; bails out on a singular linearization or
// a large step, leaving the candidate as it was.
void polish_eigenpair(const TensorOneM& phi, Candidate& cand) {
  const int m = phi.order();
  if (m < 2 || m > 3 || cand.v.size() == 0) {
    return;
  }
  const int n = phi.nin();
  Eigen::VectorXd x = cand.v;
  Eigen::VectorXd best_x = x;
  double best_res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 4; ++it) {
    const Eigen::MatrixXd b = contract_all_but_one_input(phi, x);
    const Eigen::VectorXd c = contract_full(phi, x);
    const double lam = c.squaredNorm();
    const Eigen::VectorXd g = b.transpose() * c;
    const double res = (g - lam * x).norm();
    if (res < best_res) {
      best_res = res;
      best_x = x;
    }
    if (res <= 1e-15 * std::max(1.0, lam)) {
      break;
    }
    Eigen::MatrixXd k(n + 1, n + 1);
    k.topLeftCorner(n, n) =
        gradient_jacobian(phi, x, b, c) - lam * Eigen::MatrixXd::Identity(n, n);
    k.topRightCorner(n, 1) = -x;
    k.bottomLeftCorner(1, n) = x.transpose();
    k(n, n) = 0.0;
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = lam * x - g;
    rhs[n] = 0.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
    if (!lu.isInvertible()) {
      break;
    }
    const Eigen::VectorXd step = lu.solve(rhs);
    if (!step.allFinite() || step.head(n).norm() > 0.1) {
      break;
    }
    x = (x + step.head(n)).normalized();
  }
  cand.v = canonicalize_sign(best_x);
  cand.lambda = contract_full(phi, best_x).squaredNorm();
}

// Prefers converged results, then larger eigenvalues; ties within tolerance
// resolve to the lexicographically larger canonical vector so the outcome is
// independent of start ordering.
bool candidate_better(const Candidate& a, const Candidate& b, double tol) {
  if (a.converged != b.converged) {
    return a.converged;
  }
  double scale = std::max({1.0, std::abs(a.lambda), std::abs(b.lambda)});
  if (std::abs(a.lambda - b.lambda) > tol * scale) {
    return a.lambda > b.lambda;
  }
  return std::lexicographical_compare(b.v.data(), b.v.data() + b.v.size(),
                                      a.v.data(), a.v.data() + a.v.size());
}

}  // namespace

EigenResult sshopm_squared(const TensorOneM& phi,
                           const EigenSolverSettings& s) {
  const int n = phi.nin();
  const int m = phi.order();
  if (s.restarts < 0 || s.max_iter < 1 || !(s.tol > 0.0)) {
    throw std::invalid_argument("invalid eigensolver settings");
  }

  EigenResult res;
  double fro = frobenius_norm(phi);
  if (fro == 0.0) {
    res.vector = Eigen::VectorXd::Zero(n);
    res.vector[0] = 1.0;
    res.converged = true;
    return res;
  }

  // Safe shift for the square, whose order is 2m and whose Frobenius norm is
  // at most fro^2.
  const double alpha0 = (2.0 * m - 1.0) * fro * fro;

  std::vector<Eigen::VectorXd> starts;
  starts.reserve(s.warm_starts.size() + static_cast<std::size_t>(s.restarts));
  for (const Eigen::VectorXd& w : s.warm_starts) {
    if (w.size() != n) {
      throw DimensionError("warm start dimension mismatch");
    }
    if (w.norm() == 0.0) {
      throw std::invalid_argument("warm start must be nonzero");
    }
    starts.push_back(w);
  }
  Philox rng(s.rng_seed, s.stream);
  for (int r = 0; r < s.restarts; ++r) {
    starts.push_back(rng.unit_vector(n));
  }
  if (starts.empty()) {
    throw SolverError("eigensolver needs at least one start vector");
  }

  Candidate best;
  bool have = false;
  for (const Eigen::VectorXd& x0 : starts) {
    Candidate c = run_start(phi, x0, alpha0, s);
    if (!have || candidate_better(c, best, s.tol)) {
      best = c;
      have = true;
    }
  }
  polish_eigenpair(phi, best);

  res.lambda = best.lambda;
  res.vector = best.v;
  res.iterations = best.iterations;
  res.converged = best.converged;
  res.restarts_used = static_cast<int>(starts.size());
  double lam_check = 0.0;
  Eigen::VectorXd g = square_gradient(phi, res.vector, lam_check);
  res.residual = (g - res.lambda * res.vector).norm();
  return res;
}

Rank1Factors build_r1dstt(const SttHistory& h, int k, int m) {
  if (k < 0 || static_cast<std::size_t>(k) >= h.epochs()) {
    throw std::out_of_range("epoch index out of range");
  }
  if (m < 2 || m > 3 || m > h.order) {
    throw std::invalid_argument("factor order must be 2 or 3 and stored");
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.stm[k], Eigen::ComputeThinV);
  Rank1Factors f;
  f.order = m;
  f.v = canonicalize_sign(svd.matrixV().col(0));
  f.u = contract_full(h.stt(m, k), f.v);
  f.method = R1Method::dstt;
  f.epoch = k;
  return f;
}

Rank1Factors build_r1odstt(const TensorOneM& phi,
                           const EigenSolverSettings& settings, int epoch) {
  if (phi.order() < 2) {
    throw std::invalid_argument("directional factors need an order >= 2 tensor");
  }
  EigenResult e = sshopm_squared(phi, settings);
  if (!e.converged) {
    throw SolverError("power iteration did not converge on any start");
  }
  Rank1Factors f;
  f.order = phi.order();
  f.v = e.vector;
  f.u = contract_full(phi, f.v);
  f.method = R1Method::odstt;
  f.epoch = epoch;
  return f;
}

double induced_2norm(const TensorOneM& phi,
                     const EigenSolverSettings& settings) {
  if (phi.order() == 1) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi.as_matrix());
    return svd.singularValues()(0);
  }
  EigenResult e = sshopm_squared(phi, settings);
  if (!e.converged) {
    throw SolverError("power iteration did not converge on any start");
  }
  return std::sqrt(std::max(0.0, e.lambda));
}

}  // namespace dstt
