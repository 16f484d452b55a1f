#include "dsttkit/moments.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsttkit/errors.hpp"

namespace dstt {

namespace {

using Matching = std::vector<std::pair<int, int>>;

// All perfect matchings of {0, .., order-1}: 3 for order 4, 15 for order 6.
void enumerate_matchings(std::vector<int>& free_pos, Matching& cur,
                         std::vector<Matching>& out) {
  if (free_pos.empty()) {
    out.push_back(cur);
    return;
  }
  int first = free_pos.front();
  for (std::size_t j = 1; j < free_pos.size(); ++j) {
    int partner = free_pos[j];
    std::vector<int> rest;
    for (std::size_t k = 1; k < free_pos.size(); ++k) {
      if (k != j) rest.push_back(free_pos[k]);
    }
    cur.emplace_back(first, partner);
    enumerate_matchings(rest, cur, out);
    cur.pop_back();
  }
}

std::vector<Matching> matchings_of(int order) {
  std::vector<int> pos(order);
  for (int i = 0; i < order; ++i) pos[i] = i;
  Matching cur;
  std::vector<Matching> out;
  enumerate_matchings(pos, cur, out);
  return out;
}

// Dense order-p Gaussian moment array (row-major, n^p entries) via the sum
// over pair products.
std::vector<double> dense_moment(const Eigen::MatrixXd& p, int order) {
  const int n = static_cast<int>(p.rows());
  const std::vector<Matching> matchings = matchings_of(order);
  std::size_t total = 1;
  for (int s = 0; s < order; ++s) total *= static_cast<std::size_t>(n);
  std::vector<double> out(total);
  std::vector<int> idx(order, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    double acc = 0.0;
    for (const Matching& m : matchings) {
      double prod = 1.0;
      for (const auto& [a, b] : m) {
        prod *= p(idx[a], idx[b]);
      }
      acc += prod;
    }
    out[flat] = acc;
    for (int s = order - 1; s >= 0; --s) {
      if (++idx[s] < n) break;
      idx[s] = 0;
    }
  }
  return out;
}

Eigen::MatrixXd checked_symmetric(const Eigen::MatrixXd& p) {
  if (p.rows() != p.cols() || p.rows() < 1) {
    throw DimensionError("covariance must be square");
  }
  return 0.5 * (p + p.transpose());
}

void check_order(int m) {
  if (m < 1 || m > 3) {
    throw std::invalid_argument("propagation order must be 1, 2, or 3");
  }
}

}  // namespace

SymmetricEvenTensor gaussian_moment_tensors(const Eigen::MatrixXd& p,
                                            int order) {
  if (order != 2 && order != 4 && order != 6) {
    throw std::invalid_argument("moment order must be 2, 4, or 6");
  }
  Eigen::MatrixXd ps = checked_symmetric(p);
  const int n = static_cast<int>(ps.rows());
  SymmetricEvenTensor t(n, order);
  std::vector<double> entries = dense_moment(ps, order);
  std::vector<int> idx(order, 0);
  for (std::size_t flat = 0; flat < entries.size(); ++flat) {
    t.at(idx) = entries[flat];
    for (int s = order - 1; s >= 0; --s) {
      if (++idx[s] < n) break;
      idx[s] = 0;
    }
  }
  return t;
}

MomentTensors build_moment_tensors(const Eigen::MatrixXd& p, int max_order) {
  check_order(max_order);
  MomentTensors mom;
  mom.m2 = checked_symmetric(p);
  mom.dim = static_cast<int>(mom.m2.rows());
  mom.max_order = max_order;
  if (max_order >= 2) {
    mom.m4 = dense_moment(mom.m2, 4);
  }
  if (max_order >= 3) {
    mom.m6 = dense_moment(mom.m2, 6);
  }
  return mom;
}

GaussianState propagate_moments_tensors(const Eigen::MatrixXd& stm,
                                        const TensorOneM* stt2,
                                        const TensorOneM* stt3,
                                        const MomentTensors& mom, int m) {
  check_order(m);
  const int n = mom.dim;
  if (stm.rows() != n || stm.cols() != n) {
    throw DimensionError("transition matrix dimension mismatch");
  }
  if (m >= 2 && (!stt2 || stt2->nout() != n || stt2->nin() != n ||
                 stt2->order() != 2)) {
    throw std::invalid_argument("order 2 propagation needs the n^3 tensor");
  }
  if (m >= 3 && (!stt3 || stt3->nout() != n || stt3->nin() != n ||
                 stt3->order() != 3)) {
    throw std::invalid_argument("order 3 propagation needs the n^4 tensor");
  }
  if (m >= 2 && mom.max_order < m) {
    throw std::invalid_argument("moment tensors were built to a lower order");
  }

  const std::size_t n2 = static_cast<std::size_t>(n) * n;
  const std::size_t n3 = n2 * n;

  GaussianState out;
  out.dmean = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd second = stm * mom.m2 * stm.transpose();

  if (m >= 2) {
    Eigen::Map<const RowMatrixXd> phi2(stt2->data(), n, n2);
    Eigen::Map<const RowMatrixXd> m4_kernel(mom.m4.data(), n2, n2);
    // m2 is symmetric, so its flat column-major data doubles as the
    // row-major vectorization the tensor rows expect.
    out.dmean =
        0.5 * phi2 * Eigen::Map<const Eigen::VectorXd>(mom.m2.data(), n2);
    second += 0.25 * phi2 * m4_kernel * phi2.transpose();
  }
  if (m >= 3) {
    Eigen::Map<const RowMatrixXd> phi3(stt3->data(), n, n3);
    Eigen::Map<const RowMatrixXd> m4_wide(mom.m4.data(), n, n3);
    Eigen::Map<const RowMatrixXd> m6_kernel(mom.m6.data(), n3, n3);
    Eigen::MatrixXd cross = (1.0 / 6.0) * stm * m4_wide * phi3.transpose();
    second += cross + cross.transpose();
    second += (1.0 / 36.0) * phi3 * m6_kernel * phi3.transpose();
  }

  out.cov = second - out.dmean * out.dmean.transpose();
  return out;
}

namespace {

void check_initial(const GaussianState& g0, int n) {
  if (g0.cov.rows() != n || g0.cov.cols() != n) {
    throw DimensionError("initial covariance dimension mismatch");
  }
  if (g0.dmean.size() != 0 && g0.dmean.norm() != 0.0) {
    throw std::invalid_argument("initial deviation mean must be zero");
  }
}

void check_history_epoch(const SttHistory& h, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= h.epochs()) {
    throw std::out_of_range("epoch index out of range");
  }
}

}  // namespace

GaussianState propagate_moments_stt(const SttHistory& h, int k,
                                    const GaussianState& g0, int m) {
  check_order(m);
  check_history_epoch(h, k);
  if (m > h.order) {
    throw std::invalid_argument("expansion order exceeds stored order");
  }
  check_initial(g0, h.state_dim);
  MomentTensors mom = build_moment_tensors(g0.cov, m);
  const TensorOneM* t2 = m >= 2 ? &h.stt2[k] : nullptr;
  const TensorOneM* t3 = m >= 3 ? &h.stt3[k] : nullptr;
  return propagate_moments_tensors(h.stm[k], t2, t3, mom, m);
}

double sigma_projection(const Eigen::MatrixXd& p, const Eigen::VectorXd& v) {
  if (p.rows() != p.cols() || p.rows() != v.size()) {
    throw DimensionError("projection dimension mismatch");
  }
  return std::sqrt(std::max(0.0, v.dot(p * v)));
}

GaussianState propagate_moments_r1_tensors(const Eigen::MatrixXd& stm,
                                           const Eigen::MatrixXd& p0,
                                           const Rank1Factors& f2,
                                           const Rank1Factors* f3) {
  Eigen::MatrixXd p = checked_symmetric(p0);
  const int n = static_cast<int>(p.rows());
  if (stm.rows() != n || stm.cols() != n) {
    throw DimensionError("transition matrix dimension mismatch");
  }
  if (f2.order != 2 || f2.u.size() != n || f2.v.size() != n) {
    throw std::invalid_argument("second order factors are malformed");
  }
  if (f3 && (f3->order != 3 || f3->u.size() != n || f3->v.size() != n)) {
    throw std::invalid_argument("third order factors are malformed");
  }

  const double s2 = f2.v.dot(p * f2.v);
  GaussianState out;
  out.dmean = 0.5 * s2 * f2.u;
  out.cov = stm * p * stm.transpose() +
            0.5 * s2 * s2 * f2.u * f2.u.transpose();
  if (f3) {
    const double s3 = f3->v.dot(p * f3->v);
    const Eigen::VectorXd a = stm * (p * f3->v);
    Eigen::MatrixXd cross = 0.5 * s3 * a * f3->u.transpose();
    out.cov += cross + cross.transpose();
    out.cov += (5.0 / 12.0) * s3 * s3 * s3 * f3->u * f3->u.transpose();
  }
  return out;
}

GaussianState propagate_moments_r1(const SttHistory& h, int k,
                                   const GaussianState& g0,
                                   const Rank1Factors& f2,
                                   const Rank1Factors* f3) {
  check_history_epoch(h, k);
  check_initial(g0, h.state_dim);
  if (f2.epoch >= 0 && f2.epoch != k) {
    throw std::invalid_argument("second-order factors built at another epoch");
  }
  if (f3 && f3->epoch >= 0 && f3->epoch != k) {
    throw std::invalid_argument("third-order factors built at another epoch");
  }
  return propagate_moments_r1_tensors(h.stm[k], g0.cov, f2, f3);
}

double covariance_error_metric(const Eigen::MatrixXd& p_ref,
                               const Eigen::MatrixXd& p_approx) {
  if (p_ref.rows() != p_approx.rows() || p_ref.cols() != p_approx.cols()) {
    throw DimensionError("covariance dimension mismatch");
  }
  double denom = p_ref.norm();
  if (denom == 0.0) {
    throw std::invalid_argument("reference covariance is zero");
  }
  return (p_ref - p_approx).norm() / denom;
}

CovarianceDiagnostics diagnose_covariance(const Eigen::MatrixXd& p) {
  Eigen::MatrixXd ps = checked_symmetric(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ps);
  CovarianceDiagnostics d;
  d.min_eigenvalue = es.eigenvalues().minCoeff();
  d.indefinite = d.min_eigenvalue < 0.0;
  return d;
}

}  // namespace dstt
