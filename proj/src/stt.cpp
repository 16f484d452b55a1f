#include "dsttkit/stt.hpp"

#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dsttkit/dop853.hpp"
#include "dsttkit/errors.hpp"
#include "dsttkit/jet.hpp"
#include "dsttkit/rank1.hpp"

namespace dstt {

namespace {

void check_epoch(const SttHistory& h, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= h.epochs()) {
    throw std::out_of_range("epoch index out of range");
  }
}

// Right-hand side of the joint state + variational system. Layout:
// [x (n), stm (n^2), stt2 (n^3), stt3 (n^4)], tensors row-major with the
// output index slowest.
class VariationalRhs {
 public:
  VariationalRhs(const DynamicsModel& model, int order)
      : model_(model), n_(model.dim()), order_(order) {}

  int dim() const {
    int n2 = n_ * n_;
    int d = n_ + n2;
    if (order_ >= 2) d += n2 * n_;
    if (order_ >= 3) d += n2 * n2;
    return d;
  }

  void operator()(double t, std::span<const double> y,
                  std::span<double> dy) const {
    const int n = n_;
    Eigen::Map<const Eigen::VectorXd> x(y.data(), n);

    std::vector<TaylorJet> in = TaylorJet::seed(x, order_);
    std::vector<TaylorJet> out(n);
    model_.rhs_jets(t, in, out);
    StatePartials part = extract_partials(out, order_);

    for (int i = 0; i < n; ++i) {
      dy[i] = out[i].value();
    }

    Eigen::Map<const RowMatrixXd> p1(y.data() + n, n, n);
    Eigen::Map<RowMatrixXd> dp1(dy.data() + n, n, n);
    dp1 = part.a1 * p1;
    if (order_ < 2) {
      return;
    }

    Eigen::MatrixXd p1t = p1.transpose();
    const int off2 = n + n * n;
    Eigen::Map<const RowMatrixXd> p2(y.data() + off2, n, n * n);
    Eigen::Map<RowMatrixXd> dp2(dy.data() + off2, n, n * n);
    dp2 = part.a1 * p2;
    TensorOneM a2p = change_basis(part.a2, p1t);
    dp2 += Eigen::Map<const RowMatrixXd>(a2p.data(), n, n * n);
    if (order_ < 3) {
      return;
    }

    const int off3 = off2 + n * n * n;
    Eigen::Map<const RowMatrixXd> p3(y.data() + off3, n, n * n * n);
    Eigen::Map<RowMatrixXd> dp3(dy.data() + off3, n, n * n * n);
    dp3 = part.a1 * p3;
    TensorOneM a3p = change_basis(part.a3, p1t);
    dp3 += Eigen::Map<const RowMatrixXd>(a3p.data(), n, n * n * n);

    // Mixed term: the second partials applied to every pairing of one
    // second-order and one first-order column.
    for (int i = 0; i < n; ++i) {
      Eigen::Map<const RowMatrixXd> a2i(part.a2.data() + i * n * n, n, n);
      RowMatrixXd k1 = a2i * p1;            // (alpha, c)
      RowMatrixXd w = p2.transpose() * k1;  // ((a,b), c)
      double* d3 = dy.data() + off3 + static_cast<std::ptrdiff_t>(i) * n * n * n;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          for (int c = 0; c < n; ++c) {
            d3[(a * n + b) * n + c] +=
                w(a * n + b, c) + w(a * n + c, b) + w(b * n + c, a);
          }
        }
      }
    }
  }

 private:
  const DynamicsModel& model_;
  int n_;
  int order_;
};

}  // namespace

const TensorOneM& SttHistory::stt(int order_m, int k) const {
  check_epoch(*this, k);
  if (order_m == 2 && order >= 2) {
    return stt2[k];
  }
  if (order_m == 3 && order >= 3) {
    return stt3[k];
  }
  throw std::invalid_argument("tensor order not stored in this history");
}

SttHistory integrate_stts(const DynamicsModel& model, const StateVector& x0_nd,
                          std::span<const double> grid, int order,
                          const IntegratorSettings& settings) {
  const int n = model.dim();
  if (x0_nd.frame != Frame::nondimensional) {
    throw std::invalid_argument("initial state must be nondimensional");
  }
  if (static_cast<int>(x0_nd.values.size()) != n) {
    throw DimensionError("initial state dimension mismatch");
  }
  if (order < 1 || order > 3) {
    throw std::invalid_argument("tensor order must be 1, 2, or 3");
  }
  if (!(settings.rel_tol > 0.0) || settings.rel_tol > 1e-3 ||
      !(settings.abs_tol > 0.0) || settings.abs_tol > 1e-3) {
    throw std::invalid_argument("tolerances must lie in (0, 1e-3]");
  }
  if (grid.empty()) {
    throw std::invalid_argument("sample grid is empty");
  }
  model.check_domain({x0_nd.values.data(),
                      static_cast<std::size_t>(x0_nd.values.size())});

  VariationalRhs rhs(model, order);
  const int dim = rhs.dim();
  std::vector<double> y0(dim, 0.0);
  for (int i = 0; i < n; ++i) {
    y0[i] = x0_nd.values[i];
  }
  for (int i = 0; i < n; ++i) {
    y0[n + i * n + i] = 1.0;
  }

  OdeSettings ode_settings;
  ode_settings.rel_tol = settings.rel_tol;
  ode_settings.abs_tol = settings.abs_tol;
  ode_settings.max_step = settings.max_step;
  Dop853 ode([&rhs](double t, std::span<const double> y,
                    std::span<double> dy) { rhs(t, y, dy); },
             dim, ode_settings);

  SttHistory h;
  h.state_dim = n;
  h.order = order;
  h.times.assign(grid.begin(), grid.end());
  h.states.reserve(grid.size());
  h.stm.reserve(grid.size());
  if (order >= 2) h.stt2.reserve(grid.size());
  if (order >= 3) h.stt3.reserve(grid.size());

  const int off2 = n + n * n;
  const int off3 = off2 + n * n * n;
  ode.integrate(
      grid.front(), y0, grid,
      [&](std::size_t, double, std::span<const double> y) {
        model.check_domain(y.subspan(0, n));
        h.states.emplace_back(Eigen::Map<const Eigen::VectorXd>(y.data(), n));
        h.stm.emplace_back(
            Eigen::Map<const RowMatrixXd>(y.data() + n, n, n));
        if (order >= 2) {
          std::vector<double> e(y.begin() + off2, y.begin() + off3);
          TensorOneM t = TensorOneM::from_entries(n, n, 2, std::move(e), false);
          h.max_symmetry_defect =
              std::max(h.max_symmetry_defect, t.input_symmetry_defect());
          t.symmetrize_inputs();
          h.stt2.push_back(std::move(t));
        }
        if (order >= 3) {
          std::vector<double> e(y.begin() + off3, y.end());
          TensorOneM t = TensorOneM::from_entries(n, n, 3, std::move(e), false);
          h.max_symmetry_defect =
              std::max(h.max_symmetry_defect, t.input_symmetry_defect());
          t.symmetrize_inputs();
          h.stt3.push_back(std::move(t));
        }
      });
  return h;
}

Eigen::VectorXd propagate_perturbation_stt(const SttHistory& h, int k,
                                           const Eigen::VectorXd& dx0, int m) {
  check_epoch(h, k);
  if (m < 1 || m > h.order) {
    throw std::invalid_argument("expansion order exceeds stored order");
  }
  if (static_cast<int>(dx0.size()) != h.state_dim) {
    throw DimensionError("perturbation dimension mismatch");
  }
  Eigen::VectorXd dx = h.stm[k] * dx0;
  if (m >= 2) {
    dx += 0.5 * contract_full(h.stt2[k], dx0);
  }
  if (m >= 3) {
    dx += (1.0 / 6.0) * contract_full(h.stt3[k], dx0);
  }
  return dx;
}

Eigen::VectorXd propagate_perturbation_r1(const SttHistory& h, int k,
                                          const Eigen::VectorXd& dx0,
                                          const Rank1Factors& f2,
                                          const Rank1Factors* f3) {
  check_epoch(h, k);
  if (static_cast<int>(dx0.size()) != h.state_dim) {
    throw DimensionError("perturbation dimension mismatch");
  }
  if (f2.order != 2 || (f3 && f3->order != 3)) {
    throw std::invalid_argument("factor order mismatch");
  }
  if (f2.epoch >= 0 && f2.epoch != k) {
    throw std::invalid_argument("second-order factors built at another epoch");
  }
  if (f3 && f3->epoch >= 0 && f3->epoch != k) {
    throw std::invalid_argument("third-order factors built at another epoch");
  }
  Eigen::VectorXd dx = h.stm[k] * dx0;
  double s2 = f2.v.dot(dx0);
  dx += (0.5 * s2 * s2) * f2.u;
  if (f3) {
    double s3 = f3->v.dot(dx0);
    dx += (s3 * s3 * s3 / 6.0) * f3->u;
  }
  return dx;
}

namespace {

void write_times_csv(const SttHistory& h, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) {
    throw IoError("cannot open " + path + " for writing");
  }
  std::fprintf(f, "epoch,time\n");
  for (std::size_t k = 0; k < h.epochs(); ++k) {
    std::fprintf(f, "%zu,%.16e\n", k, h.times[k]);
  }
  std::fclose(f);
}

TensorOneM as_column_tensor(const Eigen::VectorXd& x) {
  std::vector<double> e(x.data(), x.data() + x.size());
  return TensorOneM::from_entries(static_cast<int>(x.size()), 1, 1,
                                  std::move(e), false);
}

TensorOneM as_matrix_tensor(const Eigen::MatrixXd& m) {
  TensorOneM t(static_cast<int>(m.rows()), static_cast<int>(m.cols()), 1);
  Eigen::Map<RowMatrixXd>(t.data(), m.rows(), m.cols()) = m;
  return t;
}

}  // namespace

void save_history_epoch_csv(const SttHistory& h, int k,
                            const std::string& dir) {
  check_epoch(h, k);
  std::filesystem::create_directories(dir);
  const std::string tag = std::to_string(k);
  dump_csv(as_column_tensor(h.states[k]), dir + "/state_" + tag + ".csv");
  dump_csv(as_matrix_tensor(h.stm[k]), dir + "/stm_" + tag + ".csv");
  if (h.order >= 2) {
    dump_csv(h.stt2[k], dir + "/stt2_" + tag + ".csv");
  }
  if (h.order >= 3) {
    dump_csv(h.stt3[k], dir + "/stt3_" + tag + ".csv");
  }
}

void save_history_csv(const SttHistory& h, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_times_csv(h, dir + "/times.csv");
  for (std::size_t k = 0; k < h.epochs(); ++k) {
    save_history_epoch_csv(h, static_cast<int>(k), dir);
  }
}

}  // namespace dstt
