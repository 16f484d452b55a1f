#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dstt {

using RowMatrixXd =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense (1,m)-tensor: one output index (dimension nout) and m input indices
// (dimension nin each), stored row-major with the output index slowest:
// offset(i; j1..jm) = ((i*nin + j1)*nin + j2)*nin + ...
// Entries are kept symmetric under permutation of the input indices.
class TensorOneM {
 public:
  TensorOneM() = default;
  TensorOneM(int n, int m) : TensorOneM(n, n, m) {}
  TensorOneM(int nout, int nin, int m);

  // Adopts a flat entry array (layout above). Symmetrizes the input indices
  // unless the caller asks for the raw values.
  static TensorOneM from_entries(int nout, int nin, int m,
                                 std::vector<double> entries,
                                 bool symmetrize = true);

  int nout() const { return nout_; }
  int nin() const { return nin_; }
  int order() const { return m_; }
  std::size_t size() const { return entries_.size(); }

  double* data() { return entries_.data(); }
  const double* data() const { return entries_.data(); }
  std::span<const double> entries() const { return entries_; }

  double& at(int i, int a);
  double& at(int i, int a, int b);
  double& at(int i, int a, int b, int c);
  double at(int i, int a) const;
  double at(int i, int a, int b) const;
  double at(int i, int a, int b, int c) const;

  // View as nout x nin^m matrix (output index = row).
  Eigen::Map<const RowMatrixXd> as_matrix() const;
  Eigen::Map<RowMatrixXd> as_matrix();

  // Only for nin == 1: the tensor is a column of length nout.
  Eigen::VectorXd as_vector() const;

  void symmetrize_inputs();
  // Largest absolute difference between entries related by a permutation of
  // the input indices; 0 for m == 1.
  double input_symmetry_defect() const;
  bool is_input_symmetric(double tol = 1e-12) const;
  bool all_finite() const;

  TensorOneM& operator+=(const TensorOneM& rhs);
  TensorOneM& operator-=(const TensorOneM& rhs);
  TensorOneM& operator*=(double s);
  friend TensorOneM operator+(TensorOneM a, const TensorOneM& b) { return a += b; }
  friend TensorOneM operator-(TensorOneM a, const TensorOneM& b) { return a -= b; }
  friend TensorOneM operator*(TensorOneM a, double s) { return a *= s; }
  friend TensorOneM operator*(double s, TensorOneM a) { return a *= s; }

 private:
  int nout_ = 0;
  int nin_ = 0;
  int m_ = 0;
  std::vector<double> entries_;
};

double frobenius_inner(const TensorOneM& a, const TensorOneM& b);
double frobenius_norm(const TensorOneM& a);

// entries_{i;j1..jm} = u_i v_{j1} ... v_{jm}
TensorOneM rank1_outer(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       int m);

// (A x^m)_i = A_{i;j1..jm} x_{j1} ... x_{jm}
Eigen::VectorXd contract_full(const TensorOneM& a, const Eigen::VectorXd& x);

// M_{i,j} = A_{i; j, x, .., x} with m-1 copies of x in the trailing slots.
Eigen::MatrixXd contract_all_but_one_input(const TensorOneM& a,
                                           const Eigen::VectorXd& x);

// Applies R (k x nin) to every input slot:
// out_{i; g1..gm} = A_{i; k1..km} R_{g1,k1} ... R_{gm,km}
TensorOneM change_basis(const TensorOneM& a, const Eigen::MatrixXd& r);

// Flat CSV rows (i, j1..jm, value), 1-based indices, 17 significant digits.
void dump_csv(const TensorOneM& a, const std::string& path);
TensorOneM load_csv(const std::string& path, int nout, int nin, int m);

// Fully symmetric even-order tensor, materialized. Test-oracle companion for
// the implicit "square" used by the eigensolver; not used in hot paths.
class SymmetricEvenTensor {
 public:
  SymmetricEvenTensor(int dim, int order);

  // sym(phi^T phi): entries_{j1..jm,k1..km} = sum_i phi_{i;j..} phi_{i;k..},
  // then symmetrized over all 2m indices.
  static SymmetricEvenTensor square_of(const TensorOneM& phi);

  int dim() const { return n_; }
  int order() const { return order_; }
  std::span<const double> entries() const { return entries_; }
  double& at(std::span<const int> idx);
  double at(std::span<const int> idx) const;

  // Full contraction against x in every slot.
  double value(const Eigen::VectorXd& x) const;
  // Contraction leaving the first slot free.
  Eigen::VectorXd contract_all_but_first(const Eigen::VectorXd& x) const;

  void symmetrize();
  double symmetry_defect() const;

 private:
  std::size_t offset(std::span<const int> idx) const;
  int n_ = 0;
  int order_ = 0;
  std::vector<double> entries_;
};

}  // namespace dstt
