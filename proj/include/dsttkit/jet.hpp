#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dsttkit/tensor.hpp"

namespace dstt {

// Shared bookkeeping for truncated multivariate polynomials in nvars
// variables up to total degree `order`. Monomials are stored in graded
// lexicographic order: ascending total degree, then lexicographic on the
// exponent tuple read left to right. Tables are cached per (nvars, order).
class MonomialTable {
 public:
  static const MonomialTable& get(int nvars, int order);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  int count() const { return static_cast<int>(exps_.size()); }
  int degree_offset(int d) const { return deg_offset_[d]; }
  int degree_count(int d) const {
    return deg_offset_[d + 1] - deg_offset_[d];
  }
  std::span<const std::uint8_t> exponents(int idx) const {
    return {exps_[idx].data(), static_cast<std::size_t>(nvars_)};
  }
  int degree(int idx) const { return deg_[idx]; }
  // Index of the monomial x_var (total degree 1).
  int variable_index(int var) const { return 1 + var; }
  // Index of the product monomial, or -1 when the degree exceeds `order`.
  int product_index(int ia, int ib) const {
    return product_[static_cast<std::size_t>(ia) * count() + ib];
  }
  // alpha! for the multi-index, used to turn Taylor coefficients into raw
  // partial derivatives.
  double factorial(int idx) const { return factorial_[idx]; }

 private:
  MonomialTable(int nvars, int order);
  int nvars_, order_;
  std::vector<std::array<std::uint8_t, 8>> exps_;
  std::vector<int> deg_;
  std::vector<int> deg_offset_;
  std::vector<int> product_;
  std::vector<double> factorial_;
};

// Truncated multivariate Taylor polynomial (value plus partials to order K).
// Arithmetic and the elementary functions propagate coefficients exactly to
// the truncation order.
class TaylorJet {
 public:
  TaylorJet() = default;
  TaylorJet(int nvars, int order, double constant = 0.0);

  // Jet i carries value values[i] and unit linear coefficient on variable i.
  static std::vector<TaylorJet> seed(const Eigen::VectorXd& values, int order);

  int nvars() const { return tab_ ? tab_->nvars() : 0; }
  int order() const { return tab_ ? tab_->order() : 0; }
  double value() const { return coeffs_.empty() ? 0.0 : coeffs_[0]; }
  std::span<const double> coeffs() const { return coeffs_; }
  double coeff(int idx) const { return coeffs_[idx]; }
  const MonomialTable& table() const { return *tab_; }

  TaylorJet& operator+=(const TaylorJet& rhs);
  TaylorJet& operator-=(const TaylorJet& rhs);
  TaylorJet& operator+=(double c);
  TaylorJet& operator-=(double c);
  TaylorJet& operator*=(double c);
  TaylorJet& operator/=(double c);
  TaylorJet& operator*=(const TaylorJet& rhs);
  TaylorJet& operator/=(const TaylorJet& rhs);
  TaylorJet operator-() const;

  friend TaylorJet operator+(TaylorJet a, const TaylorJet& b) { return a += b; }
  friend TaylorJet operator-(TaylorJet a, const TaylorJet& b) { return a -= b; }
  friend TaylorJet operator+(TaylorJet a, double b) { return a += b; }
  friend TaylorJet operator-(TaylorJet a, double b) { return a -= b; }
  friend TaylorJet operator+(double a, TaylorJet b) { return b += a; }
  friend TaylorJet operator-(double a, const TaylorJet& b) {
    TaylorJet r = -b;
    return r += a;
  }
  friend TaylorJet operator*(TaylorJet a, double b) { return a *= b; }
  friend TaylorJet operator*(double a, TaylorJet b) { return b *= a; }
  friend TaylorJet operator/(TaylorJet a, double b) { return a /= b; }
  friend TaylorJet operator*(const TaylorJet& a, const TaylorJet& b);
  friend TaylorJet operator/(const TaylorJet& a, const TaylorJet& b);
  friend TaylorJet operator/(double a, const TaylorJet& b);

  friend TaylorJet sin(const TaylorJet& g);
  friend TaylorJet cos(const TaylorJet& g);
  friend TaylorJet tan(const TaylorJet& g);
  friend TaylorJet sqrt(const TaylorJet& g);
  friend TaylorJet exp(const TaylorJet& g);
  friend TaylorJet log(const TaylorJet& g);
  friend TaylorJet pow(const TaylorJet& g, double p);
  friend TaylorJet pow(const TaylorJet& g, int p);
  friend TaylorJet reciprocal(const TaylorJet& g);

 private:
  // Truncated composition c0 + c1 ghat + c2 ghat^2 + c3 ghat^3 where ghat is
  // g minus its constant term and c_p = f^(p)(g0)/p!.
  static TaylorJet compose(const TaylorJet& g, const std::array<double, 4>& c);
  const MonomialTable* tab_ = nullptr;
  std::vector<double> coeffs_;
};

// Raw partial-derivative tensors of a vector field evaluated along seeded
// jets: a1(i,j) = dF_i/dx_j, a2 and a3 the symmetric second and third
// partials. a2/a3 are empty (order() == 0) when not requested.
struct StatePartials {
  Eigen::MatrixXd a1;
  TensorOneM a2;
  TensorOneM a3;
};

StatePartials extract_partials(std::span<const TaylorJet> jets_out,
                               int upto_order);
StatePartials extract_partials(std::span<const TaylorJet> jets_out);

}  // namespace dstt
