#include "dsttkit/jet.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "dsttkit/errors.hpp"

namespace dstt {

namespace {

void append_monomials(int nvars, int var, int remaining,
                      std::array<std::uint8_t, 8>& cur,
                      std::vector<std::array<std::uint8_t, 8>>& out) {
  if (var == nvars - 1) {
    cur[var] = static_cast<std::uint8_t>(remaining);
    out.push_back(cur);
    cur[var] = 0;
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    cur[var] = static_cast<std::uint8_t>(e);
    append_monomials(nvars, var + 1, remaining - e, cur, out);
  }
  cur[var] = 0;
}

std::uint32_t pack_key(std::span<const std::uint8_t> exps) {
  std::uint32_t key = 0;
  for (std::size_t v = 0; v < exps.size(); ++v)
    key |= static_cast<std::uint32_t>(exps[v]) << (2 * v);
  return key;
}

double fact(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

}  // namespace

MonomialTable::MonomialTable(int nvars, int order)
    : nvars_(nvars), order_(order) {
  if (nvars < 1 || nvars > 8) throw DimensionError("jet nvars out of range");
  if (order < 1 || order > 3) throw DimensionError("jet order must be 1..3");

  std::array<std::uint8_t, 8> cur{};
  deg_offset_.push_back(0);
  for (int d = 0; d <= order; ++d) {
    append_monomials(nvars, 0, d, cur, exps_);
    deg_offset_.push_back(static_cast<int>(exps_.size()));
    while (static_cast<int>(deg_.size()) < static_cast<int>(exps_.size()))
      deg_.push_back(d);
  }

  factorial_.resize(exps_.size());
  for (std::size_t i = 0; i < exps_.size(); ++i) {
    double f = 1.0;
    for (int v = 0; v < nvars; ++v) f *= fact(exps_[i][v]);
    factorial_[i] = f;
  }

  std::vector<int> lookup(std::size_t{1} << (2 * nvars), -1);
  for (std::size_t i = 0; i < exps_.size(); ++i)
    lookup[pack_key(exponents(static_cast<int>(i)))] = static_cast<int>(i);

  const int n = count();
  product_.assign(static_cast<std::size_t>(n) * n, -1);
  for (int ia = 0; ia < n; ++ia)
    for (int ib = 0; ib < n; ++ib) {
      if (deg_[ia] + deg_[ib] > order) continue;
      const std::uint32_t key = pack_key(exponents(ia)) + pack_key(exponents(ib));
      product_[static_cast<std::size_t>(ia) * n + ib] = lookup[key];
    }
}

const MonomialTable& MonomialTable::get(int nvars, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<MonomialTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{nvars, order}];
  if (!slot) slot.reset(new MonomialTable(nvars, order));
  return *slot;
}

TaylorJet::TaylorJet(int nvars, int order, double constant)
    : tab_(&MonomialTable::get(nvars, order)),
      coeffs_(tab_->count(), 0.0) {
  coeffs_[0] = constant;
}

std::vector<TaylorJet> TaylorJet::seed(const Eigen::VectorXd& values,
                                       int order) {
  const int n = static_cast<int>(values.size());
  std::vector<TaylorJet> jets;
  jets.reserve(n);
  for (int i = 0; i < n; ++i) {
    TaylorJet j(n, order, values[i]);
    j.coeffs_[j.tab_->variable_index(i)] = 1.0;
    jets.push_back(std::move(j));
  }
  return jets;
}

namespace {
void check_compatible(const TaylorJet& a, const TaylorJet& b) {
  if (a.nvars() != b.nvars() || a.order() != b.order())
    throw DimensionError("jet shape mismatch");
}
}  // namespace

TaylorJet& TaylorJet::operator+=(const TaylorJet& rhs) {
  check_compatible(*this, rhs);
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    coeffs_[i] += rhs.coeffs_[i];
  return *this;
}

TaylorJet& TaylorJet::operator-=(const TaylorJet& rhs) {
  check_compatible(*this, rhs);
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    coeffs_[i] -= rhs.coeffs_[i];
  return *this;
}

TaylorJet& TaylorJet::operator+=(double c) {
  coeffs_[0] += c;
  return *this;
}

TaylorJet& TaylorJet::operator-=(double c) {
  coeffs_[0] -= c;
  return *this;
}

TaylorJet& TaylorJet::operator*=(double c) {
  for (double& v : coeffs_) v *= c;
  return *this;
}

TaylorJet& TaylorJet::operator/=(double c) { return *this *= 1.0 / c; }

TaylorJet& TaylorJet::operator*=(const TaylorJet& rhs) {
  *this = *this * rhs;
  return *this;
}

TaylorJet& TaylorJet::operator/=(const TaylorJet& rhs) {
  *this = *this / rhs;
  return *this;
}

TaylorJet TaylorJet::operator-() const {
  TaylorJet r = *this;
  for (double& v : r.coeffs_) v = -v;
  return r;
}

TaylorJet operator*(const TaylorJet& a, const TaylorJet& b) {
  check_compatible(a, b);
  const MonomialTable& tab = *a.tab_;
  TaylorJet r(tab.nvars(), tab.order(), 0.0);
  const int K = tab.order();
  for (int da = 0; da <= K; ++da) {
    const int ia0 = tab.degree_offset(da);
    const int ia1 = ia0 + tab.degree_count(da);
    const int ib1 = tab.degree_offset(K - da) + tab.degree_count(K - da);
    for (int ia = ia0; ia < ia1; ++ia) {
      const double ca = a.coeffs_[ia];
      if (ca == 0.0) continue;
      for (int ib = 0; ib < ib1; ++ib)
        r.coeffs_[tab.product_index(ia, ib)] += ca * b.coeffs_[ib];
    }
  }
  return r;
}

TaylorJet TaylorJet::compose(const TaylorJet& g,
                             const std::array<double, 4>& c) {
  TaylorJet ghat = g;
  ghat.coeffs_[0] = 0.0;
  TaylorJet r(g.nvars(), g.order(), c[3]);
  r = r * ghat;
  r += c[2];
  r = r * ghat;
  r += c[1];
  r = r * ghat;
  r += c[0];
  return r;
}

TaylorJet reciprocal(const TaylorJet& g) {
  const double g0 = g.value();
  if (g0 == 0.0)
    throw std::domain_error("jet division by zero constant term");
  const double inv = 1.0 / g0;
  return TaylorJet::compose(
      g, {inv, -inv * inv, inv * inv * inv, -inv * inv * inv * inv});
}

TaylorJet operator/(const TaylorJet& a, const TaylorJet& b) {
  return a * reciprocal(b);
}

TaylorJet operator/(double a, const TaylorJet& b) {
  TaylorJet r = reciprocal(b);
  return r *= a;
}

TaylorJet sin(const TaylorJet& g) {
  const double s = std::sin(g.value());
  const double c = std::cos(g.value());
  return TaylorJet::compose(g, {s, c, -s / 2.0, -c / 6.0});
}

TaylorJet cos(const TaylorJet& g) {
  const double s = std::sin(g.value());
  const double c = std::cos(g.value());
  return TaylorJet::compose(g, {c, -s, -c / 2.0, s / 6.0});
}

TaylorJet tan(const TaylorJet& g) { return sin(g) / cos(g); }

TaylorJet sqrt(const TaylorJet& g) {
  const double g0 = g.value();
  if (g0 <= 0.0)
    throw std::domain_error("jet sqrt of non-positive constant term");
  const double s = std::sqrt(g0);
  return TaylorJet::compose(
      g, {s, 0.5 / s, -1.0 / (8.0 * s * g0), 1.0 / (16.0 * s * g0 * g0)});
}

TaylorJet exp(const TaylorJet& g) {
  const double e = std::exp(g.value());
  return TaylorJet::compose(g, {e, e, e / 2.0, e / 6.0});
}

TaylorJet log(const TaylorJet& g) {
  const double g0 = g.value();
  if (g0 <= 0.0)
    throw std::domain_error("jet log of non-positive constant term");
  const double inv = 1.0 / g0;
  return TaylorJet::compose(
      g, {std::log(g0), inv, -inv * inv / 2.0, inv * inv * inv / 3.0});
}

TaylorJet pow(const TaylorJet& g, double p) {
  const double g0 = g.value();
  if (g0 <= 0.0)
    throw std::domain_error("jet pow requires positive constant term");
  std::array<double, 4> c{};
  double coef = 1.0;
  for (int k = 0; k <= 3; ++k) {
    c[k] = coef * std::pow(g0, p - k) / fact(k);
    coef *= (p - k);
  }
  return TaylorJet::compose(g, c);
}

TaylorJet pow(const TaylorJet& g, int p) {
  if (p < 0) return reciprocal(pow(g, -p));
  TaylorJet r(g.nvars(), g.order(), 1.0);
  for (int k = 0; k < p; ++k) r = r * g;
  return r;
}

StatePartials extract_partials(std::span<const TaylorJet> jets_out,
                               int upto_order) {
  if (jets_out.empty()) throw DimensionError("extract_partials: no jets");
  const MonomialTable& tab = jets_out[0].table();
  const int n = static_cast<int>(jets_out.size());
  const int nv = tab.nvars();
  if (upto_order < 1 || upto_order > tab.order())
    throw DimensionError("extract_partials: jet order too low");

  StatePartials out;
  out.a1.setZero(n, nv);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nv; ++j)
      out.a1(i, j) = jets_out[i].coeff(tab.variable_index(j));

  if (upto_order >= 2) {
    out.a2 = TensorOneM(n, nv, 2);
    const int i0 = tab.degree_offset(2);
    const int i1 = i0 + tab.degree_count(2);
    for (int idx = i0; idx < i1; ++idx) {
      const auto e = tab.exponents(idx);
      int vars[2], w = 0;
      for (int v = 0; v < nv; ++v)
        for (int r = 0; r < e[v]; ++r) vars[w++] = v;
      for (int i = 0; i < n; ++i) {
        const double raw = jets_out[i].coeff(idx) * tab.factorial(idx);
        out.a2.at(i, vars[0], vars[1]) = raw;
        out.a2.at(i, vars[1], vars[0]) = raw;
      }
    }
  }

  if (upto_order >= 3) {
    out.a3 = TensorOneM(n, nv, 3);
    const int i0 = tab.degree_offset(3);
    const int i1 = i0 + tab.degree_count(3);
    static constexpr int kPerm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                        {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int idx = i0; idx < i1; ++idx) {
      const auto e = tab.exponents(idx);
      int vars[3], w = 0;
      for (int v = 0; v < nv; ++v)
        for (int r = 0; r < e[v]; ++r) vars[w++] = v;
      for (int i = 0; i < n; ++i) {
        const double raw = jets_out[i].coeff(idx) * tab.factorial(idx);
        for (const auto& p : kPerm)
          out.a3.at(i, vars[p[0]], vars[p[1]], vars[p[2]]) = raw;
      }
    }
  }
  return out;
}

StatePartials extract_partials(std::span<const TaylorJet> jets_out) {
  if (jets_out.empty()) throw DimensionError("extract_partials: no jets");
  return extract_partials(jets_out, jets_out[0].order());
}

}  // namespace dstt
