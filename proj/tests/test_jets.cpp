#include <doctest.h>

#include <cmath>

#include "dsttkit/errors.hpp"
#include "dsttkit/jet.hpp"
#include "dsttkit/rng.hpp"

using dstt::MonomialTable;
using dstt::TaylorJet;
using Eigen::VectorXd;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd x(static_cast<int>(v.size()));
  int i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

TaylorJet random_jet(int nvars, int order, dstt::Philox& rng,
                     double constant) {
  auto jets = TaylorJet::seed(rng.normal_vector(nvars), order);
  TaylorJet g(nvars, order, constant);
  for (int i = 0; i < nvars; ++i) g += rng.normal() * jets[i];
  TaylorJet quad = jets[0] * jets[nvars - 1];
  return g + 0.1 * quad;
}

}  // namespace

TEST_SUITE("jets") {

TEST_CASE("graded lexicographic monomial ordering") {
  const MonomialTable& tab = MonomialTable::get(2, 2);
  CHECK(tab.count() == 6);
  // (), x, y, x^2, xy, y^2
  const int expect[6][2] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  for (int i = 0; i < 6; ++i) {
    auto e = tab.exponents(i);
    CHECK(e[0] == expect[i][0]);
    CHECK(e[1] == expect[i][1]);
  }
  CHECK(MonomialTable::get(7, 3).count() == 120);
  CHECK(MonomialTable::get(6, 3).count() == 84);
}

TEST_CASE("seeding") {
  auto j = TaylorJet::seed(vec({3.0}), 2);
  TaylorJet f = j[0] * j[0];
  CHECK(f.coeff(0) == 9.0);
  CHECK(f.coeff(1) == 6.0);
  CHECK(f.coeff(2) == 1.0);

  auto j2 = TaylorJet::seed(vec({0.0, 0.0}), 1);
  TaylorJet g = j2[0] * j2[1];
  CHECK(g.coeff(0) == 0.0);
  CHECK(g.coeff(1) == 0.0);
  CHECK(g.coeff(2) == 0.0);

  auto j3 = TaylorJet::seed(vec({1.0, 2.0}), 2);
  TaylorJet h = j3[0] * j3[1];
  dstt::StatePartials p =
      dstt::extract_partials(std::span<const TaylorJet>(&h, 1), 2);
  CHECK(h.value() == 2.0);
  CHECK(p.a1(0, 0) == 2.0);
  CHECK(p.a1(0, 1) == 1.0);
  CHECK(p.a2.at(0, 0, 1) == 1.0);
  CHECK(p.a2.at(0, 1, 0) == 1.0);
  CHECK(p.a2.at(0, 0, 0) == 0.0);
  CHECK(p.a2.at(0, 1, 1) == 0.0);
}

TEST_CASE("elementary functions") {
  auto j = TaylorJet::seed(vec({0.0}), 3);
  TaylorJet e = exp(j[0]);
  CHECK(e.coeff(0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.coeff(1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(e.coeff(2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(e.coeff(3) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

  dstt::Philox rng(31, 0);
  TaylorJet g = random_jet(3, 3, rng, 0.4);
  TaylorJet ident = sin(g) * sin(g) + cos(g) * cos(g);
  CHECK(ident.coeff(0) == doctest::Approx(1.0).epsilon(1e-14));
  for (int i = 1; i < ident.table().count(); ++i)
    CHECK(std::abs(ident.coeff(i)) <= 1e-14);
}

TEST_CASE("reciprocal third derivative vs finite differences") {
  auto j = TaylorJet::seed(vec({2.0}), 3);
  TaylorJet r = 1.0 / j[0];
  auto p = dstt::extract_partials(std::span<const TaylorJet>(&r, 1), 3);
  CHECK(p.a3.at(0, 0, 0, 0) == doctest::Approx(-6.0 / 16.0).epsilon(1e-12));

  // Central third difference of 1/x at x=2, Richardson extrapolated.
  auto d3 = [](double h) {
    auto f = [](double x) { return 1.0 / x; };
    return (f(2 + 2 * h) - 2 * f(2 + h) + 2 * f(2 - h) - f(2 - 2 * h)) /
           (2 * h * h * h);
  };
  const double coarse = d3(1e-2), fine = d3(5e-3);
  const double richardson = fine + (fine - coarse) / 3.0;
  CHECK(p.a3.at(0, 0, 0, 0) == doctest::Approx(richardson).epsilon(1e-7));
}

TEST_CASE("division, sqrt, pow consistency") {
  dstt::Philox rng(32, 0);
  TaylorJet a = random_jet(4, 3, rng, 1.3);
  TaylorJet b = random_jet(4, 3, rng, -0.7);
  TaylorJet back = (a / b) * b;
  for (int i = 0; i < a.table().count(); ++i)
    CHECK(back.coeff(i) == doctest::Approx(a.coeff(i)).epsilon(1e-13));

  TaylorJet g = random_jet(3, 3, rng, 2.1);
  TaylorJet s = sqrt(g);
  TaylorJet s2 = s * s;
  for (int i = 0; i < g.table().count(); ++i)
    CHECK(s2.coeff(i) == doctest::Approx(g.coeff(i)).epsilon(1e-13));

  TaylorJet p2 = pow(g, 2.0);
  TaylorJet gg = g * g;
  for (int i = 0; i < g.table().count(); ++i)
    CHECK(p2.coeff(i) == doctest::Approx(gg.coeff(i)).epsilon(1e-13));

  TaylorJet p3 = pow(g, 3);
  TaylorJet ggg = gg * g;
  for (int i = 0; i < g.table().count(); ++i)
    CHECK(p3.coeff(i) == doctest::Approx(ggg.coeff(i)).epsilon(1e-13));

  TaylorJet tn = tan(g);
  TaylorJet lhs = tn * cos(g);
  TaylorJet rhs = sin(g);
  for (int i = 0; i < g.table().count(); ++i)
    CHECK(lhs.coeff(i) == doctest::Approx(rhs.coeff(i)).epsilon(1e-13));
}

TEST_CASE("domain errors") {
  auto j = TaylorJet::seed(vec({0.0, 1.0}), 2);
  CHECK_THROWS_AS(1.0 / j[0], std::domain_error);
  CHECK_THROWS_AS(j[1] / j[0], std::domain_error);
  auto neg = TaylorJet::seed(vec({-1.0}), 2);
  CHECK_THROWS_AS(log(neg[0]), std::domain_error);
  CHECK_THROWS_AS(sqrt(neg[0]), std::domain_error);
  auto zero = TaylorJet::seed(vec({0.0}), 2);
  CHECK_THROWS_AS(sqrt(zero[0]), std::domain_error);
}

TEST_CASE("extract_partials on linear and quadratic maps") {
  Eigen::MatrixXd A(2, 2);
  A << 1.5, -2.0, 0.25, 3.0;
  auto j = TaylorJet::seed(vec({0.3, -0.8}), 3);
  std::vector<TaylorJet> F{A(0, 0) * j[0] + A(0, 1) * j[1],
                           A(1, 0) * j[0] + A(1, 1) * j[1]};
  auto p = dstt::extract_partials(F);
  CHECK((p.a1 - A).norm() <= 1e-15);
  CHECK(dstt::frobenius_norm(p.a2) == 0.0);
  CHECK(dstt::frobenius_norm(p.a3) == 0.0);

  auto js = TaylorJet::seed(vec({3.0}), 3);
  TaylorJet f = js[0] * js[0];
  auto ps = dstt::extract_partials(std::span<const TaylorJet>(&f, 1));
  CHECK(ps.a1(0, 0) == 6.0);
  CHECK(ps.a2.at(0, 0, 0) == 2.0);
  CHECK(ps.a3.at(0, 0, 0, 0) == 0.0);

  CHECK_THROWS_AS(
      dstt::extract_partials(std::span<const TaylorJet>(js.data(), 1), 4),
      dstt::DimensionError);
}

TEST_CASE("partial tensors are input-symmetric") {
  dstt::Philox rng(33, 0);
  auto j = TaylorJet::seed(rng.normal_vector(3), 3);
  // Deliberately lopsided polynomial map.
  std::vector<TaylorJet> F{j[0] * j[1] * j[2] + sin(j[0]),
                           exp(0.3 * j[1]) * j[0], j[2] * j[2] * j[0]};
  auto p = dstt::extract_partials(F);
  CHECK(p.a2.is_input_symmetric(1e-14));
  CHECK(p.a3.is_input_symmetric(1e-14));
}

}  // TEST_SUITE
