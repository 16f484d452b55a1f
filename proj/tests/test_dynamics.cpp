#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "dsttkit/dynamics.hpp"
#include "dsttkit/errors.hpp"
#include "dsttkit/jet.hpp"
#include "test_util.hpp"

using namespace dstt;

namespace {

using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

Eigen::VectorXd apply_rhs(const DynamicsModel& m, const Eigen::VectorXd& x) {
  Eigen::VectorXd dx(m.dim());
  m.rhs(0.0, {x.data(), static_cast<std::size_t>(x.size())},
        {dx.data(), static_cast<std::size_t>(dx.size())});
  return dx;
}

VecFn rhs_fn(const DynamicsModel& m) {
  return [&m](const Eigen::VectorXd& x) { return apply_rhs(m, x); };
}

StatePartials jet_partials(const DynamicsModel& m, const Eigen::VectorXd& x,
                           int order) {
  std::vector<TaylorJet> in = TaylorJet::seed(x, order);
  std::vector<TaylorJet> out(m.dim());
  m.rhs_jets(0.0, in, out);
  return extract_partials(out, order);
}

Eigen::MatrixXd fd_jacobian(const VecFn& f, Eigen::VectorXd x, double h) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd a(f0.size(), n);
  for (int j = 0; j < n; ++j) {
    x[j] += h;
    Eigen::VectorXd fp = f(x);
    x[j] -= 2.0 * h;
    Eigen::VectorXd fm = f(x);
    x[j] += h;
    a.col(j) = (fp - fm) / (2.0 * h);
  }
  return a;
}

TensorOneM fd_hessian(const VecFn& f, Eigen::VectorXd x, double h) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd f0 = f(x);
  const int nf = static_cast<int>(f0.size());
  TensorOneM t(nf, n, 2);
  auto shift1 = [&](int j, double sj) {
    Eigen::VectorXd y = x;
    y[j] += sj * h;
    return f(y);
  };
  auto shifted = [&](int j, double sj, int k, double sk) {
    Eigen::VectorXd y = x;
    y[j] += sj * h;
    y[k] += sk * h;
    return f(y);
  };
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd d = (shift1(j, 1) - 2.0 * f0 + shift1(j, -1)) / (h * h);
    for (int i = 0; i < nf; ++i) t.at(i, j, j) = d[i];
    for (int k = j + 1; k < n; ++k) {
      Eigen::VectorXd m = (shifted(j, 1, k, 1) - shifted(j, 1, k, -1) -
                           shifted(j, -1, k, 1) + shifted(j, -1, k, -1)) /
                          (4.0 * h * h);
      for (int i = 0; i < nf; ++i) {
        t.at(i, j, k) = m[i];
        t.at(i, k, j) = m[i];
      }
    }
  }
  return t;
}

TensorOneM fd_third(const VecFn& f, Eigen::VectorXd x, double h) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd f0 = f(x);
  const int nf = static_cast<int>(f0.size());
  TensorOneM t(nf, n, 3);
  auto at_offset = [&](std::initializer_list<std::pair<int, double>> moves) {
    Eigen::VectorXd y = x;
    for (auto [j, s] : moves) y[j] += s * h;
    return f(y);
  };
  auto set_sym = [&](int a, int b, int c, const Eigen::VectorXd& v) {
    int idx[3] = {a, b, c};
    std::sort(idx, idx + 3);
    do {
      for (int i = 0; i < nf; ++i) t.at(i, idx[0], idx[1], idx[2]) = v[i];
    } while (std::next_permutation(idx, idx + 3));
  };
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd pure = (at_offset({{j, 2}}) - 2.0 * at_offset({{j, 1}}) +
                            2.0 * at_offset({{j, -1}}) - at_offset({{j, -2}})) /
                           (2.0 * h * h * h);
    set_sym(j, j, j, pure);
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      // d^3 f / dx_j^2 dx_k via a second difference in j nested inside a
      // central difference in k
      Eigen::VectorXd v =
          ((at_offset({{j, 1}, {k, 1}}) - 2.0 * at_offset({{k, 1}}) +
            at_offset({{j, -1}, {k, 1}})) -
           (at_offset({{j, 1}, {k, -1}}) - 2.0 * at_offset({{k, -1}}) +
            at_offset({{j, -1}, {k, -1}}))) /
          (2.0 * h * h * h);
      set_sym(j, j, k, v);
      for (int l = k + 1; l < n; ++l) {
        if (l == j) continue;
        Eigen::VectorXd w = Eigen::VectorXd::Zero(nf);
        for (int sj = -1; sj <= 1; sj += 2)
          for (int sk = -1; sk <= 1; sk += 2)
            for (int sl = -1; sl <= 1; sl += 2)
              w += (sj * sk * sl) *
                   at_offset({{j, double(sj)}, {k, double(sk)}, {l, double(sl)}});
        w /= 8.0 * h * h * h;
        set_sym(j, k, l, w);
      }
    }
  }
  return t;
}

double scaled_max_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

double scaled_max_diff(const TensorOneM& a, const TensorOneM& b) {
  double scale = 1.0, diff = 0.0;
  for (std::size_t q = 0; q < b.size(); ++q) {
    scale = std::max(scale, std::abs(b.data()[q]));
    diff = std::max(diff, std::abs(a.data()[q] - b.data()[q]));
  }
  return diff / scale;
}

AerocaptureParams vacuum_params() {
  AerocaptureParams p = testutil::uranus_params();
  p.omega_planet = 0.0;
  p.j2 = 0.0;
  return p;
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("point mass gravity rates at reference states") {
  TwoBodyParams p;  // mu = 1
  StateVector x{Eigen::VectorXd(6), Frame::nondimensional};
  x.values << 1, 0, 0, 0, 1, 0;
  StateVector dx = eval_two_body(x, p);
  CHECK(dx.values[0] == 0.0);
  CHECK(dx.values[1] == 1.0);
  CHECK(dx.values[2] == 0.0);
  CHECK(dx.values[3] == -1.0);
  CHECK(dx.values[4] == 0.0);
  CHECK(dx.values[5] == 0.0);

  x.values << 0, 0, 2, 0, 0, 0;
  dx = eval_two_body(x, p);
  CHECK(dx.values[3] == 0.0);
  CHECK(dx.values[4] == 0.0);
  CHECK(dx.values[5] == doctest::Approx(-0.25).epsilon(1e-15));

  x.values << 1, 0, 0, 0, 1, 0;
  std::span<const double> xs{x.values.data(), 6};
  CHECK(two_body_energy(xs, 1.0) == doctest::Approx(-0.5).epsilon(1e-15));
  Eigen::Vector3d hm = two_body_angular_momentum(xs);
  CHECK(hm[0] == 0.0);
  CHECK(hm[1] == 0.0);
  CHECK(hm[2] == 1.0);
}

TEST_CASE("rotating frame equilibria and degenerate reduced mass") {
  const double mu = testutil::halo_mu_star();

  // Collinear equilibrium between the primaries by bisection
  auto accel_x = [&](double x) {
    return x - (1.0 - mu) / ((x + mu) * (x + mu)) +
           mu / ((x - 1.0 + mu) * (x - 1.0 + mu));
  };
  double lo = 0.5, hi = 1.0 - mu - 1e-3;
  REQUIRE(accel_x(lo) * accel_x(hi) < 0.0);
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (accel_x(lo) * accel_x(mid) <= 0.0 ? hi : lo) = mid;
  }
  double xl1 = 0.5 * (lo + hi);
  CHECK(xl1 > 0.8);
  CHECK(xl1 < 0.9);

  Cr3bpParams p{mu};
  StateVector eq{Eigen::VectorXd(6), Frame::nondimensional};
  eq.values << xl1, 0, 0, 0, 0, 0;
  StateVector deq = eval_cr3bp(eq, p);
  CHECK(deq.values.cwiseAbs().maxCoeff() < 1e-10);

  // Zero reduced mass: any fixed point on the unit circle is an equilibrium
  Cr3bpParams zero{0.0};
  StateVector circ{Eigen::VectorXd(6), Frame::nondimensional};
  circ.values << 0, 1, 0, 0, 0, 0;
  CHECK(eval_cr3bp(circ, zero).values.cwiseAbs().maxCoeff() == 0.0);
  circ.values << -1, 0, 0, 0, 0, 0;
  CHECK(eval_cr3bp(circ, zero).values.cwiseAbs().maxCoeff() == 0.0);

  // Zero reduced mass equals the rotating-frame point-mass problem
  StateVector s{Eigen::VectorXd(6), Frame::nondimensional};
  s.values << 0.3, -0.4, 0.2, 0.1, -0.2, 0.05;
  StateVector dr = eval_cr3bp(s, zero);
  StateVector dk = eval_two_body(s, TwoBodyParams{1.0});
  CHECK(dr.values[3] ==
        doctest::Approx(dk.values[3] + 2.0 * s.values[4] + s.values[0])
            .epsilon(1e-14));
  CHECK(dr.values[4] ==
        doctest::Approx(dk.values[4] - 2.0 * s.values[3] + s.values[1])
            .epsilon(1e-14));
  CHECK(dr.values[5] == doctest::Approx(dk.values[5]).epsilon(1e-14));
}

TEST_CASE("atmospheric flight rates in reduced configurations") {
  AerocaptureParams p = vacuum_params();
  p.lift_to_drag = 0.25;
  AerocaptureModel model(p);
  const AerocaptureScales& sc = model.scales();

  // Level flight freezes radius and log-density
  StateVector x{Eigen::VectorXd(7), Frame::nondimensional};
  x.values << 1.02, 0.4, -0.17, 1.6, 0.0, 0.8, -0.6;
  StateVector dx = eval_aerocapture(x, p);
  CHECK(dx.values[0] == 0.0);
  CHECK(dx.values[6] == 0.0);

  // Spherical gravity, no rotation: rates from the reduced closed form
  x.values << 1.04, 0.4, -0.17, 1.6, -0.18, 0.8, -0.53;
  dx = eval_aerocapture(x, p);
  double r = x.values[0], ph = x.values[2], v = x.values[3];
  double ga = x.values[4], ps = x.values[5], z = x.values[6];
  double rho = std::exp(sc.mref * z);
  double drag = 0.5 * sc.drag_const * rho * v * v;
  double lift = sc.lift_to_drag * drag;
  CHECK(dx.values[0] ==
        doctest::Approx(v * std::sin(ga)).epsilon(1e-14));
  CHECK(dx.values[1] ==
        doctest::Approx(v * std::cos(ga) * std::sin(ps) /
                        (r * std::cos(ph)))
            .epsilon(1e-14));
  CHECK(dx.values[2] ==
        doctest::Approx(v * std::cos(ga) * std::cos(ps) / r).epsilon(1e-14));
  CHECK(dx.values[3] ==
        doctest::Approx(-drag - std::sin(ga) / (r * r)).epsilon(1e-14));
  CHECK(dx.values[4] ==
        doctest::Approx((lift * sc.cos_bank +
                         (v * v / r - 1.0 / (r * r)) * std::cos(ga)) /
                        v)
            .epsilon(1e-14));
  CHECK(dx.values[5] ==
        doctest::Approx((lift * sc.sin_bank / std::cos(ga) +
                         v * v / r * std::cos(ga) * std::sin(ps) *
                             std::tan(ph)) /
                        v)
            .epsilon(1e-14));
  CHECK(dx.values[6] ==
        doctest::Approx(-v * std::sin(ga) / (sc.mref * sc.scale_height_nd))
            .epsilon(1e-14));

  // Normalized density equals one at the reference normalization constant
  double z_ref = std::log(p.mref_over_Rp3) / sc.mref;
  CHECK(std::exp(sc.mref * z_ref) / p.mref_over_Rp3 ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("nondimensional scale constants") {
  AerocaptureScales sc = AerocaptureScales::from(testutil::uranus_params());
  CHECK(sc.g0_km_s2 == doctest::Approx(8.8692358255915201e-3).epsilon(1e-12));
  CHECK(sc.velocity_km_s ==
        doctest::Approx(15.056188045660617).epsilon(1e-12));
  CHECK(sc.time_s == doctest::Approx(1697.5744406544143).epsilon(1e-12));
  CHECK(sc.omega_nd == doctest::Approx(0.17185734364853095).epsilon(1e-12));
  CHECK(sc.drag_const == doctest::Approx(25559000.0 / 145.0).epsilon(1e-15));
  CHECK(sc.scale_height_nd ==
        doctest::Approx(54.72 / 25559.0).epsilon(1e-15));
}

TEST_CASE("unit conversion round trips") {
  // Circular orbit in canonical units
  double du = testutil::kLeoRadiusKm;
  double tu = std::sqrt(du * du * du / testutil::kEarthMuKm3S2);
  TwoBodyModel tb(1.0, du, tu);
  StateVector dim{Eigen::VectorXd(6), Frame::dimensional};
  double vc = std::sqrt(testutil::kEarthMuKm3S2 / du);
  dim.values << du, 0, 0, 0, vc, 0;
  StateVector nd = tb.nondimensionalize(dim);
  CHECK(nd.frame == Frame::nondimensional);
  CHECK(nd.values[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(nd.values[4] == doctest::Approx(1.0).epsilon(1e-15));
  StateVector back = tb.dimensionalize(nd);
  for (int i = 0; i < 6; ++i) {
    CHECK(back.values[i] ==
          doctest::Approx(dim.values[i]).epsilon(1e-14));
  }
  CHECK_THROWS_AS((void)tb.nondimensionalize(nd), std::invalid_argument);
  CHECK_THROWS_AS((void)tb.dimensionalize(dim), std::invalid_argument);

  // Entry state: scaled and recovered, altitude and speed reproduced
  AerocaptureParams p = testutil::uranus_params();
  AerocaptureModel am(p);
  StateVector entry = testutil::entry_state_dimensional(p);
  StateVector en = am.nondimensionalize(entry);
  CHECK(en.values[0] ==
        doctest::Approx((p.radius_planet + 1000.0) / p.radius_planet)
            .epsilon(1e-15));
  CHECK(en.values[3] ==
        doctest::Approx(24.93 / am.scales().velocity_km_s).epsilon(1e-15));
  CHECK(en.values[6] ==
        doctest::Approx(entry.values[6] / 20.0).epsilon(1e-15));
  StateVector eback = am.dimensionalize(en);
  CHECK(eback.values[0] - p.radius_planet ==
        doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(eback.values[3] == doctest::Approx(24.93).epsilon(1e-14));
  for (int i = 0; i < 7; ++i) {
    CHECK(eback.values[i] ==
          doctest::Approx(entry.values[i]).epsilon(1e-14));
  }
}

TEST_CASE("jet evaluation reproduces plain evaluation exactly") {
  AerocaptureParams ap = testutil::uranus_params();
  AerocaptureModel aero(ap);
  TwoBodyModel tb;
  Cr3bpModel cr(Cr3bpParams{testutil::halo_mu_star()});

  Eigen::VectorXd xt(6);
  xt << 1.02, 0.11, -0.18, 0.21, 0.93, 0.05;
  Eigen::VectorXd xc = testutil::halo_state();
  Eigen::VectorXd xa =
      aero.nondimensionalize(testutil::entry_state_dimensional(ap)).values;

  const DynamicsModel* models[] = {&tb, &cr, &aero};
  const Eigen::VectorXd* states[] = {&xt, &xc, &xa};
  for (int c = 0; c < 3; ++c) {
    const DynamicsModel& m = *models[c];
    const Eigen::VectorXd& x = *states[c];
    Eigen::VectorXd dx = apply_rhs(m, x);

    std::vector<TaylorJet> seeded = TaylorJet::seed(x, 3);
    std::vector<TaylorJet> out(m.dim());
    m.rhs_jets(0.0, seeded, out);
    for (int i = 0; i < m.dim(); ++i) {
      CHECK(out[i].value() == dx[i]);
    }

    // Constant-only jets stay constant through the flow field
    std::vector<TaylorJet> consts;
    for (int i = 0; i < m.dim(); ++i) {
      consts.emplace_back(m.dim(), 2, x[i]);
    }
    m.rhs_jets(0.0, consts, out);
    for (int i = 0; i < m.dim(); ++i) {
      CHECK(out[i].value() == dx[i]);
      auto cf = out[i].coeffs();
      for (std::size_t q = 1; q < cf.size(); ++q) {
        CHECK(cf[q] == 0.0);
      }
    }
  }
}

TEST_CASE("jet partial derivatives agree with finite differences") {
  AerocaptureParams ap = testutil::uranus_params();
  AerocaptureModel aero(ap);
  TwoBodyModel tb;
  Cr3bpModel cr(Cr3bpParams{testutil::halo_mu_star()});

  Eigen::VectorXd xt(6);
  xt << 1.02, 0.11, -0.18, 0.21, 0.93, 0.05;
  Eigen::VectorXd xc = testutil::halo_state();
  Eigen::VectorXd xa =
      aero.nondimensionalize(testutil::entry_state_dimensional(ap)).values;

  const DynamicsModel* models[] = {&tb, &cr, &aero};
  const Eigen::VectorXd* states[] = {&xt, &xc, &xa};
  for (int c = 0; c < 3; ++c) {
    const DynamicsModel& m = *models[c];
    const Eigen::VectorXd& x = *states[c];
    std::string model_name = m.name();
    CAPTURE(model_name);
    StatePartials sp = jet_partials(m, x, 3);
    VecFn f = rhs_fn(m);

    CHECK(scaled_max_diff(fd_jacobian(f, x, 1e-5), sp.a1) < 1e-7);
    CHECK(scaled_max_diff(fd_hessian(f, x, 1e-4), sp.a2) < 1e-4);
    CHECK(scaled_max_diff(fd_third(f, x, 1e-3), sp.a3) < 1e-2);
  }

  // Second-order convergence of the central difference toward the jet value
  StatePartials sp = jet_partials(tb, xt, 1);
  double e1 = scaled_max_diff(fd_jacobian(rhs_fn(tb), xt, 1e-2), sp.a1);
  double e2 = scaled_max_diff(fd_jacobian(rhs_fn(tb), xt, 5e-3), sp.a1);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 5.5);
}

TEST_CASE("domain guards and argument validation") {
  TwoBodyModel tb;
  Eigen::VectorXd origin = Eigen::VectorXd::Zero(6);
  CHECK_THROWS_AS(
      tb.check_domain({origin.data(), 6}), IntegrationError);
  Eigen::VectorXd bad = Eigen::VectorXd::Ones(6);
  bad[2] = std::nan("");
  CHECK_THROWS_AS(tb.check_domain({bad.data(), 6}), IntegrationError);

  Cr3bpModel cr(Cr3bpParams{0.012});
  Eigen::VectorXd at_primary(6);
  at_primary << 1.0 - 0.012, 0, 0, 0, 0, 0;
  CHECK_THROWS_AS(cr.check_domain({at_primary.data(), 6}), IntegrationError);

  AerocaptureModel aero(testutil::uranus_params());
  Eigen::VectorXd below(7);
  below << 0.99, 0, 0, 1.0, 0, 0, -1.0;
  CHECK_THROWS_AS(aero.check_domain({below.data(), 7}), IntegrationError);
  Eigen::VectorXd dive(7);
  dive << 1.05, 0, 0, 1.0, -1.58, 0, -1.0;
  CHECK_THROWS_AS(aero.check_domain({dive.data(), 7}), IntegrationError);

  StateVector five{Eigen::VectorXd::Ones(5), Frame::nondimensional};
  CHECK_THROWS_AS((void)eval_two_body(five, TwoBodyParams{}),
                  DimensionError);
  StateVector dim6{Eigen::VectorXd::Ones(6), Frame::dimensional};
  CHECK_THROWS_AS((void)eval_cr3bp(dim6, Cr3bpParams{0.01}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Cr3bpModel(Cr3bpParams{0.6}), std::invalid_argument);
  CHECK_THROWS_AS(Cr3bpModel(Cr3bpParams{-0.1}), std::invalid_argument);
  AerocaptureParams nop;
  CHECK_THROWS_AS(AerocaptureScales::from(nop), std::invalid_argument);
}

}  // TEST_SUITE
