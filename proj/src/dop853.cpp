#include "dsttkit/dop853.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsttkit/errors.hpp"

namespace dstt {
namespace {

constexpr double kEps = 2.220446049250313e-16;

// Node coefficients
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;
constexpr double c14 = 0.1e+00;
constexpr double c15 = 0.2e+00;
constexpr double c16 = 0.777777777777777777777777777778e+00;

// Runge-Kutta matrix
constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

// Additional stages for dense output
constexpr double a141 = 5.61675022830479523392909219681e-2;
constexpr double a147 = 2.53500210216624811088794765333e-1;
constexpr double a148 = -2.46239037470802489917441475441e-1;
constexpr double a149 = -1.24191423263816360469010140626e-1;
constexpr double a1410 = 1.5329179827876569731206322685e-1;
constexpr double a1411 = 8.20105229563468988491666602057e-3;
constexpr double a1412 = 7.56789766054569976138603589584e-3;
constexpr double a1413 = -8.298e-3;
constexpr double a151 = 3.18346481635021405060768473261e-2;
constexpr double a156 = 2.83009096723667755288322961402e-2;
constexpr double a157 = 5.35419883074385676223797384372e-2;
constexpr double a158 = -5.49237485713909884646569340306e-2;
constexpr double a1511 = -1.08347328697249322858509316994e-4;
constexpr double a1512 = 3.82571090835658412954920192323e-4;
constexpr double a1513 = -3.40465008687404560802977114492e-4;
constexpr double a1514 = 1.41312443674632500278074618366e-1;
constexpr double a161 = -4.28896301583791923408573538692e-1;
constexpr double a166 = -4.69762141536116384314449447206e0;
constexpr double a167 = 7.68342119606259904184240953878e0;
constexpr double a168 = 4.06898981839711007970213554331e0;
constexpr double a169 = 3.56727187455281109270669543021e-1;
constexpr double a1613 = -1.39902416515901462129418009734e-3;
constexpr double a1614 = 2.9475147891527723389556272149e0;
constexpr double a1615 = -9.15095847217987001081870187138e0;

// Weight coefficients
constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

// Third-order error coefficients
constexpr double e31 = 0.244094488188976377952755905512e+00;
constexpr double e32 = 0.733846688281611857341361741547e+00;
constexpr double e33 = 0.220588235294117647058823529412e-01;

// Fifth-order error coefficients
constexpr double e51 = 0.1312004499419488073250102996e-01;
constexpr double e56 = -0.1225156446376204440720569753e+01;
constexpr double e57 = -0.4957589496572501915214079952e+00;
constexpr double e58 = 0.1664377182454986536961530415e+01;
constexpr double e59 = -0.3503288487499736816886487290e+00;
constexpr double e510 = 0.3341791187130174790297318841e+00;
constexpr double e511 = 0.8192320648511571246570742613e-01;
constexpr double e512 = -0.2235530786388629525884427845e-01;

// Interpolation coefficients
constexpr double d41 = -0.84289382761090128651353491142e+01;
constexpr double d46 = 0.56671495351937776962531783590e+00;
constexpr double d47 = -0.30689499459498916912797304727e+01;
constexpr double d48 = 0.23846676565120698287728149680e+01;
constexpr double d49 = 0.21170345824450282767155149946e+01;
constexpr double d410 = -0.87139158377797299206789907490e+00;
constexpr double d411 = 0.22404374302607882758541771650e+01;
constexpr double d412 = 0.63157877876946881815570249290e+00;
constexpr double d413 = -0.88990336451333310820698117400e-01;
constexpr double d414 = 0.18148505520854727256656404962e+02;
constexpr double d415 = -0.91946323924783554000451984436e+01;
constexpr double d416 = -0.44360363875948939664310572000e+01;
constexpr double d51 = 0.10427508642579134603413151009e+02;
constexpr double d56 = 0.24228349177525818288430175319e+03;
constexpr double d57 = 0.16520045171727028198505394887e+03;
constexpr double d58 = -0.37454675472269020279518312152e+03;
constexpr double d59 = -0.22113666853125306036270938578e+02;
constexpr double d510 = 0.77334326684722638389603898808e+01;
constexpr double d511 = -0.30674084731089398182061213626e+02;
constexpr double d512 = -0.93321305264302278729567221706e+01;
constexpr double d513 = 0.15697238121770843886131091075e+02;
constexpr double d514 = -0.31139403219565177677282850411e+02;
constexpr double d515 = -0.93529243588444783865713862664e+01;
constexpr double d516 = 0.35816841486394083752465898540e+02;
constexpr double d61 = 0.19985053242002433820987653617e+02;
constexpr double d66 = -0.38703730874935176555105901742e+03;
constexpr double d67 = -0.18917813819516756882830838328e+03;
constexpr double d68 = 0.52780815920542364900561016686e+03;
constexpr double d69 = -0.11573902539959630126141871134e+02;
constexpr double d610 = 0.68812326946963000169666922661e+01;
constexpr double d611 = -0.10006050966910838403183860980e+01;
constexpr double d612 = 0.77771377980534432092869265740e+00;
constexpr double d613 = -0.27782057523535084065932004339e+01;
constexpr double d614 = -0.60196695231264120758267380846e+02;
constexpr double d615 = 0.84320405506677161018159903784e+02;
constexpr double d616 = 0.11992291136182789328035130030e+02;
constexpr double d71 = -0.25693933462703749003312586129e+02;
constexpr double d76 = -0.15418974869023643374053993627e+03;
constexpr double d77 = -0.23152937917604549567536039109e+03;
constexpr double d78 = 0.35763911791061412378285349910e+03;
constexpr double d79 = 0.93405324183624310003907691704e+02;
constexpr double d710 = -0.37458323136451633156875139351e+02;
constexpr double d711 = 0.10409964950896230045147246184e+03;
constexpr double d712 = 0.29840293426660503123344363579e+02;
constexpr double d713 = -0.43533456590011143754432175058e+02;
constexpr double d714 = 0.96324553959188282948394950600e+02;
constexpr double d715 = -0.39177261675615439165231486172e+02;
constexpr double d716 = -0.14972683625798562581422125276e+03;

// Step size controller parameters
constexpr double kAlpha = 0.125;
constexpr double kSafe = 0.9;
constexpr double kMinScale = 0.333;
constexpr double kMaxScale = 6.0;

}  // namespace

Dop853::Dop853(Rhs rhs, int dim, OdeSettings settings)
    : rhs_(std::move(rhs)), dim_(dim), s_(settings) {
  if (dim_ <= 0) {
    throw DimensionError("state dimension must be positive");
  }
  if (!(s_.rel_tol > 0.0) || !(s_.abs_tol > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
}

void Dop853::eval(double t, std::span<const double> y, std::span<double> dy) {
  ++evals_;
  rhs_(t, y, dy);
}

double Dop853::initial_step_size(double, std::span<const double> y,
                                 std::span<const double> f0) const {
  double err = 0.0;
  for (int i = 0; i < dim_; ++i) {
    double sci = s_.abs_tol + s_.rel_tol * std::abs(y[i]);
    double ei = f0[i] / sci;
    err += ei * ei;
  }
  if (!(err > 0.0) || !std::isfinite(err)) {
    return std::numeric_limits<double>::infinity();
  }
  return std::pow(err / dim_, -0.0625);
}

void Dop853::integrate(double t0, std::span<const double> y0,
                       std::span<const double> samples, const Sink& sink) {
  const int n = dim_;
  if (static_cast<int>(y0.size()) != n) {
    throw DimensionError("initial state dimension mismatch");
  }
  if (samples.empty()) {
    return;
  }
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    if (!(samples[i] <= samples[i + 1])) {
      throw std::invalid_argument("sample grid must be ascending");
    }
  }
  if (samples.front() < t0) {
    throw std::invalid_argument("sample grid starts before initial time");
  }

  std::vector<double> yy(y0.begin(), y0.end());
  std::vector<double> yyp(n), yw(n), yw2(n), ywp(n);
  std::vector<double> k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), k8(n), k9(n),
      k10(n);
  std::vector<double> r1(n), r2(n), r3(n), r4(n), r5(n), r6(n), r7(n), r8(n);

  std::size_t next = 0;
  while (next < samples.size() && samples[next] <= t0) {
    sink(next, samples[next], yy);
    ++next;
  }
  if (next == samples.size()) {
    return;
  }

  const double tf = samples.back();
  const double t_slack = 4.0 * kEps * std::max(1.0, std::abs(tf));
  double tt = t0;
  eval(tt, yy, yyp);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(yyp[i])) {
      throw IntegrationError("non-finite derivative at initial state");
    }
  }

  double hh =
      s_.initial_step > 0.0 ? s_.initial_step : initial_step_size(tt, yy, yyp);
  if (s_.max_step > 0.0) {
    hh = std::min(hh, s_.max_step);
  }
  hh = std::min(hh, tf - tt);

  bool last_rejected = false;
  for (long step = 0;; ++step) {
    if (step >= s_.max_steps) {
      throw IntegrationError("step limit exceeded at t=" + std::to_string(tt));
    }
    if (!(hh > 4.0 * kEps * std::max(1.0, std::abs(tt)))) {
      throw IntegrationError("step size underflow at t=" + std::to_string(tt));
    }
    const double h = hh;

    // Twelve-stage core; stages 11 and 12 reuse the k2 and k3 slots, and k4
    // ends up holding the weighted sum of slopes for the eighth-order result.
    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a21 * yyp[i]);
    eval(tt + c2 * h, yw, k2);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a31 * yyp[i] + a32 * k2[i]);
    eval(tt + c3 * h, yw, k3);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a41 * yyp[i] + a43 * k3[i]);
    eval(tt + c4 * h, yw, k4);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a51 * yyp[i] + a53 * k3[i] + a54 * k4[i]);
    eval(tt + c5 * h, yw, k5);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a61 * yyp[i] + a64 * k4[i] + a65 * k5[i]);
    eval(tt + c6 * h, yw, k6);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a71 * yyp[i] + a74 * k4[i] + a75 * k5[i] +
                           a76 * k6[i]);
    eval(tt + c7 * h, yw, k7);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a81 * yyp[i] + a84 * k4[i] + a85 * k5[i] +
                           a86 * k6[i] + a87 * k7[i]);
    eval(tt + c8 * h, yw, k8);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a91 * yyp[i] + a94 * k4[i] + a95 * k5[i] +
                           a96 * k6[i] + a97 * k7[i] + a98 * k8[i]);
    eval(tt + c9 * h, yw, k9);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a101 * yyp[i] + a104 * k4[i] + a105 * k5[i] +
                           a106 * k6[i] + a107 * k7[i] + a108 * k8[i] +
                           a109 * k9[i]);
    eval(tt + c10 * h, yw, k10);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a111 * yyp[i] + a114 * k4[i] + a115 * k5[i] +
                           a116 * k6[i] + a117 * k7[i] + a118 * k8[i] +
                           a119 * k9[i] + a1110 * k10[i]);
    eval(tt + c11 * h, yw, k2);

    for (int i = 0; i < n; ++i)
      yw[i] = yy[i] + h * (a121 * yyp[i] + a124 * k4[i] + a125 * k5[i] +
                           a126 * k6[i] + a127 * k7[i] + a128 * k8[i] +
                           a129 * k9[i] + a1210 * k10[i] + a1211 * k2[i]);
    eval(tt + h, yw, k3);

    for (int i = 0; i < n; ++i) {
      k4[i] = b1 * yyp[i] + b6 * k6[i] + b7 * k7[i] + b8 * k8[i] +
              b9 * k9[i] + b10 * k10[i] + b11 * k2[i] + b12 * k3[i];
      yw[i] = yy[i] + h * k4[i];
    }

    // Blended fifth/third order error estimate
    double err3 = 0.0;
    double err5 = 0.0;
    for (int i = 0; i < n; ++i) {
      double sci =
          s_.abs_tol + s_.rel_tol * std::max(std::abs(yy[i]), std::abs(yw[i]));
      double e3i = (k4[i] - e31 * yyp[i] - e32 * k9[i] - e33 * k3[i]) / sci;
      double e5i = (e51 * yyp[i] + e56 * k6[i] + e57 * k7[i] + e58 * k8[i] +
                    e59 * k9[i] + e510 * k10[i] + e511 * k2[i] +
                    e512 * k3[i]) /
                   sci;
      err3 += e3i * e3i;
      err5 += e5i * e5i;
    }
    double denom = err5 + 0.01 * err3;
    if (denom <= 0.0) {
      denom = 1.0;
    }
    double err = h * err5 * std::sqrt(1.0 / (n * denom));

    if (!std::isfinite(err)) {
      hh = h * kMinScale;
      last_rejected = true;
      ++rejected_;
      continue;
    }
    if (err >= 1.0) {
      hh = h * std::max(kSafe * std::pow(err, -kAlpha), kMinScale);
      last_rejected = true;
      ++rejected_;
      continue;
    }

    ++accepted_;
    double scale = err == 0.0
                       ? kMaxScale
                       : std::clamp(kSafe * std::pow(err, -kAlpha), kMinScale,
                                    kMaxScale);
    if (last_rejected) {
      scale = std::min(scale, 1.0);
    }
    last_rejected = false;

    const double tb = tt + h;
    eval(tb, yw, ywp);
    const bool final_step = tb + t_slack >= tf;

    if (next < samples.size() && (final_step || samples[next] <= tb)) {
      // Three extra stages for the seventh-order interpolant
      for (int i = 0; i < n; ++i) {
        r1[i] = yy[i];
        r2[i] = yw[i] - yy[i];
        r3[i] = h * yyp[i] - r2[i];
        r4[i] = r2[i] - h * ywp[i] - r3[i];
        r5[i] = d41 * yyp[i] + d46 * k6[i] + d47 * k7[i] + d48 * k8[i] +
                d49 * k9[i] + d410 * k10[i] + d411 * k2[i] + d412 * k3[i];
        r6[i] = d51 * yyp[i] + d56 * k6[i] + d57 * k7[i] + d58 * k8[i] +
                d59 * k9[i] + d510 * k10[i] + d511 * k2[i] + d512 * k3[i];
        r7[i] = d61 * yyp[i] + d66 * k6[i] + d67 * k7[i] + d68 * k8[i] +
                d69 * k9[i] + d610 * k10[i] + d611 * k2[i] + d612 * k3[i];
        r8[i] = d71 * yyp[i] + d76 * k6[i] + d77 * k7[i] + d78 * k8[i] +
                d79 * k9[i] + d710 * k10[i] + d711 * k2[i] + d712 * k3[i];
      }
      for (int i = 0; i < n; ++i)
        yw2[i] = yy[i] + h * (a141 * yyp[i] + a147 * k7[i] + a148 * k8[i] +
                              a149 * k9[i] + a1410 * k10[i] + a1411 * k2[i] +
                              a1412 * k3[i] + a1413 * ywp[i]);
      eval(tt + c14 * h, yw2, k10);
      for (int i = 0; i < n; ++i)
        yw2[i] = yy[i] + h * (a151 * yyp[i] + a156 * k6[i] + a157 * k7[i] +
                              a158 * k8[i] + a1511 * k2[i] + a1512 * k3[i] +
                              a1513 * ywp[i] + a1514 * k10[i]);
      eval(tt + c15 * h, yw2, k2);
      for (int i = 0; i < n; ++i)
        yw2[i] = yy[i] + h * (a161 * yyp[i] + a166 * k6[i] + a167 * k7[i] +
                              a168 * k8[i] + a169 * k9[i] + a1613 * ywp[i] +
                              a1614 * k10[i] + a1615 * k2[i]);
      eval(tt + c16 * h, yw2, k3);
      for (int i = 0; i < n; ++i) {
        r5[i] = h * (r5[i] + d413 * ywp[i] + d414 * k10[i] + d415 * k2[i] +
                     d416 * k3[i]);
        r6[i] = h * (r6[i] + d513 * ywp[i] + d514 * k10[i] + d515 * k2[i] +
                     d516 * k3[i]);
        r7[i] = h * (r7[i] + d613 * ywp[i] + d614 * k10[i] + d615 * k2[i] +
                     d616 * k3[i]);
        r8[i] = h * (r8[i] + d713 * ywp[i] + d714 * k10[i] + d715 * k2[i] +
                     d716 * k3[i]);
      }

      while (next < samples.size() && (final_step || samples[next] <= tb)) {
        double s = std::clamp((samples[next] - tt) / h, 0.0, 1.0);
        double s1 = 1.0 - s;
        for (int i = 0; i < n; ++i) {
          double q6 = r7[i] + s * r8[i];
          double q5 = r6[i] + q6 * s1;
          double q4 = r5[i] + q5 * s;
          double q3 = r4[i] + q4 * s1;
          double q2 = r3[i] + q3 * s;
          double q1 = r2[i] + q2 * s1;
          yw2[i] = r1[i] + s * q1;
        }
        sink(next, samples[next], yw2);
        ++next;
      }
    }
    if (next == samples.size()) {
      return;
    }

    tt = tb;
    std::swap(yy, yw);
    std::swap(yyp, ywp);
    hh = h * scale;
    if (s_.max_step > 0.0) {
      hh = std::min(hh, s_.max_step);
    }
    hh = std::min(hh, tf - tt);
  }
}

std::vector<double> Dop853::integrate_to(double t0, std::span<const double> y0,
                                         double tf) {
  std::vector<double> out(y0.begin(), y0.end());
  const double samples[1] = {tf};
  integrate(t0, y0, samples,
            [&](std::size_t, double, std::span<const double> y) {
              std::copy(y.begin(), y.end(), out.begin());
            });
  return out;
}

}  // namespace dstt
