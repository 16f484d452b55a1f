#include "dsttkit/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "dsttkit/errors.hpp"

namespace dstt {

namespace {

using nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;

[[noreturn]] void fail(const std::string& msg) {
  throw ConfigError("config: " + msg);
}

double positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    fail(what + " must be positive");
  }
  return v;
}

Eigen::VectorXd parse_vector(const json& arr, int n, const std::string& what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != n) {
    fail(what + " must be an array of " + std::to_string(n) + " numbers");
  }
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = arr[i].get<double>();
  }
  return v;
}

Frame parse_frame(const json& state) {
  std::string f = state.value("frame", std::string("nondimensional"));
  if (f == "dimensional") return Frame::dimensional;
  if (f == "nondimensional") return Frame::nondimensional;
  fail("initial_state.frame must be dimensional or nondimensional");
}

void parse_integrator(const json& j, IntegratorSettings& s) {
  if (j.contains("integrator")) {
    const json& b = j.at("integrator");
    s.rel_tol = b.value("rel_tol", s.rel_tol);
    s.abs_tol = b.value("abs_tol", s.abs_tol);
    s.max_step = b.value("max_step_nd", s.max_step);
  }
  if (!(s.rel_tol > 0.0) || s.rel_tol > 1e-3 || !(s.abs_tol > 0.0) ||
      s.abs_tol > 1e-3) {
    fail("integrator tolerances must lie in (0, 1e-3]");
  }
  if (s.max_step < 0.0) {
    fail("integrator.max_step_nd must be nonnegative");
  }
}

void parse_eigensolver(const json& j, EigenSolverSettings& s) {
  if (j.contains("eigensolver")) {
    const json& b = j.at("eigensolver");
    std::string mode = b.value("shift_mode", std::string("reduced"));
    if (mode == "reduced") {
      s.shift_mode = ShiftMode::reduced;
    } else if (mode == "conservative") {
      s.shift_mode = ShiftMode::conservative;
    } else {
      fail("eigensolver.shift_mode must be reduced or conservative");
    }
    s.restarts = b.value("restarts", s.restarts);
    s.tol = b.value("tol", s.tol);
    s.max_iter = b.value("max_iter", s.max_iter);
  }
  if (s.restarts < 0 || s.max_iter < 1 || !(s.tol > 0.0)) {
    fail("eigensolver settings out of range");
  }
}

void parse_model_params(const json& j, ScenarioConfig& cfg) {
  if (cfg.model == "two_body") {
    const json& b = j.at("two_body");
    if (b.contains("mu_km3_s2")) {
      double mu_km = positive(b.at("mu_km3_s2").get<double>(), "mu_km3_s2");
      double du = positive(b.at("distance_unit_km").get<double>(),
                           "distance_unit_km");
      cfg.two_body.mu = 1.0;
      cfg.two_body_du_km = du;
      cfg.two_body_tu_s = std::sqrt(du * du * du / mu_km);
    } else {
      cfg.two_body.mu = positive(b.value("mu_nd", 1.0), "mu_nd");
      cfg.two_body_du_km = 1.0;
      cfg.two_body_tu_s = 1.0;
    }
    return;
  }
  if (cfg.model == "cr3bp") {
    const json& b = j.at("cr3bp");
    if (b.contains("mass_ratio")) {
      double ratio = positive(b.at("mass_ratio").get<double>(), "mass_ratio");
      cfg.cr3bp.mu_star = 1.0 / (ratio + 1.0);
    } else {
      cfg.cr3bp.mu_star = b.at("mu_star").get<double>();
    }
    return;
  }
  const json& b = j.at("aerocapture");
  AerocaptureParams& p = cfg.aero;
  p.lift_to_drag = b.at("lift_to_drag").get<double>();
  p.ballistic_coeff =
      positive(b.at("ballistic_coeff_kg_m2").get<double>(), "ballistic_coeff");
  p.bank_angle_deg = b.at("bank_angle_deg").get<double>();
  p.omega_planet = b.at("omega_rad_s").get<double>();
  p.radius_planet = positive(b.at("radius_km").get<double>(), "radius_km");
  p.mu_planet = positive(b.at("mu_km3_s2").get<double>(), "mu_km3_s2");
  p.j2 = b.at("j2").get<double>();
  p.rho0 = positive(b.at("rho0_kg_m3").get<double>(), "rho0_kg_m3");
  p.h0 = b.at("h0_km").get<double>();
  p.scale_height = positive(b.at("scale_height_km").get<double>(),
                            "scale_height_km");
  p.mref_over_Rp3 =
      positive(b.at("ln_density_scale").get<double>(), "ln_density_scale");
}

StateVector parse_initial_state(const json& j, const ScenarioConfig& cfg,
                                const DynamicsModel& model) {
  const json& st = j.at("initial_state");
  if (cfg.model == "aerocapture" && !st.contains("values")) {
    // Named entry-interface form, always dimensional. The log-density
    // follows from the exponential atmosphere at the given altitude.
    const AerocaptureParams& p = cfg.aero;
    double h = st.at("altitude_km").get<double>();
    Eigen::VectorXd x(7);
    x[0] = p.radius_planet + h;
    x[1] = st.at("longitude_deg").get<double>() * kDegToRad;
    x[2] = st.at("latitude_deg").get<double>() * kDegToRad;
    x[3] = st.at("velocity_km_s").get<double>();
    x[4] = st.at("flight_path_angle_deg").get<double>() * kDegToRad;
    x[5] = st.at("heading_deg").get<double>() * kDegToRad;
    x[6] = std::log(p.rho0) + (p.h0 - h) / p.scale_height;
    return model.nondimensionalize({x, Frame::dimensional});
  }
  StateVector s;
  s.values = parse_vector(st.at("values"), model.dim(), "initial_state.values");
  s.frame = parse_frame(st);
  if (s.frame == Frame::dimensional) {
    if (cfg.model == "cr3bp") {
      fail("cr3bp initial states must be given in synodic units");
    }
    s = model.nondimensionalize(s);
  }
  return s;
}

double dimensional_time_scale(const ScenarioConfig& cfg) {
  if (cfg.model == "two_body") {
    return cfg.two_body_tu_s;
  }
  if (cfg.model == "aerocapture") {
    return AerocaptureScales::from(cfg.aero).time_s;
  }
  fail("model " + cfg.model + " has no dimensional time scale");
}

std::vector<double> parse_grid(const json& j, const ScenarioConfig& cfg) {
  const json& g = j.at("grid");
  std::vector<double> times;
  if (g.contains("times_nd")) {
    const json& arr = g.at("times_nd");
    if (!arr.is_array() || arr.empty()) {
      fail("grid.times_nd must be a nonempty array");
    }
    for (const json& t : arr) {
      times.push_back(t.get<double>());
    }
  } else if (g.contains("stop_nd")) {
    double stop = positive(g.at("stop_nd").get<double>(), "grid.stop_nd");
    long n = g.at("intervals").get<long>();
    if (n < 1) fail("grid.intervals must be at least 1");
    for (long i = 0; i <= n; ++i) {
      times.push_back(stop * static_cast<double>(i) / static_cast<double>(n));
    }
  } else if (g.contains("stop_s")) {
    double stop = positive(g.at("stop_s").get<double>(), "grid.stop_s");
    double step = positive(g.at("step_s").get<double>(), "grid.step_s");
    long n = std::lround(stop / step);
    if (n < 1 || std::abs(static_cast<double>(n) * step - stop) >
                     1e-9 * std::max(1.0, stop)) {
      fail("grid.step_s must divide grid.stop_s evenly");
    }
    double scale = dimensional_time_scale(cfg);
    for (long i = 0; i <= n; ++i) {
      times.push_back(static_cast<double>(i) * step / scale);
    }
  } else if (g.contains("periods")) {
    if (cfg.model != "two_body") {
      fail("grid.periods is only defined for the two_body model");
    }
    double periods = positive(g.at("periods").get<double>(), "grid.periods");
    long spp = g.at("samples_per_period").get<long>();
    if (spp < 1) fail("grid.samples_per_period must be at least 1");
    double mu = cfg.two_body.mu;
    double r = cfg.x0_nd.values.head(3).norm();
    double v2 = cfg.x0_nd.values.tail(3).squaredNorm();
    double inv_a = 2.0 / r - v2 / mu;
    if (!(inv_a > 0.0)) {
      fail("grid.periods needs a closed orbit");
    }
    double a = 1.0 / inv_a;
    double period = 2.0 * std::numbers::pi * std::sqrt(a * a * a / mu);
    long n = std::lround(periods * static_cast<double>(spp));
    double stop = periods * period;
    for (long i = 0; i <= n; ++i) {
      times.push_back(stop * static_cast<double>(i) / static_cast<double>(n));
    }
  } else {
    fail("grid needs times_nd, stop_nd, stop_s, or periods");
  }

  if (times.front() != 0.0) {
    fail("grid must start at time zero");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      fail("grid times must be strictly increasing");
    }
  }
  return times;
}

void parse_covariance(const json& j, ScenarioConfig& cfg, int dim) {
  if (!j.contains("covariance")) {
    return;
  }
  const json& c = j.at("covariance");
  Eigen::VectorXd var;
  if (c.contains("sigmas")) {
    if (cfg.model != "aerocapture") {
      fail("covariance.sigmas names entry-state components");
    }
    const json& s = c.at("sigmas");
    AerocaptureScales sc = AerocaptureScales::from(cfg.aero);
    Eigen::VectorXd sig(7);
    sig[0] = s.at("r_km").get<double>() / cfg.aero.radius_planet;
    sig[1] = s.at("theta_deg").get<double>() * kDegToRad;
    sig[2] = s.at("phi_deg").get<double>() * kDegToRad;
    sig[3] = s.at("v_km_s").get<double>() / sc.velocity_km_s;
    sig[4] = s.at("gamma_deg").get<double>() * kDegToRad;
    sig[5] = s.at("psi_deg").get<double>() * kDegToRad;
    sig[6] = s.at("ln_density").get<double>() / sc.mref;
    var = sig.cwiseProduct(sig);
  } else if (c.contains("variances_nd")) {
    var = parse_vector(c.at("variances_nd"), dim, "covariance.variances_nd");
  } else if (c.contains("matrix_nd")) {
    const json& rows = c.at("matrix_nd");
    if (!rows.is_array() || static_cast<int>(rows.size()) != dim) {
      fail("covariance.matrix_nd must have one row per state component");
    }
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i) {
      m.row(i) = parse_vector(rows[i], dim, "covariance.matrix_nd row");
    }
    double defect = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (defect > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
      fail("covariance.matrix_nd must be symmetric");
    }
    cfg.cov0_nd = 0.5 * (m + m.transpose());
    cfg.has_covariance = true;
    return;
  } else {
    fail("covariance needs sigmas, variances_nd, or matrix_nd");
  }
  for (int i = 0; i < var.size(); ++i) {
    if (!(var[i] >= 0.0)) {
      fail("covariance variances must be nonnegative");
    }
  }
  cfg.cov0_nd = var.asDiagonal();
  cfg.has_covariance = true;
}

ScenarioConfig parse_impl(const json& j) {
  if (!j.is_object()) {
    fail("top level must be a JSON object");
  }
  ScenarioConfig cfg;
  cfg.raw = j;
  cfg.name = j.at("name").get<std::string>();
  if (cfg.name.empty()) {
    fail("name must be nonempty");
  }
  cfg.model = j.at("model").get<std::string>();
  if (cfg.model != "two_body" && cfg.model != "cr3bp" &&
      cfg.model != "aerocapture") {
    fail("model must be two_body, cr3bp, or aerocapture");
  }
  cfg.stt_order = j.value("stt_order", 3);
  if (cfg.stt_order < 1 || cfg.stt_order > 3) {
    fail("stt_order must be 1, 2, or 3");
  }
  cfg.rng_seed = j.value("rng_seed", std::uint64_t{0});
  cfg.output_dir = j.value("output_dir", std::string("out"));
  parse_integrator(j, cfg.integrator);
  cfg.eigensolver.rng_seed = cfg.rng_seed;
  parse_eigensolver(j, cfg.eigensolver);
  parse_model_params(j, cfg);

  std::unique_ptr<DynamicsModel> model;
  try {
    model = make_model(cfg);
    cfg.x0_nd = parse_initial_state(j, cfg, *model);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  cfg.grid = parse_grid(j, cfg);
  parse_covariance(j, cfg, model->dim());
  return cfg;
}

}  // namespace

ScenarioConfig parse_config(const nlohmann::json& j) {
  try {
    return parse_impl(j);
  } catch (const nlohmann::json::exception& e) {
    fail(e.what());
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.is_open()) {
    throw IoError("cannot open config file " + path);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::json config_to_json(const ScenarioConfig& cfg) { return cfg.raw; }

std::unique_ptr<DynamicsModel> make_model(const ScenarioConfig& cfg) {
  if (cfg.model == "two_body") {
    return std::make_unique<TwoBodyModel>(cfg.two_body.mu, cfg.two_body_du_km,
                                          cfg.two_body_tu_s);
  }
  if (cfg.model == "cr3bp") {
    return std::make_unique<Cr3bpModel>(cfg.cr3bp);
  }
  if (cfg.model == "aerocapture") {
    return std::make_unique<AerocaptureModel>(cfg.aero);
  }
  throw ConfigError("config: unknown model " + cfg.model);
}

}  // namespace dstt
