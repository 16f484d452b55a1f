#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dsttkit/dynamics.hpp"
#include "dsttkit/rank1.hpp"
#include "dsttkit/stt.hpp"

namespace dstt {

// Parsed scenario description. `raw` preserves the exact JSON for manifests
// and lossless round trips; the typed fields are derived at parse time
// (nondimensionalization happens here, not in the dynamics code).
struct ScenarioConfig {
  nlohmann::json raw;
  std::string name;
  std::string model;  // two_body | cr3bp | aerocapture
  int stt_order = 3;
  std::uint64_t rng_seed = 0;
  std::string output_dir = "out";

  IntegratorSettings integrator;
  EigenSolverSettings eigensolver;

  TwoBodyParams two_body;
  double two_body_du_km = 1.0;
  double two_body_tu_s = 1.0;
  Cr3bpParams cr3bp;
  AerocaptureParams aero;

  StateVector x0_nd;           // nondimensional initial state
  std::vector<double> grid;    // nondimensional sample times, grid[0] = 0

  bool has_covariance = false;
  Eigen::MatrixXd cov0_nd;
};

ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

std::unique_ptr<DynamicsModel> make_model(const ScenarioConfig& cfg);

}  // namespace dstt
