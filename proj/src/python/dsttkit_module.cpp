#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsttkit/errors.hpp"
#include "dsttkit/moments.hpp"
#include "dsttkit/rank1.hpp"
#include "dsttkit/scenario.hpp"
#include "dsttkit/stt.hpp"
#include "dsttkit/studies.hpp"
#include "dsttkit/tensor.hpp"

#ifndef DSTT_KIT_VERSION
#define DSTT_KIT_VERSION "0.1.0"
#endif

namespace py = pybind11;

namespace {

// Copies a (1,m)-tensor into an ndarray shaped (nout, nin, ..., nin).
py::array_t<double> tensor_to_array(const dstt::TensorOneM& t) {
  std::vector<py::ssize_t> shape{t.nout()};
  for (int i = 0; i < t.order(); ++i) shape.push_back(t.nin());
  py::array_t<double> out(shape);
  std::copy(t.entries().begin(), t.entries().end(),
            out.mutable_data());
  return out;
}

const char* method_name(dstt::R1Method m) {
  return m == dstt::R1Method::dstt ? "dstt" : "odstt";
}

dstt::SttHistory integrate_config(const dstt::ScenarioConfig& cfg) {
  std::unique_ptr<dstt::DynamicsModel> model = dstt::make_model(cfg);
  return dstt::integrate_stts(*model, cfg.x0_nd, cfg.grid, cfg.stt_order,
                              cfg.integrator);
}

dstt::GaussianState zero_mean_state(const Eigen::MatrixXd& p0) {
  dstt::GaussianState g;
  g.dmean = Eigen::VectorXd::Zero(p0.rows());
  g.cov = p0;
  return g;
}

}  // namespace

PYBIND11_MODULE(_dsttkit, m) {
  m.doc() =
      "State transition tensors along reference orbits, rank-1 directional "
      "factorizations, and Gaussian moment propagation.";
  m.attr("__version__") = DSTT_KIT_VERSION;

  py::register_exception<dstt::ConfigError>(m, "ConfigError");
  py::register_exception<dstt::IntegrationError>(m, "IntegrationError");
  py::register_exception<dstt::SolverError>(m, "SolverError");
  py::register_exception<dstt::IoError>(m, "IoError");

  py::class_<dstt::ScenarioConfig>(m, "ScenarioConfig")
      .def_readonly("name", &dstt::ScenarioConfig::name)
      .def_readonly("model", &dstt::ScenarioConfig::model)
      .def_readonly("stt_order", &dstt::ScenarioConfig::stt_order)
      .def_readonly("rng_seed", &dstt::ScenarioConfig::rng_seed)
      .def_readonly("output_dir", &dstt::ScenarioConfig::output_dir)
      .def_readonly("grid", &dstt::ScenarioConfig::grid)
      .def_readonly("has_covariance", &dstt::ScenarioConfig::has_covariance)
      .def_property_readonly(
          "x0", [](const dstt::ScenarioConfig& c) { return c.x0_nd.values; })
      .def_property_readonly(
          "cov0", [](const dstt::ScenarioConfig& c) { return c.cov0_nd; })
      .def("to_json",
           [](const dstt::ScenarioConfig& c) {
             return dstt::config_to_json(c).dump(2);
           })
      .def("__repr__", [](const dstt::ScenarioConfig& c) {
        return "ScenarioConfig(name='" + c.name + "', model='" + c.model +
               "', epochs=" + std::to_string(c.grid.size()) + ")";
      });

  m.def("load_config", &dstt::load_config, py::arg("path"),
        "Parse a scenario JSON file.");
  m.def(
      "parse_config",
      [](const std::string& text) {
        nlohmann::json j;
        try {
          j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
          throw dstt::ConfigError(std::string("config: ") + e.what());
        }
        return dstt::parse_config(j);
      },
      py::arg("text"), "Parse a scenario from a JSON string.");

  py::class_<dstt::SttHistory>(m, "SttHistory")
      .def_readonly("order", &dstt::SttHistory::order)
      .def_readonly("times", &dstt::SttHistory::times)
      .def_readonly("max_symmetry_defect",
                    &dstt::SttHistory::max_symmetry_defect)
      .def("epochs", &dstt::SttHistory::epochs)
      .def(
          "state",
          [](const dstt::SttHistory& h, int k) {
            if (k < 0 || static_cast<std::size_t>(k) >= h.epochs()) {
              throw std::out_of_range("epoch index out of range");
            }
            return h.states[static_cast<std::size_t>(k)];
          },
          py::arg("k"))
      .def(
          "stm",
          [](const dstt::SttHistory& h, int k) {
            if (k < 0 || static_cast<std::size_t>(k) >= h.epochs()) {
              throw std::out_of_range("epoch index out of range");
            }
            return h.stm[static_cast<std::size_t>(k)];
          },
          py::arg("k"))
      .def(
          "stt",
          [](const dstt::SttHistory& h, int order_m, int k) {
            return tensor_to_array(h.stt(order_m, k));
          },
          py::arg("order"), py::arg("k"),
          "Order-2 or order-3 tensor at epoch k, shaped (n, n, ...).");

  m.def("integrate", &integrate_config, py::arg("config"),
        "Integrate the scenario's reference orbit and tensors.");

  py::class_<dstt::Rank1Factors>(m, "Rank1Factors")
      .def_readonly("order", &dstt::Rank1Factors::order)
      .def_readonly("u", &dstt::Rank1Factors::u)
      .def_readonly("v", &dstt::Rank1Factors::v)
      .def_readonly("epoch", &dstt::Rank1Factors::epoch)
      .def_property_readonly(
          "method",
          [](const dstt::Rank1Factors& f) { return method_name(f.method); })
      .def("__repr__", [](const dstt::Rank1Factors& f) {
        return std::string("Rank1Factors(order=") + std::to_string(f.order) +
               ", method='" + method_name(f.method) +
               "', epoch=" + std::to_string(f.epoch) + ")";
      });

  py::class_<dstt::EpochFactors>(m, "EpochFactors")
      .def_readonly("dstt2", &dstt::EpochFactors::dstt2)
      .def_readonly("odstt2", &dstt::EpochFactors::odstt2)
      .def_readonly("dstt3", &dstt::EpochFactors::dstt3)
      .def_readonly("odstt3", &dstt::EpochFactors::odstt3);

  m.def("build_r1dstt", &dstt::build_r1dstt, py::arg("history"), py::arg("k"),
        py::arg("order"),
        "Directional factors along the STM's dominant right singular vector.");
  m.def(
      "build_epoch_factors",
      [](const dstt::SttHistory& h, int k, const dstt::ScenarioConfig& cfg,
         int max_order) {
        return dstt::build_epoch_factors(h, k, cfg.eigensolver, max_order);
      },
      py::arg("history"), py::arg("k"), py::arg("config"),
      py::arg("max_order") = 3,
      "Directional and optimal factors at one epoch, solver settings taken "
      "from the scenario config.");

  m.def(
      "propagate_perturbation",
      [](const dstt::SttHistory& h, int k, const Eigen::VectorXd& dx0,
         int order) { return dstt::propagate_perturbation_stt(h, k, dx0, order); },
      py::arg("history"), py::arg("k"), py::arg("dx0"), py::arg("order"),
      "Truncated Taylor propagation of an initial perturbation.");
  m.def(
      "propagate_perturbation_r1",
      [](const dstt::SttHistory& h, int k, const Eigen::VectorXd& dx0,
         const dstt::Rank1Factors& f2, const dstt::Rank1Factors* f3) {
        return dstt::propagate_perturbation_r1(h, k, dx0, f2, f3);
      },
      py::arg("history"), py::arg("k"), py::arg("dx0"), py::arg("f2"),
      py::arg("f3") = nullptr,
      "STM plus rank-1 directional corrections.");

  py::class_<dstt::GaussianState>(m, "GaussianState")
      .def_readonly("dmean", &dstt::GaussianState::dmean)
      .def_readonly("cov", &dstt::GaussianState::cov);

  m.def(
      "propagate_moments",
      [](const dstt::SttHistory& h, int k, const Eigen::MatrixXd& p0,
         int order) {
        return dstt::propagate_moments_stt(h, k, zero_mean_state(p0), order);
      },
      py::arg("history"), py::arg("k"), py::arg("cov0"), py::arg("order"),
      "Gaussian moment propagation through the order-M flow expansion.");
  m.def(
      "propagate_moments_r1",
      [](const dstt::SttHistory& h, int k, const Eigen::MatrixXd& p0,
         const dstt::Rank1Factors& f2, const dstt::Rank1Factors* f3) {
        return dstt::propagate_moments_r1(h, k, zero_mean_state(p0), f2, f3);
      },
      py::arg("history"), py::arg("k"), py::arg("cov0"), py::arg("f2"),
      py::arg("f3") = nullptr,
      "Rank-1 Gaussian moment propagation.");

  m.def(
      "run_scenario",
      [](const dstt::ScenarioConfig& cfg,
         const std::vector<std::string>& studies, const std::string& out_dir,
         int frobenius_order, int bound_samples, bool plant_maximizer) {
        dstt::StudyOptions opt;
        opt.frobenius_order = frobenius_order;
        opt.bound_samples = bound_samples;
        opt.plant_maximizer = plant_maximizer;
        dstt::run_scenario(cfg, studies, opt, out_dir);
      },
      py::arg("config"), py::arg("studies"), py::arg("out_dir") = "",
      py::arg("frobenius_order") = 2, py::arg("bound_samples") = 1000,
      py::arg("plant_maximizer") = false,
      "Integrate, factor, and write study CSVs plus a manifest.");
  m.def("dump_stt_epoch", &dstt::dump_stt_epoch, py::arg("config"),
        py::arg("epoch"), py::arg("out_dir") = "",
        "Write one epoch's state, STM, and tensors as CSV.");
}
