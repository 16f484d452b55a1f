#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsttkit/errors.hpp"
#include "dsttkit/scenario.hpp"
#include "dsttkit/studies.hpp"

namespace {

// Exit codes by failure category; 1 is reserved for anything uncategorized.
constexpr int kExitConfig = 2;
constexpr int kExitIntegration = 3;
constexpr int kExitSolver = 4;
constexpr int kExitIo = 5;

int run_command(const std::string& config_path, const std::string& study,
                const std::string& out_dir, long long seed_override,
                int order) {
  dstt::ScenarioConfig cfg = dstt::load_config(config_path);
  if (seed_override >= 0) {
    cfg.rng_seed = static_cast<std::uint64_t>(seed_override);
    cfg.eigensolver.rng_seed = cfg.rng_seed;
    cfg.raw["rng_seed"] = cfg.rng_seed;
  }
  dstt::StudyOptions opt;
  opt.frobenius_order = order;
  dstt::run_scenario(cfg, {study}, opt, out_dir);
  return 0;
}

int dump_command(const std::string& config_path, int epoch,
                 const std::string& out_dir) {
  dstt::ScenarioConfig cfg = dstt::load_config(config_path);
  dstt::dump_stt_epoch(cfg, epoch, out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"state transition tensor toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DSTT_KIT_VERSION);

  std::string config_path;
  std::string study = "all";
  std::string out_dir;
  long long seed_override = -1;
  int order = 2;
  int epoch = 0;

  CLI::App* run = app.add_subcommand(
      "run", "integrate a scenario and write the requested study CSVs");
  run->add_option("--config", config_path, "scenario JSON file")->required();
  run->add_option("--study", study, "frobenius | covariance | bound | all")
      ->check(CLI::IsMember({"frobenius", "covariance", "bound", "all"}));
  run->add_option("--out", out_dir, "output directory (default from config)");
  run->add_option("--seed", seed_override, "override the config rng seed");
  run->add_option("--order", order, "tensor order for the frobenius study")
      ->check(CLI::IsMember({2, 3}));

  CLI::App* dump = app.add_subcommand(
      "dump-stt", "integrate and write one epoch's tensors as CSV");
  dump->add_option("--config", config_path, "scenario JSON file")->required();
  dump->add_option("--epoch", epoch, "sample index on the config grid")
      ->required();
  dump->add_option("--out", out_dir, "output directory (default from config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_command(config_path, study, out_dir, seed_override, order);
    }
    return dump_command(config_path, epoch, out_dir);
  } catch (const dstt::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const dstt::IntegrationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIntegration;
  } catch (const dstt::SolverError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolver;
  } catch (const dstt::IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
