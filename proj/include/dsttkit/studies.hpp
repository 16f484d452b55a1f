#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dsttkit/moments.hpp"
#include "dsttkit/rank1.hpp"
#include "dsttkit/scenario.hpp"
#include "dsttkit/stt.hpp"

namespace dstt {

// Parallelism cap: DSTT_KIT_THREADS if set, else hardware concurrency.
int thread_budget();

// Runs fn(0..count-1) across up to thread_budget() workers. Results must be
// index-addressed by the caller so output never depends on thread order.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

// Both factorizations at one epoch. Eigensolver streams derive from
// (settings.rng_seed, epoch), so epochs are independent and reproducible.
struct EpochFactors {
  Rank1Factors dstt2, odstt2;
  Rank1Factors dstt3, odstt3;  // order() == 0 when max_order < 3
  EigenResult eig2, eig3;
};
EpochFactors build_epoch_factors(const SttHistory& h, int k,
                                 const EigenSolverSettings& settings,
                                 int max_order);

struct StudyOptions {
  int frobenius_order = 2;
  int bound_samples = 1000;
  // Adds each epoch's solver maximizer to the sample set (bound study).
  bool plant_maximizer = false;
};

void run_frobenius_study(const ScenarioConfig& cfg, const SttHistory& h,
                         int order, const std::string& out_csv);
void run_covariance_study(const ScenarioConfig& cfg, const SttHistory& h,
                          const std::string& out_csv);
void run_bound_validation(const ScenarioConfig& cfg, const SttHistory& h,
                          int nsamples, bool plant_maximizer,
                          const std::string& out_csv);

// integrate -> factor -> studies -> CSVs + manifest.json under out_dir
// (cfg.output_dir when empty). Throws the module error types on failure.
void run_scenario(const ScenarioConfig& cfg,
                  const std::vector<std::string>& studies,
                  const StudyOptions& opt = {},
                  const std::string& out_dir = "");

// times.csv plus the epoch's state/stm/stt tensors in the dump format.
void dump_stt_epoch(const ScenarioConfig& cfg, int epoch,
                    const std::string& out_dir = "");

}  // namespace dstt
