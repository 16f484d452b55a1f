#include "dsttkit/studies.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "dsttkit/errors.hpp"
#include "dsttkit/rng.hpp"

#ifndef DSTT_KIT_VERSION
#define DSTT_KIT_VERSION "0.1.0"
#endif

namespace dstt {

namespace {

// Stream ids keep every random draw independent of thread scheduling and of
// the other studies: (purpose, epoch) pairs never collide.
constexpr std::uint32_t kStreamOdstt2 = 1;
constexpr std::uint32_t kStreamOdstt3 = 2;
constexpr std::uint32_t kStreamBoundSamples = 3;
constexpr std::uint32_t kStreamBoundNorm = 4;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
      std::filesystem::create_directories(p.parent_path());
    }
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_) {
      throw IoError("cannot open " + path + " for writing");
    }
  }
  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void line(const std::string& s) {
    std::fputs(s.c_str(), f_);
    std::fputc('\n', f_);
  }

 private:
  std::FILE* f_ = nullptr;
};

EigenResult solve_odstt_epoch(const SttHistory& h, int k, int m,
                              EigenSolverSettings s,
                              const Eigen::VectorXd& warm) {
  s.stream = rng_stream(m == 2 ? kStreamOdstt2 : kStreamOdstt3,
                        static_cast<std::uint32_t>(k));
  s.warm_starts.assign(1, warm);
  EigenResult e = sshopm_squared(h.stt(m, k), s);
  if (!e.converged) {
    throw SolverError("power iteration did not converge on any start");
  }
  return e;
}

Rank1Factors factors_from_eig(const SttHistory& h, int k, int m,
                              const EigenResult& e) {
  Rank1Factors f;
  f.order = m;
  f.v = e.vector;
  f.u = contract_full(h.stt(m, k), f.v);
  f.method = R1Method::odstt;
  f.epoch = k;
  return f;
}

double safe_metric(const Eigen::MatrixXd& ref, const Eigen::MatrixXd& approx) {
  if (ref.norm() == 0.0) {
    return (approx - ref).norm();
  }
  return covariance_error_metric(ref, approx);
}

}  // namespace

int thread_budget() {
  if (const char* env = std::getenv("DSTT_KIT_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) {
      return static_cast<int>(std::min(v, 256L));
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t)>& fn) {
  std::size_t workers = std::min<std::size_t>(
      static_cast<std::size_t>(thread_budget()), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

EpochFactors build_epoch_factors(const SttHistory& h, int k,
                                 const EigenSolverSettings& settings,
                                 int max_order) {
  if (max_order < 2 || max_order > 3 || max_order > h.order) {
    throw std::invalid_argument("factor order must be 2 or 3 and stored");
  }
  EpochFactors f;
  f.dstt2 = build_r1dstt(h, k, 2);
  f.eig2 = solve_odstt_epoch(h, k, 2, settings, f.dstt2.v);
  f.odstt2 = factors_from_eig(h, k, 2, f.eig2);
  if (max_order >= 3) {
    f.dstt3 = build_r1dstt(h, k, 3);
    f.eig3 = solve_odstt_epoch(h, k, 3, settings, f.dstt3.v);
    f.odstt3 = factors_from_eig(h, k, 3, f.eig3);
  }
  return f;
}

void run_frobenius_study(const ScenarioConfig& cfg, const SttHistory& h,
                         int order, const std::string& out_csv) {
  if (order < 2 || order > 3 || order > h.order) {
    throw std::invalid_argument("study order must be 2 or 3 and stored");
  }
  // The epoch-0 tensor is identically zero, which makes the normalized
  // metric undefined, so rows start at the first positive-time sample.
  const std::size_t n_rows = h.epochs() > 0 ? h.epochs() - 1 : 0;
  std::vector<std::string> rows(n_rows);
  parallel_for(n_rows, [&](std::size_t i) {
    const int k = static_cast<int>(i) + 1;
    Rank1Factors d = build_r1dstt(h, k, order);
    EigenResult e = solve_odstt_epoch(h, k, order, cfg.eigensolver, d.v);
    Rank1Factors o = factors_from_eig(h, k, order, e);
    const TensorOneM& phi = h.stt(order, k);
    double frob = frobenius_norm(phi);
    double derr = 0.0;
    double oerr = 0.0;
    if (frob > 0.0) {
      derr = frobenius_norm(phi - rank1_outer(d.u, d.v, order)) / frob;
      oerr = frobenius_norm(phi - rank1_outer(o.u, o.v, order)) / frob;
    }
    double angle = angle_between(d.v, o.v);
    rows[i] = std::to_string(k) + "," + fmt(h.times[k]) + "," + fmt(frob) +
              "," + fmt(derr) + "," + fmt(oerr) + "," + fmt(angle);
  });
  CsvWriter w(out_csv);
  w.line(
      "epoch,time_nd,phi_frobenius_nd,dstt_rel_frobenius_err,"
      "odstt_rel_frobenius_err,angle_r_v_deg");
  for (const std::string& r : rows) w.line(r);
}

void run_covariance_study(const ScenarioConfig& cfg, const SttHistory& h,
                          const std::string& out_csv) {
  if (!cfg.has_covariance) {
    throw ConfigError("config: covariance study needs an initial covariance");
  }
  if (h.order < 3) {
    throw ConfigError("config: covariance study needs third-order tensors");
  }
  GaussianState g0;
  g0.dmean = Eigen::VectorXd::Zero(cfg.cov0_nd.rows());
  g0.cov = cfg.cov0_nd;
  std::vector<std::string> rows(h.epochs());
  parallel_for(h.epochs(), [&](std::size_t i) {
    const int k = static_cast<int>(i);
    EpochFactors f = build_epoch_factors(h, k, cfg.eigensolver, 3);
    GaussianState ref2 = propagate_moments_stt(h, k, g0, 2);
    GaussianState ref3 = propagate_moments_stt(h, k, g0, 3);
    double d2 = safe_metric(ref2.cov, propagate_moments_r1(h, k, g0, f.dstt2).cov);
    double o2 =
        safe_metric(ref2.cov, propagate_moments_r1(h, k, g0, f.odstt2).cov);
    double d3 = safe_metric(
        ref3.cov, propagate_moments_r1(h, k, g0, f.dstt2, &f.dstt3).cov);
    double o3 = safe_metric(
        ref3.cov, propagate_moments_r1(h, k, g0, f.odstt2, &f.odstt3).cov);
    rows[i] = std::to_string(k) + "," + fmt(h.times[k]) + "," + fmt(d2) + "," +
              fmt(o2) + "," + fmt(d3) + "," + fmt(o3);
  });
  CsvWriter w(out_csv);
  w.line(
      "epoch,time_nd,dstt2_cov_rel_err,odstt2_cov_rel_err,"
      "dstt3_cov_rel_err,odstt3_cov_rel_err");
  for (const std::string& r : rows) w.line(r);
}

void run_bound_validation(const ScenarioConfig& cfg, const SttHistory& h,
                          int nsamples, bool plant_maximizer,
                          const std::string& out_csv) {
  if (nsamples < 0) {
    throw std::invalid_argument("sample count must be nonnegative");
  }
  if (h.order < 2) {
    throw ConfigError("config: bound study needs second-order tensors");
  }
  const int n = static_cast<int>(h.stm[0].rows());
  Philox rng(cfg.rng_seed, rng_stream(kStreamBoundSamples, 0));
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(static_cast<std::size_t>(nsamples));
  for (int i = 0; i < nsamples; ++i) {
    samples.push_back(rng.unit_vector(n));
  }

  CsvWriter w(out_csv);
  w.line("epoch,time_nd,max_sample_err_nd,induced_2norm_nd,frobenius_norm_nd");

  // The induced-norm solve at each epoch warm-starts from the previous
  // epoch's maximizer and from the strongest sample, so the reported middle
  // column can never fall below the sample column.
  Eigen::VectorXd prev_max;
  for (std::size_t k = 0; k < h.epochs(); ++k) {
    EpochFactors f =
        build_epoch_factors(h, static_cast<int>(k), cfg.eigensolver, 2);
    TensorOneM eps =
        h.stt(2, static_cast<int>(k)) - rank1_outer(f.odstt2.u, f.odstt2.v, 2);
    double frob = frobenius_norm(eps);

    std::vector<double> vals(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
      vals[i] = contract_full(eps, samples[i]).norm();
    });
    double max_sample = -1.0;
    Eigen::VectorXd best;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (vals[i] > max_sample) {
        max_sample = vals[i];
        best = samples[i];
      }
    }

    EigenSolverSettings s = cfg.eigensolver;
    s.stream = rng_stream(kStreamBoundNorm, static_cast<std::uint32_t>(k));
    s.warm_starts.clear();
    if (prev_max.size() > 0) s.warm_starts.push_back(prev_max);
    if (best.size() > 0) s.warm_starts.push_back(best);
    EigenResult e = sshopm_squared(eps, s);
    if (!e.converged) {
      throw SolverError("power iteration did not converge on any start");
    }
    double induced = std::sqrt(std::max(0.0, e.lambda));
    prev_max = e.vector;

    if (plant_maximizer) {
      double planted = contract_full(eps, e.vector).norm();
      if (planted > max_sample) max_sample = planted;
    }

    std::string max_cell = max_sample >= 0.0 ? fmt(max_sample) : std::string();
    w.line(std::to_string(k) + "," + fmt(h.times[k]) + "," + max_cell + "," +
           fmt(induced) + "," + fmt(frob));
  }
}

namespace {

void write_times(const SttHistory& h, const std::string& path) {
  CsvWriter w(path);
  w.line("epoch,time");
  for (std::size_t k = 0; k < h.epochs(); ++k) {
    w.line(std::to_string(k) + "," + fmt(h.times[k]));
  }
}

void write_trajectory(const SttHistory& h, const std::string& path) {
  CsvWriter w(path);
  std::string header = "epoch,time_nd";
  const int n = static_cast<int>(h.states[0].size());
  for (int j = 0; j < n; ++j) {
    header += ",x" + std::to_string(j);
  }
  w.line(header);
  for (std::size_t k = 0; k < h.epochs(); ++k) {
    std::string row = std::to_string(k) + "," + fmt(h.times[k]);
    for (int j = 0; j < n; ++j) {
      row += "," + fmt(h.states[k][j]);
    }
    w.line(row);
  }
}

std::vector<std::string> expand_studies(const std::vector<std::string>& studies,
                                        const ScenarioConfig& cfg) {
  std::vector<std::string> out;
  auto add = [&](const std::string& s) {
    for (const std::string& existing : out) {
      if (existing == s) return;
    }
    out.push_back(s);
  };
  for (const std::string& s : studies) {
    if (s == "all") {
      add("frobenius");
      if (cfg.has_covariance) add("covariance");
      add("bound");
    } else if (s == "frobenius" || s == "covariance" || s == "bound") {
      add(s);
    } else {
      throw ConfigError("config: unknown study " + s);
    }
  }
  return out;
}

}  // namespace

void run_scenario(const ScenarioConfig& cfg,
                  const std::vector<std::string>& studies,
                  const StudyOptions& opt, const std::string& out_dir) {
  const std::string out = out_dir.empty() ? cfg.output_dir : out_dir;
  std::filesystem::create_directories(out);

  std::unique_ptr<DynamicsModel> model = make_model(cfg);
  SttHistory h = integrate_stts(*model, cfg.x0_nd, cfg.grid, cfg.stt_order,
                                cfg.integrator);

  std::vector<std::string> outputs;
  write_times(h, out + "/times.csv");
  outputs.push_back("times.csv");
  write_trajectory(h, out + "/trajectory.csv");
  outputs.push_back("trajectory.csv");

  std::vector<std::string> todo = expand_studies(studies, cfg);
  for (const std::string& study : todo) {
    if (study == "frobenius") {
      if (opt.frobenius_order < 2 || opt.frobenius_order > 3 ||
          opt.frobenius_order > cfg.stt_order) {
        throw ConfigError("config: frobenius study order not stored");
      }
      std::string name =
          "frobenius_order" + std::to_string(opt.frobenius_order) + ".csv";
      run_frobenius_study(cfg, h, opt.frobenius_order, out + "/" + name);
      outputs.push_back(name);
    } else if (study == "covariance") {
      run_covariance_study(cfg, h, out + "/covariance.csv");
      outputs.push_back("covariance.csv");
    } else {
      run_bound_validation(cfg, h, opt.bound_samples, opt.plant_maximizer,
                           out + "/bound.csv");
      outputs.push_back("bound.csv");
    }
  }

  nlohmann::json manifest;
  manifest["name"] = cfg.name;
  manifest["model"] = cfg.model;
  manifest["stt_order"] = cfg.stt_order;
  manifest["rng_seed"] = cfg.rng_seed;
  manifest["epochs"] = h.epochs();
  manifest["max_symmetry_defect"] = h.max_symmetry_defect;
  manifest["studies"] = todo;
  manifest["outputs"] = outputs;
  manifest["versions"] = {
      {"dstt_kit", DSTT_KIT_VERSION},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                    std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
  };
  manifest["config"] = cfg.raw;

  const std::string mpath = out + "/manifest.json";
  std::FILE* f = std::fopen(mpath.c_str(), "wb");
  if (!f) {
    throw IoError("cannot open " + mpath + " for writing");
  }
  std::string text = manifest.dump(2);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fputc('\n', f);
  std::fclose(f);
}

void dump_stt_epoch(const ScenarioConfig& cfg, int epoch,
                    const std::string& out_dir) {
  if (epoch < 0 || static_cast<std::size_t>(epoch) >= cfg.grid.size()) {
    throw ConfigError("config: epoch " + std::to_string(epoch) +
                      " outside the sample grid");
  }
  const std::string out = out_dir.empty() ? cfg.output_dir : out_dir;
  std::filesystem::create_directories(out);
  std::unique_ptr<DynamicsModel> model = make_model(cfg);
  SttHistory h = integrate_stts(*model, cfg.x0_nd, cfg.grid, cfg.stt_order,
                                cfg.integrator);
  write_times(h, out + "/times.csv");
  save_history_epoch_csv(h, epoch, out);
}

}  // namespace dstt
