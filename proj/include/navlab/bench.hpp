#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "navlab/errors.hpp"
#include "navlab/robot_sim.hpp"
#include "navlab/tuners.hpp"
#include "navlab/world.hpp"

namespace navlab {

inline constexpr uint64_t kTrainMazeSeed = 11;
inline constexpr uint64_t kAltMazeSeed = 47;
inline constexpr double kMazeWallDensity = 0.30;

template <typename F>
void parallel_for(size_t n, int workers, F&& f) {
  workers = std::max(1, workers);
  if (workers == 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> threads;
  for (int w = 0; w < workers; ++w)
    threads.emplace_back([&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
    });
  for (auto& t : threads) t.join();
}

// ---- environments ----

inline int max_obstacles(const std::string& env) {
  return (env == "campus" || env == "office") ? 500 : 200;
}

inline WorldSpec make_env(const std::string& env) {
  if (env == "maze_same") return generate_maze(kTrainMazeSeed, kMazeWallDensity);
  if (env == "maze_different") return generate_maze(kAltMazeSeed, kMazeWallDensity);
  if (env == "maze") return generate_maze(kTrainMazeSeed, kMazeWallDensity);
  if (env == "sector") return generate_sector(5);
  if (env == "campus") return generate_campus(5);
  if (env == "office") return generate_office(5);
  throw Error("unknown environment: " + env);
}

inline double default_min_separation(const WorldSpec& w) {
  return 0.4 * std::max(w.room_w, w.room_h);
}

// ---- sweep protocol ----

struct SweepConfig {
  std::string param = "d_la";                  // "f_gp" or "d_la"
  std::vector<double> values;                   // defaults to the parameter grid
  std::vector<double> spacings{kSpacings.begin(), kSpacings.end()};
  int runs_per_cell = 50;
  uint64_t master_seed = 1;
  int workers = 1;
  NavParams base_params;
  double timeout = 300.0;
};

struct SweepObsRow {
  double value = 0.0;
  double spacing = 0.0;
  int run = 0;
  Observation obs;
};

struct SweepOutput {
  SweepDataset dataset;
  std::vector<SweepObsRow> observations;
};

inline std::vector<double> sweep_values(const std::string& param) {
  if (param == "f_gp") return ParamSpace::f_gp_values();
  if (param == "d_la") return ParamSpace::d_la_values();
  throw Error("run_sweep: unknown parameter " + param);
}

// Single-coordinate sweep over uniform-density worlds with fixed parameters;
// one record (plus the observation stream) per run.
inline SweepOutput run_sweep(const SweepConfig& config,
                             const std::function<void(size_t, size_t)>& progress = {}) {
  SweepConfig cfg = config;
  if (cfg.values.empty()) cfg.values = sweep_values(cfg.param);
  if (cfg.runs_per_cell < 1) throw Error("run_sweep: runs_per_cell must be >= 1");

  WorldSpec maze = make_env("maze");
  const size_t n_cells = cfg.values.size() * cfg.spacings.size();
  const size_t n_runs = n_cells * cfg.runs_per_cell;

  struct RunOut {
    SweepRecord record;
    std::vector<Observation> obs;
    bool valid = false;
  };
  std::vector<RunOut> outs(n_runs);
  std::atomic<size_t> done{0};

  parallel_for(n_runs, cfg.workers, [&](size_t job) {
    size_t cell = job / cfg.runs_per_cell;
    int run = static_cast<int>(job % cfg.runs_per_cell);
    double value = cfg.values[cell / cfg.spacings.size()];
    double spacing = cfg.spacings[cell % cfg.spacings.size()];

    NavParams params = cfg.base_params;
    ParamSpace::set_param(params, cfg.param, value);

    for (int attempt = 0; attempt < 5; ++attempt) {
      uint64_t seed = mix_seed({cfg.master_seed, 0x7377656570ull, cell,
                                static_cast<uint64_t>(run), static_cast<uint64_t>(attempt)});
      try {
        EpisodeConfig ep;
        ep.world = place_obstacles_uniform(maze, spacing, seed);
        auto [start, goal] = sample_start_goal(ep.world, seed, default_min_separation(ep.world));
        ep.start = start;
        ep.goal = goal;
        ep.initial_params = params;
        ep.timeout = cfg.timeout;
        ep.seed = seed;
        FixedPolicy policy(params);
        EpisodeResult res = run_episode(ep, policy);
        auto& out = outs[job];
        out.record = {value, spacing, res.success, res.path_length, res.sim_runtime};
        for (const auto& tr : res.transitions) out.obs.push_back(tr.obs);
        out.valid = true;
        break;
      } catch (const Error&) {
        continue;  // infeasible world or task; retry with a new seed
      }
    }
    size_t d = done.fetch_add(1) + 1;
    if (progress) progress(d, n_runs);
  });

  SweepOutput out;
  out.dataset.param_name = cfg.param;
  out.dataset.values = cfg.values;
  for (size_t job = 0; job < n_runs; ++job) {
    if (!outs[job].valid) continue;
    out.dataset.records.push_back(outs[job].record);
    size_t cell = job / cfg.runs_per_cell;
    for (const auto& o : outs[job].obs)
      out.observations.push_back({cfg.values[cell / cfg.spacings.size()],
                                  cfg.spacings[cell % cfg.spacings.size()],
                                  static_cast<int>(job % cfg.runs_per_cell), o});
  }
  return out;
}

// Training dataset for the batch predictors: every sweep observation labeled
// with the best value for its world's spacing.
inline std::vector<LabeledObservation> label_observations(
    const std::vector<SweepObsRow>& rows, const BestValueCurve& curve,
    const std::string& param) {
  std::vector<LabeledObservation> out;
  out.reserve(rows.size());
  for (const auto& r : rows)
    out.push_back({r.obs, curve.value(param, r.spacing)});
  return out;
}

// ---- evaluation protocol ----

struct TunerEntry {
  std::string name;
  const TunerPolicy* policy = nullptr;
};

struct EvalConfig {
  std::vector<std::string> envs{"maze_same", "maze_different", "campus", "sector", "office"};
  std::vector<double> load_fractions{0.0, 0.25, 0.5, 0.75, 1.0};
  int runs_per_cell = 20;
  uint64_t master_seed = 2;
  int workers = 1;
  double timeout = 300.0;
};

struct EpisodeRecord {
  std::string tuner, env;
  int load = 0;  // obstacle count
  int run = 0;
  bool success = false;
  double path_length = 0.0;
  double l_min = 0.0;
  double sim_runtime = 0.0;
  double wall_runtime = 0.0;
  std::string failure = "none";
};

struct ReportRow {
  std::string tuner, env;
  int load = 0;
  int n = 0;
  double sr = 0.0;        // percent
  double pl_mean = 0.0;   // successful runs
  double pl_std = 0.0;
  double runtime_mean = 0.0;
};

struct Report {
  std::vector<ReportRow> rows;
  std::map<std::pair<std::string, std::string>, double> delta_sr;  // (tuner, env)
  int infeasible_cells = 0;
};

inline std::map<std::pair<std::string, std::string>, double> sensitivity(
    const std::vector<ReportRow>& rows) {
  std::map<std::pair<std::string, std::string>, std::pair<double, double>> minmax;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.tuner, r.env);
    auto it = minmax.find(key);
    if (it == minmax.end())
      minmax[key] = {r.sr, r.sr};
    else {
      it->second.first = std::min(it->second.first, r.sr);
      it->second.second = std::max(it->second.second, r.sr);
    }
  }
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& [key, mm] : minmax) out[key] = mm.second - mm.first;
  return out;
}

struct EvalOutput {
  Report report;
  std::vector<EpisodeRecord> records;
};

inline Report make_report(const std::vector<EpisodeRecord>& records);

// Paired comparison: within one (environment, load, run) cell every tuner sees
// the identical world and start/goal.
inline EvalOutput evaluate(const EvalConfig& config, const std::vector<TunerEntry>& tuners,
                           const std::function<void(size_t, size_t)>& progress = {}) {
  if (tuners.empty()) throw Error("evaluate: no tuners");

  struct Cell {
    std::string env;
    int load = 0;
    int run = 0;
    WorldSpec world;
    Pose start, goal;
    bool feasible = false;
  };

  // build all shared worlds first (deterministic, independent of tuners)
  std::vector<Cell> cells;
  for (const auto& env : config.envs) {
    WorldSpec base = make_env(env);
    for (double frac : config.load_fractions) {
      int count = static_cast<int>(std::llround(frac * max_obstacles(env)));
      for (int run = 0; run < config.runs_per_cell; ++run) {
        Cell cell;
        cell.env = env;
        cell.load = count;
        cell.run = run;
        cells.push_back(std::move(cell));
      }
    }
  }
  std::atomic<int> infeasible{0};
  parallel_for(cells.size(), config.workers, [&](size_t i) {
    Cell& cell = cells[i];
    WorldSpec base = make_env(cell.env);
    for (int attempt = 0; attempt < 5; ++attempt) {
      uint64_t seed = mix_seed({config.master_seed, 0x6576616cull, hash_string(cell.env),
                                static_cast<uint64_t>(cell.load),
                                static_cast<uint64_t>(cell.run),
                                static_cast<uint64_t>(attempt)});
      try {
        WorldSpec world =
            cell.load > 0
                ? place_obstacles_by_count(base, cell.load, eval_shape_set(), seed)
                : base;
        auto [start, goal] = sample_start_goal(world, seed, default_min_separation(world));
        cell.world = std::move(world);
        cell.start = start;
        cell.goal = goal;
        cell.feasible = true;
        break;
      } catch (const Error&) {
        continue;
      }
    }
    if (!cell.feasible) infeasible.fetch_add(1);
  });

  const size_t n_jobs = cells.size() * tuners.size();
  std::vector<EpisodeRecord> records(n_jobs);
  std::atomic<size_t> done{0};
  parallel_for(n_jobs, config.workers, [&](size_t job) {
    size_t ci = job / tuners.size();
    size_t ti = job % tuners.size();
    const Cell& cell = cells[ci];
    EpisodeRecord& rec = records[job];
    rec.tuner = tuners[ti].name;
    rec.env = cell.env;
    rec.load = cell.load;
    rec.run = cell.run;
    if (cell.feasible) {
      EpisodeConfig ep;
      ep.world = cell.world;
      ep.start = cell.start;
      ep.goal = cell.goal;
      ep.timeout = config.timeout;
      ep.seed = mix_seed({config.master_seed, 0x657069ull, ci, ti});
      try {
        EpisodeResult res = run_episode(ep, *tuners[ti].policy);
        rec.success = res.success;
        rec.path_length = res.path_length;
        rec.l_min = res.l_min;
        rec.sim_runtime = res.sim_runtime;
        rec.wall_runtime = res.wall_runtime;
        rec.failure = to_string(res.failure_reason);
      } catch (const Error&) {
        rec.failure = "no_path";
      }
    } else {
      rec.failure = "infeasible";
    }
    size_t d = done.fetch_add(1) + 1;
    if (progress) progress(d, n_jobs);
  });

  EvalOutput out;
  out.records = std::move(records);
  out.report = make_report(out.records);
  out.report.infeasible_cells = infeasible.load();
  return out;
}

inline Report make_report(const std::vector<EpisodeRecord>& records) {
  Report report;
  // preserve first-appearance order of tuners/envs/loads
  auto seen = [](std::vector<std::string>& v, const std::string& s) {
    for (const auto& e : v)
      if (e == s) return;
    v.push_back(s);
  };
  std::vector<std::string> tuners, envs;
  std::map<std::pair<std::string, std::string>, std::vector<int>> loads;
  for (const auto& r : records) {
    seen(tuners, r.tuner);
    seen(envs, r.env);
    auto& l = loads[{r.tuner, r.env}];
    if (std::find(l.begin(), l.end(), r.load) == l.end()) l.push_back(r.load);
  }
  for (const auto& tuner : tuners)
    for (const auto& env : envs)
      for (int load : loads[{tuner, env}]) {
        ReportRow row;
        row.tuner = tuner;
        row.env = env;
        row.load = load;
        double pl_sum = 0.0, rt_sum = 0.0;
        std::vector<double> pls;
        int succ = 0, total = 0;
        for (const auto& r : records) {
          if (r.tuner != tuner || r.env != env || r.load != load) continue;
          if (r.failure == "infeasible") continue;
          ++total;
          rt_sum += r.sim_runtime;
          if (r.success) {
            ++succ;
            pl_sum += r.path_length;
            pls.push_back(r.path_length);
          }
        }
        row.n = total;
        row.sr = total > 0 ? 100.0 * succ / total : 0.0;
        row.pl_mean = succ > 0 ? pl_sum / succ : 0.0;
        if (succ > 1) {
          double var = 0.0;
          for (double p : pls) var += (p - row.pl_mean) * (p - row.pl_mean);
          row.pl_std = std::sqrt(var / (succ - 1));
        }
        row.runtime_mean = total > 0 ? rt_sum / total : 0.0;
        report.rows.push_back(row);
      }
  report.delta_sr = sensitivity(report.rows);
  return report;
}

// ---- CSV / file output ----

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline void export_episodes_csv(const std::vector<EpisodeRecord>& records,
                                const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "tuner,env,load,run,success,path_length,l_min,sim_runtime,wall_runtime,failure\n";
  for (const auto& r : records)
    f << r.tuner << ',' << r.env << ',' << r.load << ',' << r.run << ','
      << (r.success ? 1 : 0) << ',' << fmt(r.path_length) << ',' << fmt(r.l_min) << ','
      << fmt(r.sim_runtime) << ',' << fmt(r.wall_runtime) << ',' << r.failure << '\n';
}

inline std::vector<EpisodeRecord> parse_episodes_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::vector<EpisodeRecord> out;
  std::string line;
  std::getline(f, line);  // header
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    EpisodeRecord r;
    std::getline(ss, r.tuner, ',');
    std::getline(ss, r.env, ',');
    std::getline(ss, tok, ',');
    r.load = std::stoi(tok);
    std::getline(ss, tok, ',');
    r.run = std::stoi(tok);
    std::getline(ss, tok, ',');
    r.success = tok == "1";
    std::getline(ss, tok, ',');
    r.path_length = std::stod(tok);
    std::getline(ss, tok, ',');
    r.l_min = std::stod(tok);
    std::getline(ss, tok, ',');
    r.sim_runtime = std::stod(tok);
    std::getline(ss, tok, ',');
    r.wall_runtime = std::stod(tok);
    std::getline(ss, r.failure, ',');
    out.push_back(std::move(r));
  }
  return out;
}

inline void export_report_csv(const Report& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "tuner,env,load,n,sr,pl_mean,pl_std,runtime_mean\n";
  for (const auto& r : report.rows)
    f << r.tuner << ',' << r.env << ',' << r.load << ',' << r.n << ',' << fmt(r.sr)
      << ',' << fmt(r.pl_mean) << ',' << fmt(r.pl_std) << ',' << fmt(r.runtime_mean)
      << '\n';
}

inline Report parse_report_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  Report report;
  std::string line;
  std::getline(f, line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    ReportRow r;
    std::getline(ss, r.tuner, ',');
    std::getline(ss, r.env, ',');
    std::getline(ss, tok, ',');
    r.load = std::stoi(tok);
    std::getline(ss, tok, ',');
    r.n = std::stoi(tok);
    std::getline(ss, tok, ',');
    r.sr = std::stod(tok);
    std::getline(ss, tok, ',');
    r.pl_mean = std::stod(tok);
    std::getline(ss, tok, ',');
    r.pl_std = std::stod(tok);
    std::getline(ss, tok, ',');
    r.runtime_mean = std::stod(tok);
    report.rows.push_back(std::move(r));
  }
  report.delta_sr = sensitivity(report.rows);
  return report;
}

// report.csv + summary text + one success-rate-vs-load data file per
// environment.
inline void export_report(const Report& report, const std::string& dir) {
  export_report_csv(report, dir + "/report.csv");

  std::ofstream sum(dir + "/summary.txt");
  if (!sum) throw IoError("cannot open summary for writing");
  sum << "tuner x environment success-rate sensitivity (delta SR, percent)\n";
  for (const auto& [key, v] : report.delta_sr)
    sum << "  " << key.first << " @ " << key.second << ": " << fmt(v) << "\n";
  if (report.infeasible_cells > 0)
    sum << "infeasible cells: " << report.infeasible_cells << "\n";

  std::vector<std::string> envs;
  std::vector<std::string> tuners;
  for (const auto& r : report.rows) {
    if (std::find(envs.begin(), envs.end(), r.env) == envs.end()) envs.push_back(r.env);
    if (std::find(tuners.begin(), tuners.end(), r.tuner) == tuners.end())
      tuners.push_back(r.tuner);
  }
  for (const auto& env : envs) {
    std::ofstream fig(dir + "/fig_sr_" + env + ".csv");
    if (!fig) throw IoError("cannot open figure data for writing");
    fig << "load";
    for (const auto& t : tuners) fig << ',' << t;
    fig << '\n';
    std::vector<int> loads;
    for (const auto& r : report.rows)
      if (r.env == env && std::find(loads.begin(), loads.end(), r.load) == loads.end())
        loads.push_back(r.load);
    std::sort(loads.begin(), loads.end());
    for (int load : loads) {
      fig << load;
      for (const auto& t : tuners) {
        double sr = 0.0;
        for (const auto& r : report.rows)
          if (r.env == env && r.tuner == t && r.load == load) sr = r.sr;
        fig << ',' << fmt(sr);
      }
      fig << '\n';
    }
  }
}

}  // namespace navlab
