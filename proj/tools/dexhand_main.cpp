#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "dexhand/calibration.hpp"
#include "dexhand/grasp_planner.hpp"
#include "dexhand/hand_model.hpp"
#include "dexhand/hybrid_control.hpp"
#include "dexhand/io_util.hpp"
#include "dexhand/stats.hpp"
#include "dexhand/strategy_bench.hpp"
#include "dexhand/wrench.hpp"

namespace fs = std::filesystem;
using namespace dexhand;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDomain = 3;
constexpr int kExitInternal = 4;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void emit_manifest(const std::string& command, const std::string& config_text,
                   std::uint64_t seed, const std::vector<fs::path>& outputs,
                   const fs::path& manifest_path) {
  io::RunManifest m;
  m.command = command;
  m.config_hash = io::fnv1a_hex(config_text);
  m.seed = seed;
  for (const auto& p : outputs) m.output_paths.push_back(p.string());
  m.timestamp = io::timestamp_utc();
  m.write(manifest_path);
}

int cmd_calibrate(const fs::path& csv, const fs::path& out_json) {
  cal::SweepLoadResult loaded;
  try {
    loaded = cal::load_sweep_csv(csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  for (const auto& issue : loaded.rejected) {
    std::cerr << "warning: " << csv.string() << ":" << issue.line << ": "
              << issue.reason << " (row rejected)\n";
  }
  if (loaded.records.empty()) {
    std::cerr << "error: no valid sweep records in " << csv << "\n";
    return kExitInput;
  }
  const auto models = cal::build_calibration_set(loaded.records);
  std::printf("%-12s %10s %10s %8s  %s\n", "finger", "slope_a", "intercept_b",
              "R^2", "provenance");
  for (const auto& [finger, m] : models) {
    std::printf("%-12s %10.4f %+10.4f %8.4f  %s\n", to_string(finger),
                m.slope_a, m.intercept_b, m.r_squared,
                m.provenance == cal::Provenance::Fitted ? "fitted"
                                                        : "reused_middle");
  }
  write_text(out_json, cal::calibration_set_to_json(models));
  std::ifstream raw(csv, std::ios::binary);
  std::stringstream ss;
  ss << raw.rdbuf();
  emit_manifest("calibrate", ss.str(), 0, {out_json},
                out_json.string() + ".manifest.json");
  return kExitOk;
}

sim::SimConfig default_sim_config() { return sim::SimConfig{}; }

int cmd_characterize(const std::string& mode, const fs::path& out_csv,
                     int trials, std::uint64_t seed,
                     const std::vector<double>& speeds_opt) {
  const sim::SimConfig config = default_sim_config();
  std::ostringstream os;
  const sim::ContactScene scene{400.0, true};
  const std::vector<double> speeds =
      speeds_opt.empty()
          ? std::vector<double>{25, 50, 100, 250, 500, 750, 1000}
          : speeds_opt;
  const std::vector<double> fsets{100, 250, 500, 750, 1000};

  if (mode == "step") {
    os << "speed,rise_s,settle_s\n";
    const std::vector<double> step_speeds =
        speeds_opt.empty() ? std::vector<double>{100, 250, 500, 750, 1000}
                           : speeds_opt;
    for (double v : step_speeds) {
      if (v <= 0.0) {
        std::cerr << "warning: speed 0 never moves; rise undefined\n";
        os << "0,,\n";
        continue;
      }
      const auto r = sim::run_step_response(500.0, v, config);
      os << v << ",";
      if (r.rise_time_s) os << *r.rise_time_s;
      os << ",";
      if (r.settle_time_s) os << *r.settle_time_s;
      os << "\n";
    }
  } else if (mode == "overshoot" || mode == "timing") {
    os << "profile,speed,f_set,mean_delta_f,var_delta_f,mean_completion_s,n\n";
    char buf[160];
    for (double v : speeds) {
      for (double f : fsets) {
        const auto b = sim::run_trial_batch(sim::SpeedProfile::constant(v), f,
                                            scene, config, trials, seed);
        std::snprintf(buf, sizeof(buf), "constant,%g,%g,%.4f,%.4f,%.5f,%d\n",
                      v, f, b.mean_delta_f, b.var_delta_f,
                      b.mean_completion_s, b.n);
        os << buf;
      }
    }
    for (double f : fsets) {
      const auto b = sim::run_trial_batch(sim::SpeedProfile::hybrid(), f,
                                          scene, config, trials, seed);
      std::snprintf(buf, sizeof(buf), "hybrid,25,%g,%.4f,%.4f,%.5f,%d\n", f,
                    b.mean_delta_f, b.var_delta_f, b.mean_completion_s, b.n);
      os << buf;
    }
  } else {
    std::cerr << "error: unknown mode " << mode << "\n";
    return kExitInput;
  }
  write_text(out_csv, os.str());
  emit_manifest("characterize " + mode,
                mode + "/" + std::to_string(trials), seed, {out_csv},
                out_csv.string() + ".manifest.json");
  return kExitOk;
}

int cmd_plan(double width, int n_fingers, const std::string& solver,
             const fs::path& out_json) {
  const auto params = hand::HandParams::defaults();
  const auto table = hand::SweepTable::build(params, 512);
  plan::GraspSpec spec{width, n_fingers, 6.0};
  plan::GraspSolution sol;
  try {
    if (solver == "analytic") {
      sol = plan::solve_width_analytic(table, spec);
    } else if (solver == "qp") {
      sol = plan::solve_width_qp(table, spec);
    } else {
      std::cerr << "error: solver must be analytic or qp\n";
      return kExitInput;
    }
  } catch (const plan::WidthRangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  std::printf("solver      : %s\n", solver.c_str());
  std::printf("s*          : %.6f\n", sol.s_star);
  std::printf("theta*      : %.3f deg\n", sol.theta_star_rad * 180.0 / M_PI);
  std::printf("z-span      : %.3f mm\n", sol.z_span_mm);
  std::printf("tip error   : %.3f mm\n", sol.tip_error_mm);
  std::printf("iterations  : %d\n", sol.iterations);
  write_text(out_json, plan::solution_to_json(sol));
  std::ostringstream cfg;
  cfg << width << "/" << n_fingers << "/" << solver;
  emit_manifest("plan", cfg.str(), 0, {out_json},
                out_json.string() + ".manifest.json");
  return kExitOk;
}

int cmd_bench(const fs::path& config_path, const fs::path& out_dir) {
  io::KeyValueFile cfg;
  try {
    cfg = io::KeyValueFile::load(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  std::vector<bench::ObjectSpec> objects;
  try {
    fs::path catalog = cfg.get("catalog");
    if (catalog.is_relative()) catalog = config_path.parent_path() / catalog;
    objects = bench::load_object_catalog(catalog);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  std::vector<bench::Strategy> strategies;
  {
    std::istringstream ss(cfg.get_or("strategies", "naive,reflex,iterative"));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      strategies.push_back(bench::strategy_from_string(tok));
    }
  }
  const int trials = cfg.has("trials_per_cell") ? cfg.get_int("trials_per_cell") : 10;
  const std::uint64_t seed =
      cfg.has("seed") ? static_cast<std::uint64_t>(cfg.get_int("seed")) : 7;

  const auto params = hand::HandParams::defaults();
  const auto table = hand::SweepTable::build(params, 512);
  const auto loaded = cal::load_sweep_csv(
      [&] {
        fs::path p = cfg.get("calibration");
        if (p.is_relative()) p = config_path.parent_path() / p;
        return p;
      }());
  const auto models = cal::build_calibration_set(loaded.records);
  const auto report =
      bench::run_benchmark(objects, strategies, trials, seed, table,
                           models.at(Finger::Index), default_sim_config());

  // internal consistency: rate must sit inside its own interval and the
  // failure histogram must account for every trial
  for (const auto& st : report.strategies) {
    int total = 0;
    for (const auto& [mode, c] : st.failure_histogram) total += c;
    if (total != st.trials || st.rate < st.wilson_low - 1e-9 ||
        st.rate > st.wilson_high + 1e-9) {
      std::cerr << "error: internal invariant violation in benchmark report\n";
      return kExitInternal;
    }
  }

  fs::create_directories(out_dir);
  write_text(out_dir / "report.json", report.to_json());
  write_text(out_dir / "report.csv", report.to_csv());
  emit_manifest("bench", cfg.to_text(), seed,
                {out_dir / "report.json", out_dir / "report.csv"},
                out_dir / "manifest.json");
  for (const auto& st : report.strategies) {
    std::printf("%-10s %3d/%3d  rate %.3f  CI [%.3f, %.3f]  time %.2f+-%.2f s\n",
                to_string(st.strategy), st.successes, st.trials, st.rate,
                st.wilson_low, st.wilson_high, st.mean_grasp_time_s,
                st.sd_grasp_time_s);
  }
  for (const auto& [pair, p] : report.p_values) {
    std::printf("%-22s p = %.3g\n", pair.c_str(), p);
  }
  return kExitOk;
}

int cmd_wrench(const fs::path& contacts_json, const fs::path& out_json,
               const std::optional<std::string>& task_csv) {
  std::ifstream in(contacts_json);
  if (!in) {
    std::cerr << "error: cannot open " << contacts_json << "\n";
    return kExitInput;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  int m = 8;
  double lambda = 1.0;
  std::vector<wrench::Contact> contacts;
  try {
    contacts = wrench::contacts_from_json(ss.str(), m, lambda);
  } catch (const std::exception& e) {
    std::cerr << "error: malformed contact JSON: " << e.what() << "\n";
    return kExitInput;
  }
  const auto gws = wrench::build_gws(contacts, m, lambda);
  const auto verdict = wrench::force_closure(gws, 4096);
  std::optional<wrench::FeasibilityResult> task;
  if (task_csv) {
    const auto parts = io::split_csv_line(*task_csv);
    if (parts.size() != 6) {
      std::cerr << "error: task wrench needs 6 components\n";
      return kExitInput;
    }
    wrench::Vector6d w;
    for (int i = 0; i < 6; ++i) w[i] = std::stod(parts[i]);
    task = wrench::task_wrench_feasible(gws, w);
  }
  std::printf("force closure : %s\n", verdict.force_closure ? "yes" : "no");
  std::printf("epsilon       : %.6f (at %d directions, span rank %d)\n",
              verdict.epsilon_lower_bound, verdict.direction_samples,
              verdict.span_rank);
  if (task) {
    const char* t = task->verdict == wrench::Feasibility::Feasible
                        ? "feasible"
                        : task->verdict == wrench::Feasibility::Infeasible
                              ? "infeasible"
                              : "marginal";
    std::printf("task wrench   : %s\n", t);
  }
  write_text(out_json,
             wrench::verdict_to_json(verdict, task ? &*task : nullptr));
  emit_manifest("wrench", ss.str(), 0, {out_json},
                out_json.string() + ".manifest.json");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coupled-linkage hand characterization, planning and "
               "benchmarking toolkit"};
  app.require_subcommand(1);

  // calibrate
  std::string cal_csv, cal_out = "calibration.json";
  auto* c1 = app.add_subcommand("calibrate", "fit raw->Newton force models");
  c1->add_option("sweep_csv", cal_csv, "sweep CSV file")->required();
  c1->add_option("--out", cal_out, "model JSON output");

  // characterize
  std::string ch_mode, ch_out = "characterize.csv";
  int ch_trials = 20;
  std::uint64_t ch_seed = 1;
  std::vector<double> ch_speeds;
  auto* c2 = app.add_subcommand("characterize", "actuator dynamics sweeps");
  c2->add_option("--mode", ch_mode, "step|overshoot|timing")->required();
  c2->add_option("--out", ch_out, "CSV output");
  c2->add_option("--trials", ch_trials, "trials per grid cell")
      ->envname("DEXHAND_TRIALS");
  c2->add_option("--seed", ch_seed, "master seed")->envname("DEXHAND_SEED");
  c2->add_option("--speeds", ch_speeds, "override speed list");

  // plan
  double pl_width = 0.0;
  int pl_n = 2;
  std::string pl_solver = "analytic", pl_out = "plan.json";
  auto* c3 = app.add_subcommand("plan", "width-to-grasp solve");
  c3->add_option("width_mm", pl_width, "grasp width in mm")->required();
  c3->add_option("n_fingers", pl_n, "fingers in the pinch (2-5)")->required();
  c3->add_option("solver", pl_solver, "analytic|qp");
  c3->add_option("--out", pl_out, "solution JSON output");

  // bench
  std::string be_cfg, be_out = "bench_out";
  auto* c4 = app.add_subcommand("bench", "grasp strategy benchmark");
  c4->add_option("--config", be_cfg, "benchmark key-value config")->required();
  c4->add_option("--out-dir", be_out, "output directory");

  // wrench
  std::string wr_json, wr_out = "wrench.json";
  std::optional<std::string> wr_task;
  auto* c5 = app.add_subcommand("wrench", "grasp wrench space analysis");
  c5->add_option("contacts_json", wr_json, "contact set JSON")->required();
  c5->add_option("--out", wr_out, "verdict JSON output");
  c5->add_option("--task", wr_task, "task wrench fx,fy,fz,tx,ty,tz");

  // defaults
  std::string df_out = "hand.params";
  auto* c6 = app.add_subcommand("defaults", "write default hand parameters");
  c6->add_option("--out", df_out, "parameter file output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c1->parsed()) return cmd_calibrate(cal_csv, cal_out);
    if (c2->parsed())
      return cmd_characterize(ch_mode, ch_out, ch_trials, ch_seed, ch_speeds);
    if (c3->parsed()) return cmd_plan(pl_width, pl_n, pl_solver, pl_out);
    if (c4->parsed()) return cmd_bench(be_cfg, be_out);
    if (c5->parsed()) return cmd_wrench(wr_json, wr_out, wr_task);
    if (c6->parsed()) {
      hand::HandParams::defaults().save(df_out);
      emit_manifest("defaults", "defaults", 0, {df_out},
                    df_out + ".manifest.json");
      return kExitOk;
    }
  } catch (const plan::WidthRangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}
