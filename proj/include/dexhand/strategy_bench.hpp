#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dexhand/calibration.hpp"
#include "dexhand/grasp_planner.hpp"
#include "dexhand/hand_model.hpp"
#include "dexhand/hybrid_control.hpp"

namespace dexhand::bench {

enum class Strategy { Naive, Reflex, Iterative };
const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& name);

enum class Category { Rigid, Delicate };

struct ObjectSpec {
  std::string name;
  Category category = Category::Rigid;
  double width_mm = 0.0;
  double grasp_height_mm = 0.0;       // grasp point above ground
  double major_half_len_mm = 0.0;     // half-length of the major axis
  std::optional<double> fragility_n;  // break force, delicate objects
  double mass_kg = 0.1;
  double slip_limit_mm = 10.0;
  double force_target_n = 6.0;
};

struct TrialConfig {
  Strategy strategy = Strategy::Naive;
  double lateral_offset_mm = 0.0;     // sampled U(-30, 30)
  double orientation_jitter_rad = 0.0;
  bool adversarial = false;           // hand level with the grasp-point Z
  double force_target_n = 6.0;
  int n_fingers = 2;
  std::uint64_t seed = 0;
};

enum class FailureMode {
  None,
  GroundCollision,
  PreGraspObjectCollision,
  ForceExceeded,
  Slip,
  Drop
};
const char* to_string(FailureMode m);

struct TrialOutcome {
  bool success = false;
  FailureMode failure_mode = FailureMode::None;
  double grasp_time_s = 0.0;
  std::vector<std::pair<double, double>> force_trace;  // (t_s, force_n)
};

/// Quasi-static execution model constants. Arm-move and width-step
/// durations are fixed model parameters; contact-phase timing comes from
/// the actuator simulation.
struct ExecutionModel {
  double arm_move_s = 4.0;
  double arm_move_jitter_s = 1.0;       // uniform +- on the approach move
  double iterative_step_s = 0.9;
  int iterative_steps = 4;
  double reflex_backstop_s = 1.2;       // thumb placement before closing
  double lift_duration_s = 2.0;         // 20 cm at 0.1 m/s
  double hold_fraction = 0.5;           // Drop below this fraction of F*
  double onset_sigma_raw = 7.5;         // contact-onset repeatability
  double slip_gain = 0.22;              // displacement per unopposed path mm
  double slip_grip_loss = 0.6;          // grip derating per slip fraction
  double reflex_clearance_mm = 20.0;    // lateral clearance, thumb backstop
  double approach_width_extra_mm = 30.0;  // iterative approach width offset
  int arc_samples = 64;                 // ground-collision predicate
};

/// Runs one scripted grasp trial against the kinematic model and the
/// actuator simulator. Width out of planner range throws.
TrialOutcome run_trial(const ObjectSpec& object, const TrialConfig& config,
                       const hand::SweepTable& table,
                       const cal::CalibrationModel& model,
                       const sim::SimConfig& sim_config,
                       const ExecutionModel& exec = {});

/// Pure geometric predicate used by the naive strategy: does any
/// fingertip arc cross below the ground plane while the hand interpolates
/// from the untilted open pose to the planned grasp?
bool naive_ground_collision(const ObjectSpec& object, int n_fingers,
                            const hand::SweepTable& table, int arc_samples);

struct StrategyStats {
  Strategy strategy = Strategy::Naive;
  int successes = 0;
  int trials = 0;
  double rate = 0.0;
  double wilson_low = 0.0;
  double wilson_high = 0.0;
  double mean_grasp_time_s = 0.0;
  double sd_grasp_time_s = 0.0;
  std::map<FailureMode, int> failure_histogram;
  std::map<std::string, std::pair<int, int>> per_category;  // k, n
};

struct StatsReport {
  std::vector<StrategyStats> strategies;
  // pairwise two-proportion tests, key "a_vs_b"
  std::map<std::string, double> p_values;
  double alpha_corrected = 0.0167;
  std::uint64_t seed = 0;
  int trials_per_strategy = 0;

  std::string to_json() const;
  std::string to_csv() const;  // strategy,category,rate,ci_low,ci_high
};

/// 10 approach poses per object (9 randomized + 1 adversarial), repeated
/// to fill trials_per_cell trials per object/strategy. Deterministic given
/// the master seed; per-trial seeds are derived by a splitmix64 rule so
/// trials are order-independent.
StatsReport run_benchmark(const std::vector<ObjectSpec>& objects,
                          const std::vector<Strategy>& strategies,
                          int trials_per_cell, std::uint64_t seed,
                          const hand::SweepTable& table,
                          const cal::CalibrationModel& model,
                          const sim::SimConfig& sim_config,
                          const ExecutionModel& exec = {});

/// n-finger selection: enough fingers to cover the object's major-axis
/// half-length.
int fingers_for_object(const ObjectSpec& object);

struct ForceErrorProfile {
  std::vector<std::pair<double, double>> curve;  // (normalized t, rel err)
  double peak_rel_overshoot = 0.0;
  double settle_fraction = 0.0;  // time fraction after which |err| < 10%
};

/// (F(t) - F*) / F* against time normalized to [0,1]. Throws on an empty
/// trace or a zero target.
ForceErrorProfile force_error_profile(
    const std::vector<std::pair<double, double>>& trace, double f_target_n);

std::vector<ObjectSpec> load_object_catalog(const std::filesystem::path& path);

}  // namespace dexhand::bench
