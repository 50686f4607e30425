#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "dexhand/actuator_sim.hpp"
#include "dexhand/calibration.hpp"

namespace dexhand::ctrl {

/// Bimodal speed-force policy: fast free-space pre-position to a switch
/// point short of the goal, then slow contact approach until the
/// calibrated force target is reached.
struct HybridPolicy {
  double v_fast = 1000.0;
  double v_slow = 25.0;
  double switch_margin = 25.0;   // raw units; ~3.3 sigma of contact onset
  double force_target_n = 0.0;   // metric target F*
  double q_goal = 0.0;           // commanded grasp position, raw units
};

enum class ControllerPhase { FastApproach, SlowContact, Hold, Released };

const char* to_string(ControllerPhase p);

struct SwitchPoint {
  double q_sw = 0.0;
  bool clamped = false;
};

/// q_sw = q_g + margin, clamped to [0,1000].
SwitchPoint switch_point(double q_goal, double margin = 25.0);

/// One controller decision. Phases only ever advance
/// FastApproach -> SlowContact -> Hold (-> Released externally).
/// Throws std::invalid_argument when no calibration model is supplied.
std::pair<sim::RawCommand, ControllerPhase> tick(
    ControllerPhase phase, const HybridPolicy& policy, double sensed_position,
    double sensed_force_n, const std::optional<cal::CalibrationModel>& model);

/// Spike-then-drop force-event detector for release gating. Armed ->
/// SpikeSeen when force exceeds baseline + k*sigma; SpikeSeen ->
/// Triggered when it falls back below. Triggers at most once.
struct ReleaseDetector {
  enum class State { Armed, SpikeSeen, Triggered };
  enum class DropRule { RecrossThreshold, DropFromPeak };

  double baseline_n = 0.0;
  double sigma_n = 0.12;
  double k = 10.0;
  State state = State::Armed;
  double window_s = 0.5;  // baseline estimation window
  DropRule drop_rule = DropRule::RecrossThreshold;
  double peak_n = 0.0;

  double threshold_n() const { return baseline_n + k * sigma_n; }
};

std::pair<ReleaseDetector, bool> release_step(ReleaseDetector det,
                                              double force_n, double t_s);

/// Mean force over the first `window_s` seconds of a trace.
double estimate_baseline(const std::vector<std::pair<double, double>>& trace,
                         double window_s = 0.5);

/// Synthetic force trace with ground-truth spike extent for the modality
/// comparison.
struct ReleaseTrace {
  std::vector<std::pair<double, double>> samples;  // (t, force_n)
  double spike_start_s = 0.0;
  double spike_end_s = 0.0;
};

struct ModalityStats {
  int correct = 0;    // triggered inside/after the true spike
  int premature = 0;  // triggered before the spike started
  int missed = 0;     // never triggered
};

/// Runs the detector at the two sensor noise floors over a shared set of
/// trace shapes. Throws std::invalid_argument on mismatched trace lengths.
std::pair<ModalityStats, ModalityStats> compare_release_modalities(
    double finger_sigma_n, double wrist_sigma_n, double k,
    const std::vector<ReleaseTrace>& finger_traces,
    const std::vector<ReleaseTrace>& wrist_traces);

/// Closed-loop grasp: hybrid controller driving the actuator simulator.
struct GraspRunResult {
  bool contacted = false;
  double delta_f_raw = 0.0;
  double peak_force_n = 0.0;
  double completion_s = 0.0;   // command to force target reached
  std::vector<sim::TrajectoryPoint> trajectory;
  std::vector<ControllerPhase> phases;                 // one per point
  std::vector<std::pair<double, double>> commands;     // (cmd_pos, cmd_speed)
};

GraspRunResult run_hybrid_grasp(const HybridPolicy& policy,
                                const cal::CalibrationModel& model,
                                const sim::ContactScene& scene,
                                const sim::SimConfig& config,
                                std::uint64_t seed,
                                double max_sim_s = 30.0);

/// Constant-speed closed-loop reference run (same stop criterion).
GraspRunResult run_constant_grasp(double speed, double q_goal,
                                  double force_target_n,
                                  const cal::CalibrationModel& model,
                                  const sim::ContactScene& scene,
                                  const sim::SimConfig& config,
                                  std::uint64_t seed, double max_sim_s = 60.0);

/// CSV export: t_s,phase,cmd_pos,cmd_speed,sensed_force_n.
void phase_trace_to_csv(const GraspRunResult& run, std::ostream& os);

}  // namespace dexhand::ctrl
