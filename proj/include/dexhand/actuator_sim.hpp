#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <vector>

namespace dexhand::sim {

/// Raw-unit command triple as the hand firmware accepts it.
struct RawCommand {
  double position = 0.0;     // [0,1000]; 1000 = fully open, 0 = fully closed
  double speed = 0.0;        // [0,1000]
  double force_limit = 1000; // [0,1000]

  void validate() const;  // throws on out-of-range fields
};

/// Commanded raw speed -> raw position units per second. Proportional
/// below the knee; saturating affine above it. A single affine map cannot
/// reproduce both the narrow measured rise-time band across speeds
/// 100-1000 and proportional scaling at low speeds, so the map is
/// piecewise (continuous and strictly increasing). speed = 0 never moves.
struct VelocityGain {
  double knee_speed = 100.0;
  double per_unit_below = 14.2;   // gain/speed for speed <= knee
  double offset_above = 1338.89;
  double slope_above = 0.8111;

  double at(double speed) const;
  void validate() const;
};

struct SimConfig {
  double latency_s = 0.066;       // command-to-effect dead time
  double tick_s = 1.0 / 163.0;    // sensor/command cycle
  VelocityGain velocity_gain;
  double contact_stiffness = 2.6; // raw force per raw unit of penetration
  double sensor_noise_sigma = 16.0;  // raw units, ~0.12 N at the index slope

  void validate() const;
};

/// Obstacle along the closing direction: positions below contact_position
/// are inside the obstacle (closing means decreasing raw position).
struct ContactScene {
  double contact_position = 0.0;  // [0,1000]
  bool obstacle_present = false;
};

enum class MotionPhase { Free, Contact, Halted };

struct ActuatorState {
  double time_s = 0.0;
  double position = 1000.0;      // continuous raw units
  double measured_force = 0.0;   // raw units, [0,1000]
  std::deque<std::pair<double, RawCommand>> pending;  // (active_at_s, cmd)
  std::optional<RawCommand> active;
  bool in_contact = false;
  bool halted = false;
  // measured-force history for the latency-delayed stop decision
  std::deque<std::pair<double, double>> force_history;
};

/// Queues a command; it becomes active one latency after issue.
void issue_command(ActuatorState& state, const RawCommand& cmd,
                   const SimConfig& config);

/// Advances one tick. Motion toward the active target runs at the mapped
/// constant velocity with no deceleration before the target. Penetration
/// past the obstacle produces a spring force plus Gaussian sensor noise.
/// The force-limit stop evaluates the force measured one latency ago, so
/// the finger keeps travelling through the latency window after the true
/// force has crossed the limit.
ActuatorState step(ActuatorState state, const ContactScene& scene,
                   const SimConfig& config, std::mt19937_64& rng);

struct TrajectoryPoint {
  double t_s = 0.0;
  double position = 0.0;
  double force = 0.0;
  MotionPhase phase = MotionPhase::Free;
};

void trajectory_to_csv(const std::vector<TrajectoryPoint>& traj,
                       std::ostream& os);

struct StepResponse {
  std::vector<TrajectoryPoint> trajectory;
  std::optional<double> rise_time_s;    // 10% -> 90% of the step
  std::optional<double> settle_time_s;  // command to within 2% of target
};

/// Free-space step response from the open position toward `target`.
StepResponse run_step_response(double target, double speed,
                               const SimConfig& config);

struct SpeedProfile {
  enum class Kind { Constant, Hybrid };
  Kind kind = Kind::Constant;
  double speed = 1000.0;        // constant mode
  double v_fast = 1000.0;       // hybrid mode
  double v_slow = 25.0;
  double switch_margin = 25.0;  // raw units short of the goal
  // where the controller believes the contact sits; the switch point is
  // placed relative to this, not to the actual (possibly shifted) obstacle
  double believed_contact = std::numeric_limits<double>::quiet_NaN();

  static SpeedProfile constant(double v);
  static SpeedProfile hybrid(double v_fast = 1000.0, double v_slow = 25.0,
                             double margin = 25.0);
};

struct OvershootResult {
  bool contacted = false;  // obstacle never reached (distinct outcome)
  double delta_f = 0.0;    // max measured force - F_set
  double f_max = 0.0;
  double completion_s = 0.0;  // command issue to force-stop settling
  std::vector<TrajectoryPoint> trajectory;
};

/// Drives the finger into the scene obstacle with force limit F_set and
/// reports the overshoot. Deterministic for a fixed seed.
OvershootResult run_overshoot_trial(const SpeedProfile& profile, double f_set,
                                    const ContactScene& scene,
                                    const SimConfig& config,
                                    std::uint64_t seed);

/// Same trial, reported as completion time (command to force settling).
OvershootResult run_completion_timing(const SpeedProfile& profile,
                                      double f_set, const ContactScene& scene,
                                      const SimConfig& config,
                                      std::uint64_t seed);

struct TrialBatch {
  std::string label;
  double speed = 0.0;  // commanded constant speed, or v_slow for hybrid
  double f_set = 0.0;
  double mean_delta_f = 0.0;
  double var_delta_f = 0.0;
  double mean_completion_s = 0.0;
  int n = 0;
};

/// N-seed batch of overshoot trials for one grid cell. Each trial
/// re-places the obstacle with the measured contact-onset repeatability
/// (sigma ~ 7.5 raw units); trial seeds depend only on the seed base and
/// index so different profiles pair up on identical scenes.
TrialBatch run_trial_batch(const SpeedProfile& profile, double f_set,
                           const ContactScene& scene, const SimConfig& config,
                           int n, std::uint64_t seed_base,
                           double onset_jitter_sigma = 7.5);

std::string batches_to_json(const std::vector<TrialBatch>& batches);

}  // namespace dexhand::sim
