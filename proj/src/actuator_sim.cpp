#include "dexhand/actuator_sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dexhand/stats.hpp"

namespace dexhand::sim {

void RawCommand::validate() const {
  auto in_range = [](double v) { return v >= 0.0 && v <= 1000.0; };
  if (!in_range(position) || !in_range(speed) || !in_range(force_limit)) {
    throw std::invalid_argument("RawCommand fields must lie in [0,1000]");
  }
}

double VelocityGain::at(double speed) const {
  if (speed <= 0.0) return 0.0;
  if (speed <= knee_speed) return per_unit_below * speed;
  return offset_above + slope_above * speed;
}

void VelocityGain::validate() const {
  if (per_unit_below <= 0.0 || slope_above <= 0.0 || knee_speed <= 0.0) {
    throw std::invalid_argument("velocity gain must be increasing");
  }
  // continuity at the knee keeps the map monotone
  const double below = per_unit_below * knee_speed;
  const double above = offset_above + slope_above * knee_speed;
  if (std::abs(below - above) > 1e-6 * std::max(1.0, below)) {
    throw std::invalid_argument("velocity gain discontinuous at the knee");
  }
}

void SimConfig::validate() const {
  if (latency_s < 0.0) throw std::invalid_argument("latency must be >= 0");
  if (tick_s <= 0.0) throw std::invalid_argument("tick must be > 0");
  if (contact_stiffness <= 0.0)
    throw std::invalid_argument("contact stiffness must be > 0");
  velocity_gain.validate();
}

void issue_command(ActuatorState& state, const RawCommand& cmd,
                   const SimConfig& config) {
  cmd.validate();
  state.pending.emplace_back(state.time_s + config.latency_s, cmd);
}

ActuatorState step(ActuatorState state, const ContactScene& scene,
                   const SimConfig& config, std::mt19937_64& rng) {
  state.time_s += config.tick_s;

  // commands issued at least one latency ago become active; newest wins
  while (!state.pending.empty() &&
         state.pending.front().first <= state.time_s + 1e-12) {
    state.active = state.pending.front().second;
    state.pending.pop_front();
    state.halted = false;
  }

  // constant-velocity motion toward the target, no pre-deceleration
  if (state.active && !state.halted) {
    const double v = config.velocity_gain.at(state.active->speed);
    if (v > 0.0) {
      const double delta = v * config.tick_s;
      const double target = state.active->position;
      if (state.position > target) {
        state.position = std::max(target, state.position - delta);
      } else if (state.position < target) {
        state.position = std::min(target, state.position + delta);
      }
    }
  }

  // spring force past the obstacle plus per-tick sensor noise
  double penetration = 0.0;
  if (scene.obstacle_present && state.position < scene.contact_position) {
    penetration = scene.contact_position - state.position;
  }
  state.in_contact = penetration > 0.0;
  double force = penetration > 0.0 ? config.contact_stiffness * penetration : 0.0;
  std::normal_distribution<double> noise(0.0, 1.0);
  if (config.sensor_noise_sigma > 0.0) {
    force += config.sensor_noise_sigma * noise(rng);
  } else {
    noise(rng);  // keep the stream aligned across noise settings
  }
  state.measured_force = std::clamp(force, 0.0, 1000.0);

  state.force_history.emplace_back(state.time_s, state.measured_force);
  const double horizon = state.time_s - config.latency_s;
  while (state.force_history.size() > 1 &&
         state.force_history[1].first <= horizon + 1e-12) {
    state.force_history.pop_front();
  }

  // force-limit stop, evaluated on the reading one latency old
  if (state.active && !state.halted) {
    double delayed = 0.0;
    bool have = false;
    for (auto it = state.force_history.rbegin();
         it != state.force_history.rend(); ++it) {
      if (it->first <= horizon + 1e-12) {
        delayed = it->second;
        have = true;
        break;
      }
    }
    if (config.latency_s == 0.0) {
      delayed = state.measured_force;
      have = true;
    }
    if (have && delayed >= state.active->force_limit) {
      state.halted = true;  // hold position, keep reporting penetration force
    }
  }
  return state;
}

void trajectory_to_csv(const std::vector<TrajectoryPoint>& traj,
                       std::ostream& os) {
  os << "time_s,position_raw,force_raw,phase\n";
  for (const auto& p : traj) {
    const char* phase = p.phase == MotionPhase::Free      ? "free"
                        : p.phase == MotionPhase::Contact ? "contact"
                                                          : "halted";
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.6f,%.4f,%.4f,%s\n", p.t_s, p.position,
                  p.force, phase);
    os << buf;
  }
}

namespace {

MotionPhase phase_of(const ActuatorState& st) {
  if (st.halted) return MotionPhase::Halted;
  return st.in_contact ? MotionPhase::Contact : MotionPhase::Free;
}

}  // namespace

StepResponse run_step_response(double target, double speed,
                               const SimConfig& config) {
  config.validate();
  StepResponse out;
  SimConfig quiet = config;
  quiet.sensor_noise_sigma = 0.0;  // free-space position response
  std::mt19937_64 rng(0);
  ActuatorState st;
  ContactScene empty{};
  RawCommand cmd{target, speed, 1000.0};
  issue_command(st, cmd, quiet);

  const double start = st.position;
  const double span = target - start;
  const double t10 = start + 0.1 * span;
  const double t90 = start + 0.9 * span;
  std::optional<double> at10, at90;
  double arrived = -1.0;

  const double t_max = 30.0;
  out.trajectory.push_back({0.0, st.position, 0.0, MotionPhase::Free});
  while (st.time_s < t_max) {
    st = step(st, empty, quiet, rng);
    out.trajectory.push_back({st.time_s, st.position, st.measured_force,
                              phase_of(st)});
    const double progress = (st.position - start) / (span == 0.0 ? 1.0 : span);
    if (!at10 && progress >= 0.1) at10 = st.time_s;
    if (!at90 && progress >= 0.9) at90 = st.time_s;
    if (arrived < 0.0 && std::abs(st.position - target) <= 1e-9) {
      arrived = st.time_s;
      break;
    }
  }
  (void)t10;
  (void)t90;
  if (at10 && at90) out.rise_time_s = *at90 - *at10;
  if (arrived >= 0.0) out.settle_time_s = arrived;  // within band from here on
  return out;
}

SpeedProfile SpeedProfile::constant(double v) {
  SpeedProfile p;
  p.kind = Kind::Constant;
  p.speed = v;
  return p;
}

SpeedProfile SpeedProfile::hybrid(double v_fast, double v_slow, double margin) {
  SpeedProfile p;
  p.kind = Kind::Hybrid;
  p.v_fast = v_fast;
  p.v_slow = v_slow;
  p.switch_margin = margin;
  return p;
}

OvershootResult run_overshoot_trial(const SpeedProfile& profile, double f_set,
                                    const ContactScene& scene,
                                    const SimConfig& config,
                                    std::uint64_t seed) {
  if (!(f_set > 0.0 && f_set <= 1000.0)) {
    throw std::invalid_argument("F_set must lie in (0,1000]");
  }
  config.validate();
  std::mt19937_64 rng(seed);
  ActuatorState st;
  OvershootResult out;

  bool slow_issued = false;
  double q_sw = 0.0;
  if (profile.kind == SpeedProfile::Kind::Constant) {
    issue_command(st, {0.0, profile.speed, f_set}, config);
    slow_issued = true;
  } else {
    const double believed = std::isnan(profile.believed_contact)
                                ? scene.contact_position
                                : profile.believed_contact;
    q_sw = std::min(1000.0, believed + profile.switch_margin);
    issue_command(st, {q_sw, profile.v_fast, f_set}, config);
  }

  double f_max = 0.0;
  const double t_max = 60.0;
  out.trajectory.push_back({0.0, st.position, 0.0, MotionPhase::Free});
  while (st.time_s < t_max) {
    st = step(st, scene, config, rng);
    out.trajectory.push_back({st.time_s, st.position, st.measured_force,
                              phase_of(st)});
    f_max = std::max(f_max, st.measured_force);
    if (!slow_issued && std::abs(st.position - q_sw) <= 2.0) {
      issue_command(st, {0.0, profile.v_slow, f_set}, config);
      slow_issued = true;
    }
    if (st.halted && st.in_contact) {
      out.contacted = true;
      out.completion_s = st.time_s;
      break;
    }
    // free-space command fully executed without ever touching the obstacle
    if (slow_issued && st.active && !st.in_contact &&
        std::abs(st.position - st.active->position) <= 1e-9 &&
        st.pending.empty()) {
      break;
    }
  }
  if (!out.contacted) {
    out.delta_f = 0.0;
    out.f_max = f_max;
    return out;  // distinct no-contact outcome
  }
  out.f_max = f_max;
  out.delta_f = std::max(0.0, f_max - f_set);
  return out;
}

OvershootResult run_completion_timing(const SpeedProfile& profile,
                                      double f_set, const ContactScene& scene,
                                      const SimConfig& config,
                                      std::uint64_t seed) {
  return run_overshoot_trial(profile, f_set, scene, config, seed);
}

TrialBatch run_trial_batch(const SpeedProfile& profile, double f_set,
                           const ContactScene& scene, const SimConfig& config,
                           int n, std::uint64_t seed_base,
                           double onset_jitter_sigma) {
  TrialBatch batch;
  batch.label = profile.kind == SpeedProfile::Kind::Constant
                    ? "constant"
                    : "hybrid";
  batch.speed = profile.kind == SpeedProfile::Kind::Constant ? profile.speed
                                                             : profile.v_slow;
  batch.f_set = f_set;
  batch.n = n;
  std::vector<double> dfs, times;
  for (int i = 0; i < n; ++i) {
    // profile-independent seed so paired comparisons share scenes
    const auto seed = stats::derive_seed(seed_base, static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(f_set), 0);
    ContactScene trial_scene = scene;
    SpeedProfile trial_profile = profile;
    if (onset_jitter_sigma > 0.0 && scene.obstacle_present) {
      std::mt19937_64 jrng(stats::derive_seed(seed, 0x5C, 0, 0));
      std::normal_distribution<double> jitter(0.0, onset_jitter_sigma);
      trial_scene.contact_position =
          std::clamp(scene.contact_position + jitter(jrng), 0.0, 1000.0);
      trial_profile.believed_contact = scene.contact_position;
    }
    const auto r =
        run_overshoot_trial(trial_profile, f_set, trial_scene, config, seed);
    if (r.contacted) {
      dfs.push_back(r.delta_f);
      times.push_back(r.completion_s);
    }
  }
  if (!dfs.empty()) {
    batch.mean_delta_f = stats::mean(dfs);
    batch.var_delta_f = stats::sample_variance(dfs);
    batch.mean_completion_s = stats::mean(times);
  }
  return batch;
}

std::string batches_to_json(const std::vector<TrialBatch>& batches) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& b : batches) {
    nlohmann::json j;
    j["profile"] = b.label;
    j["speed"] = b.speed;
    j["f_set"] = b.f_set;
    j["mean_delta_f"] = b.mean_delta_f;
    j["var_delta_f"] = b.var_delta_f;
    j["mean_completion_s"] = b.mean_completion_s;
    j["n"] = b.n;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace dexhand::sim
