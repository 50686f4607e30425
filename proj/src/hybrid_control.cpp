#include "dexhand/hybrid_control.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace dexhand::ctrl {

const char* to_string(ControllerPhase p) {
  switch (p) {
    case ControllerPhase::FastApproach: return "fast_approach";
    case ControllerPhase::SlowContact: return "slow_contact";
    case ControllerPhase::Hold: return "hold";
    case ControllerPhase::Released: return "released";
  }
  return "?";
}

SwitchPoint switch_point(double q_goal, double margin) {
  if (q_goal < 0.0 || q_goal > 1000.0) {
    throw std::invalid_argument("q_goal outside [0,1000]");
  }
  const double raw = q_goal + margin;
  if (raw > 1000.0) return {1000.0, true};
  if (raw < 0.0) return {0.0, true};
  return {raw, false};
}

std::pair<sim::RawCommand, ControllerPhase> tick(
    ControllerPhase phase, const HybridPolicy& policy, double sensed_position,
    double sensed_force_n, const std::optional<cal::CalibrationModel>& model) {
  if (!model.has_value()) {
    throw std::invalid_argument("hybrid tick requires a calibration model");
  }
  const double limit_raw = cal::newtons_to_raw(*model, policy.force_target_n).raw;
  const double q_sw = switch_point(policy.q_goal, policy.switch_margin).q_sw;

  switch (phase) {
    case ControllerPhase::FastApproach: {
      // reached (or already past) the switch point: drop to contact speed
      if (sensed_position <= q_sw + 2.0) {
        return {{0.0, policy.v_slow, limit_raw}, ControllerPhase::SlowContact};
      }
      return {{q_sw, policy.v_fast, limit_raw}, ControllerPhase::FastApproach};
    }
    case ControllerPhase::SlowContact: {
      if (sensed_force_n >= policy.force_target_n) {
        return {{sensed_position, 0.0, limit_raw}, ControllerPhase::Hold};
      }
      // full-closure command; the force limit is the stop
      return {{0.0, policy.v_slow, limit_raw}, ControllerPhase::SlowContact};
    }
    case ControllerPhase::Hold:
      return {{sensed_position, 0.0, limit_raw}, ControllerPhase::Hold};
    case ControllerPhase::Released:
      return {{1000.0, policy.v_fast, 1000.0}, ControllerPhase::Released};
  }
  throw std::logic_error("unreachable controller phase");
}

std::pair<ReleaseDetector, bool> release_step(ReleaseDetector det,
                                              double force_n, double t_s) {
  (void)t_s;
  bool triggered = false;
  switch (det.state) {
    case ReleaseDetector::State::Armed:
      if (force_n > det.threshold_n()) {
        det.state = ReleaseDetector::State::SpikeSeen;
        det.peak_n = force_n;
      }
      break;
    case ReleaseDetector::State::SpikeSeen: {
      det.peak_n = std::max(det.peak_n, force_n);
      const bool dropped =
          det.drop_rule == ReleaseDetector::DropRule::RecrossThreshold
              ? force_n < det.threshold_n()
              : force_n < det.peak_n - det.k * det.sigma_n;
      if (dropped) {
        det.state = ReleaseDetector::State::Triggered;
        triggered = true;
      }
      break;
    }
    case ReleaseDetector::State::Triggered:
      break;  // at most once per detector lifetime
  }
  return {det, triggered};
}

double estimate_baseline(const std::vector<std::pair<double, double>>& trace,
                         double window_s) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  const double t0 = trace.front().first;
  double acc = 0.0;
  int n = 0;
  for (const auto& [t, f] : trace) {
    if (t - t0 > window_s) break;
    acc += f;
    ++n;
  }
  return acc / std::max(1, n);
}

namespace {

struct TriggerOutcome {
  bool triggered = false;
  double at_s = 0.0;
};

TriggerOutcome run_detector(const ReleaseTrace& trace, double sigma, double k) {
  ReleaseDetector det;
  det.sigma_n = sigma;
  det.k = k;
  det.baseline_n = estimate_baseline(trace.samples, det.window_s);
  TriggerOutcome out;
  for (const auto& [t, f] : trace.samples) {
    auto [next, fired] = release_step(det, f, t);
    det = next;
    if (fired) {
      out.triggered = true;
      out.at_s = t;
      break;
    }
  }
  return out;
}

ModalityStats classify(const std::vector<ReleaseTrace>& traces, double sigma,
                       double k) {
  ModalityStats st;
  for (const auto& tr : traces) {
    const auto r = run_detector(tr, sigma, k);
    if (!r.triggered) {
      ++st.missed;
    } else if (r.at_s < tr.spike_start_s) {
      ++st.premature;
    } else {
      ++st.correct;
    }
  }
  return st;
}

}  // namespace

std::pair<ModalityStats, ModalityStats> compare_release_modalities(
    double finger_sigma_n, double wrist_sigma_n, double k,
    const std::vector<ReleaseTrace>& finger_traces,
    const std::vector<ReleaseTrace>& wrist_traces) {
  if (finger_traces.size() != wrist_traces.size()) {
    throw std::invalid_argument("modality trace counts differ");
  }
  for (size_t i = 0; i < finger_traces.size(); ++i) {
    if (finger_traces[i].samples.size() != wrist_traces[i].samples.size()) {
      throw std::invalid_argument("mismatched trace lengths");
    }
  }
  return {classify(finger_traces, finger_sigma_n, k),
          classify(wrist_traces, wrist_sigma_n, k)};
}

namespace {

GraspRunResult run_loop(const HybridPolicy& policy, ControllerPhase phase0,
                        const cal::CalibrationModel& model,
                        const sim::ContactScene& scene,
                        const sim::SimConfig& config, std::uint64_t seed,
                        double max_sim_s) {
  GraspRunResult out;
  std::mt19937_64 rng(seed);
  sim::ActuatorState st;
  ControllerPhase phase = phase0;
  std::optional<sim::RawCommand> last_cmd;
  const double limit_raw =
      cal::newtons_to_raw(model, policy.force_target_n).raw;
  double f_max_raw = 0.0;
  // run on past the hold decision so the latency-window overshoot and the
  // settled plateau end up in the trace
  const double settle_extra_s = 2.0 * config.latency_s + 10.0 * config.tick_s;
  double hold_at_s = -1.0;

  while (st.time_s < max_sim_s) {
    const double sensed_force_n =
        cal::raw_to_newtons(model, st.measured_force).newtons;
    auto [cmd, next] = tick(phase, policy, st.position, sensed_force_n,
                            std::optional<cal::CalibrationModel>(model));
    const bool reached_hold =
        next == ControllerPhase::Hold && phase != ControllerPhase::Hold;
    phase = next;
    if (!last_cmd || cmd.position != last_cmd->position ||
        cmd.speed != last_cmd->speed ||
        cmd.force_limit != last_cmd->force_limit) {
      sim::issue_command(st, cmd, config);
      last_cmd = cmd;
    }
    st = sim::step(st, scene, config, rng);
    f_max_raw = std::max(f_max_raw, st.measured_force);
    out.trajectory.push_back({st.time_s, st.position, st.measured_force,
                              st.halted ? sim::MotionPhase::Halted
                              : st.in_contact ? sim::MotionPhase::Contact
                                              : sim::MotionPhase::Free});
    out.phases.push_back(phase);
    out.commands.emplace_back(cmd.position, cmd.speed);
    if (st.in_contact) out.contacted = true;
    if (reached_hold) {
      out.completion_s = st.time_s;
      hold_at_s = st.time_s;
    }
    if (hold_at_s >= 0.0 && st.time_s >= hold_at_s + settle_extra_s) break;
  }
  out.peak_force_n = cal::raw_to_newtons(model, f_max_raw).newtons;
  out.delta_f_raw = std::max(0.0, f_max_raw - limit_raw);
  return out;
}

}  // namespace

GraspRunResult run_hybrid_grasp(const HybridPolicy& policy,
                                const cal::CalibrationModel& model,
                                const sim::ContactScene& scene,
                                const sim::SimConfig& config,
                                std::uint64_t seed, double max_sim_s) {
  return run_loop(policy, ControllerPhase::FastApproach, model, scene, config,
                  seed, max_sim_s);
}

GraspRunResult run_constant_grasp(double speed, double q_goal,
                                  double force_target_n,
                                  const cal::CalibrationModel& model,
                                  const sim::ContactScene& scene,
                                  const sim::SimConfig& config,
                                  std::uint64_t seed, double max_sim_s) {
  HybridPolicy p;
  p.v_fast = speed;
  p.v_slow = speed;
  p.switch_margin = 25.0;
  p.force_target_n = force_target_n;
  p.q_goal = q_goal;
  // constant speed in both phases reduces to a single-speed closure
  return run_loop(p, ControllerPhase::SlowContact, model, scene, config, seed,
                  max_sim_s);
}

void phase_trace_to_csv(const GraspRunResult& run, std::ostream& os) {
  os << "t_s,phase,cmd_pos,cmd_speed,sensed_force_n\n";
  for (size_t i = 0; i < run.trajectory.size(); ++i) {
    const auto& p = run.trajectory[i];
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.6f,%s,%.2f,%.2f,%.6f\n", p.t_s,
                  to_string(run.phases[i]), run.commands[i].first,
                  run.commands[i].second, p.force);
    os << buf;
  }
}

}  // namespace dexhand::ctrl
