#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dexhand/actuator_sim.hpp"

using namespace dexhand;
using sim::ActuatorState;
using sim::ContactScene;
using sim::SimConfig;
using sim::SpeedProfile;

namespace {

SimConfig quiet_config() {
  SimConfig c;
  c.sensor_noise_sigma = 0.0;
  return c;
}

// least-squares line fit over (t, x), returns max |residual|
double max_line_residual(const std::vector<sim::TrajectoryPoint>& traj,
                         size_t lo, size_t hi, double* slope_out = nullptr) {
  double st = 0, sx = 0, stt = 0, stx = 0;
  const double n = double(hi - lo);
  for (size_t i = lo; i < hi; ++i) {
    st += traj[i].t_s;
    sx += traj[i].position;
    stt += traj[i].t_s * traj[i].t_s;
    stx += traj[i].t_s * traj[i].position;
  }
  const double slope = (n * stx - st * sx) / (n * stt - st * st);
  const double icept = (sx - slope * st) / n;
  if (slope_out) *slope_out = slope;
  double worst = 0;
  for (size_t i = lo; i < hi; ++i) {
    worst = std::max(worst,
                     std::abs(traj[i].position - (icept + slope * traj[i].t_s)));
  }
  return worst;
}

}  // namespace

TEST_CASE("free-space setpoint is reached exactly and held") {
  const auto cfg = quiet_config();
  const auto r = sim::run_step_response(500.0, 700.0, cfg);
  REQUIRE_FALSE(r.trajectory.empty());
  CHECK(r.trajectory.back().position == doctest::Approx(500.0).epsilon(1e-12));
  REQUIRE(r.settle_time_s.has_value());
}

TEST_CASE("first motion happens one latency after the command") {
  const auto cfg = quiet_config();
  const auto r = sim::run_step_response(500.0, 1000.0, cfg);
  double first_motion = -1.0;
  for (const auto& p : r.trajectory) {
    if (std::abs(p.position - 1000.0) > 1e-12) {
      first_motion = p.t_s;
      break;
    }
  }
  REQUIRE(first_motion > 0.0);
  CHECK(std::abs(first_motion - cfg.latency_s) <= cfg.tick_s + 1e-12);
}

TEST_CASE("free-space motion is affine in time") {
  const auto cfg = quiet_config();
  for (double v : {100.0, 250.0, 1000.0}) {
    const auto r = sim::run_step_response(500.0, v, cfg);
    // segment strictly between latency expiry and arrival
    size_t lo = 0, hi = 0;
    for (size_t i = 0; i < r.trajectory.size(); ++i) {
      const auto& p = r.trajectory[i];
      if (lo == 0 && p.t_s > cfg.latency_s + 2 * cfg.tick_s) lo = i;
      if (p.position > 500.0 + 1e-9) hi = i;
    }
    REQUIRE(hi > lo + 10);
    double slope = 0.0;
    CHECK(max_line_residual(r.trajectory, lo, hi, &slope) < 1.0);
    CHECK(-slope ==
          doctest::Approx(cfg.velocity_gain.at(v)).epsilon(0.01));
  }
}

TEST_CASE("rise times across speeds 100-1000 sit in the measured band") {
  const auto cfg = quiet_config();
  for (double v : {100.0, 250.0, 500.0, 750.0, 1000.0}) {
    const auto r = sim::run_step_response(500.0, v, cfg);
    REQUIRE(r.rise_time_s.has_value());
    CHECK(*r.rise_time_s >= 0.18);
    CHECK(*r.rise_time_s <= 0.30);
    REQUIRE(r.settle_time_s.has_value());
    CHECK(*r.settle_time_s >= 0.27);
    CHECK(*r.settle_time_s <= 0.43);
  }
}

TEST_CASE("speed zero never moves") {
  const auto cfg = quiet_config();
  const auto r = sim::run_step_response(500.0, 0.0, cfg);
  CHECK_FALSE(r.rise_time_s.has_value());
  for (const auto& p : r.trajectory) CHECK(p.position == 1000.0);
}

TEST_CASE("doubling speed in the proportional gain region halves rise time") {
  const auto cfg = quiet_config();
  const auto slow = sim::run_step_response(500.0, 25.0, cfg);
  const auto fast = sim::run_step_response(500.0, 50.0, cfg);
  REQUIRE(slow.rise_time_s.has_value());
  REQUIRE(fast.rise_time_s.has_value());
  CHECK(*fast.rise_time_s ==
        doctest::Approx(*slow.rise_time_s / 2.0).epsilon(0.10));
}

TEST_CASE("causality: no motion before command arrival") {
  SimConfig cfg = quiet_config();
  std::mt19937_64 rng(3);
  ActuatorState st;
  ContactScene empty{};
  // two queued commands with different targets
  sim::issue_command(st, {600.0, 1000.0, 1000.0}, cfg);
  for (int i = 0; i < 40; ++i) {
    st = sim::step(st, empty, cfg, rng);
    if (st.time_s < cfg.latency_s) CHECK(st.position == 1000.0);
  }
  CHECK(st.position < 1000.0);
}

TEST_CASE("constructed no-overshoot case: zero latency, one tick to F_set") {
  SimConfig cfg = quiet_config();
  cfg.latency_s = 0.0;
  const double v = 500.0;
  const double per_tick = cfg.velocity_gain.at(v) * cfg.tick_s;
  // shave a relative epsilon so the one-tick reading sits at (not one ulp
  // below) the limit
  const double f_set = cfg.contact_stiffness * per_tick * (1.0 - 1e-9);
  ContactScene scene{1000.0, true};  // obstacle at the start position
  const auto r =
      sim::run_overshoot_trial(SpeedProfile::constant(v), f_set, scene, cfg, 1);
  REQUIRE(r.contacted);
  CHECK(r.delta_f <= 1e-6);
}

TEST_CASE("overshoot is monotone in speed at zero noise") {
  SimConfig cfg = quiet_config();
  ContactScene scene{400.0, true};
  for (double f_set : {100.0, 250.0, 500.0, 750.0, 1000.0}) {
    double prev = -1.0;
    for (double v : {25.0, 50.0, 100.0, 250.0, 500.0, 750.0, 1000.0}) {
      const auto r = sim::run_overshoot_trial(SpeedProfile::constant(v), f_set,
                                              scene, cfg, 2);
      REQUIRE(r.contacted);
      CHECK(r.delta_f >= prev - 1e-9);
      CHECK(r.delta_f >= 0.0);
      prev = r.delta_f;
    }
  }
}

TEST_CASE("no contact is a distinct outcome") {
  const auto cfg = quiet_config();
  ContactScene beyond{0.0, true};  // obstacle begins at full closure
  const auto r = sim::run_overshoot_trial(SpeedProfile::constant(500.0), 200.0,
                                          ContactScene{0.0, false}, cfg, 9);
  CHECK_FALSE(r.contacted);
  (void)beyond;
}

TEST_CASE("hybrid overshoot tracks constant-25 within 10 percent") {
  SimConfig cfg;  // noise on: paired seeds across both arms
  ContactScene scene{400.0, true};
  for (double f_set : {100.0, 250.0, 500.0, 750.0, 1000.0}) {
    const auto h = sim::run_trial_batch(SpeedProfile::hybrid(), f_set, scene,
                                        cfg, 200, 77);
    const auto c = sim::run_trial_batch(SpeedProfile::constant(25.0), f_set,
                                        scene, cfg, 200, 77);
    const double ref = std::max(c.mean_delta_f, 1.0);
    CHECK(std::abs(h.mean_delta_f - c.mean_delta_f) <= 0.10 * ref + 1e-9);
  }
}

TEST_CASE("hybrid completes faster than constant-25 on every paired seed") {
  SimConfig cfg;
  ContactScene scene{400.0, true};
  for (int i = 0; i < 20; ++i) {
    const auto h =
        sim::run_overshoot_trial(SpeedProfile::hybrid(), 400.0, scene, cfg, 100 + i);
    const auto c = sim::run_overshoot_trial(SpeedProfile::constant(25.0), 400.0,
                                            scene, cfg, 100 + i);
    REQUIRE(h.contacted);
    REQUIRE(c.contacted);
    CHECK(h.completion_s < c.completion_s);
  }
}

TEST_CASE("constant-speed completion time is monotone non-increasing") {
  SimConfig cfg = quiet_config();
  ContactScene scene{400.0, true};
  double prev = 1e9;
  for (double v : {25.0, 50.0, 100.0, 250.0, 500.0, 750.0, 1000.0}) {
    const auto r =
        sim::run_overshoot_trial(SpeedProfile::constant(v), 300.0, scene, cfg, 5);
    REQUIRE(r.contacted);
    CHECK(r.completion_s <= prev + 1e-9);
    prev = r.completion_s;
  }
}

TEST_CASE("obstacle at the start position completes within the delay budget") {
  SimConfig cfg = quiet_config();
  ContactScene scene{1000.0, true};
  const auto r = sim::run_overshoot_trial(SpeedProfile::constant(500.0), 50.0,
                                          scene, cfg, 4);
  REQUIRE(r.contacted);
  // motion starts one latency in; the delayed stop costs a second latency
  CHECK(r.completion_s <= 2.0 * cfg.latency_s + 10.0 * cfg.tick_s);
}

TEST_CASE("trajectories are deterministic for a fixed seed") {
  SimConfig cfg;  // noise on
  ContactScene scene{400.0, true};
  const auto a =
      sim::run_overshoot_trial(SpeedProfile::constant(500.0), 300.0, scene, cfg, 42);
  const auto b =
      sim::run_overshoot_trial(SpeedProfile::constant(500.0), 300.0, scene, cfg, 42);
  REQUIRE(a.trajectory.size() == b.trajectory.size());
  for (size_t i = 0; i < a.trajectory.size(); ++i) {
    CHECK(a.trajectory[i].position == b.trajectory[i].position);
    CHECK(a.trajectory[i].force == b.trajectory[i].force);
  }
  const auto c =
      sim::run_overshoot_trial(SpeedProfile::constant(500.0), 300.0, scene, cfg, 43);
  bool any_diff = c.trajectory.size() != a.trajectory.size();
  for (size_t i = 0; !any_diff && i < std::min(a.trajectory.size(), c.trajectory.size()); ++i) {
    any_diff = a.trajectory[i].force != c.trajectory[i].force;
  }
  CHECK(any_diff);
}

TEST_CASE("command and gain validation") {
  CHECK_THROWS_AS(sim::RawCommand({-1.0, 0.0, 0.0}).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(sim::RawCommand({0.0, 1001.0, 0.0}).validate(),
                  std::invalid_argument);
  sim::VelocityGain g;
  CHECK(g.at(0.0) == 0.0);
  CHECK(g.at(25.0) < g.at(50.0));
  CHECK(g.at(999.0) < g.at(1000.0));
  g.offset_above = 5000.0;  // discontinuous at the knee
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  CHECK_THROWS_AS(sim::run_overshoot_trial(SpeedProfile::constant(10.0), 0.0,
                                           ContactScene{400.0, true},
                                           quiet_config(), 1),
                  std::invalid_argument);
}

TEST_CASE("trajectory csv schema") {
  const auto cfg = quiet_config();
  const auto r = sim::run_step_response(500.0, 500.0, cfg);
  std::ostringstream os;
  sim::trajectory_to_csv(r.trajectory, os);
  CHECK(os.str().rfind("time_s,position_raw,force_raw,phase\n", 0) == 0);
  CHECK(os.str().find(",free") != std::string::npos);
}

TEST_CASE("batch json summary fields") {
  SimConfig cfg;
  ContactScene scene{400.0, true};
  const auto b =
      sim::run_trial_batch(SpeedProfile::constant(100.0), 250.0, scene, cfg, 5, 8);
  CHECK(b.n == 5);
  const auto j = sim::batches_to_json({b});
  CHECK(j.find("\"speed\": 100.0") != std::string::npos);
  CHECK(j.find("\"f_set\": 250.0") != std::string::npos);
  CHECK(j.find("mean_delta_f") != std::string::npos);
}
