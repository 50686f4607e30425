#include "dexhand/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "dexhand/io_util.hpp"

namespace dexhand {

const char* to_string(Finger f) {
  switch (f) {
    case Finger::Thumb: return "thumb";
    case Finger::Index: return "index";
    case Finger::Middle: return "middle";
    case Finger::Ring: return "ring";
    case Finger::Pinky: return "pinky";
  }
  return "?";
}

Finger finger_from_string(const std::string& name) {
  for (Finger f : kAllFingers) {
    if (name == to_string(f)) return f;
  }
  throw std::invalid_argument("unknown finger id: " + name);
}

}  // namespace dexhand

namespace dexhand::hand {

namespace {

constexpr double kPi = std::numbers::pi;

// Planar chain tip offset in the (curl, extension) frame.
void chain_uw(const LinkChain& c, double q_prox, double q_int, double& u,
              double& w) {
  u = c.proximal_mm * std::sin(q_prox) +
      c.intermediate_mm * std::sin(q_prox + q_int);
  w = c.proximal_mm * std::cos(q_prox) +
      c.intermediate_mm * std::cos(q_prox + q_int);
}

void validate_chain(const LinkChain& c, const char* name) {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument(std::string(name) + ": " + what);
  };
  if (!(c.proximal_mm > 0.0) || !(c.intermediate_mm > 0.0)) fail("lengths must be > 0");
  if (!(c.coupling_b > 0.0)) fail("coupling_b must be > 0");
  if (!(c.ctrl_min < c.ctrl_max)) fail("requires ctrl_min < ctrl_max");
  if (!(c.joint_min_rad < c.joint_max_rad)) fail("empty joint range");
  if (!c.base_mm.allFinite()) fail("non-finite base position");
}

}  // namespace

const LinkChain& HandParams::chain(Finger f) const {
  if (f == Finger::Thumb) return thumb.chain;
  return fingers[static_cast<int>(f) - 1];
}

LinkChain& HandParams::chain(Finger f) {
  if (f == Finger::Thumb) return thumb.chain;
  return fingers[static_cast<int>(f) - 1];
}

void HandParams::validate() const {
  validate_chain(thumb.chain, "thumb");
  const char* names[] = {"index", "middle", "ring", "pinky"};
  for (int i = 0; i < 4; ++i) validate_chain(fingers[i], names[i]);
  if (!(thumb.yaw_min_rad < thumb.yaw_max_rad) ||
      !(thumb.pitch_min_rad < thumb.pitch_max_rad)) {
    throw std::invalid_argument("thumb: empty yaw/pitch range");
  }
  if (thumb.opposition_yaw_rad < thumb.yaw_min_rad ||
      thumb.opposition_yaw_rad > thumb.yaw_max_rad ||
      thumb.opposition_pitch_rad < thumb.pitch_min_rad ||
      thumb.opposition_pitch_rad > thumb.pitch_max_rad) {
    throw std::invalid_argument("thumb: opposition pose out of range");
  }
}

HandParams HandParams::defaults() {
  // Tuned offline against the published aggregates (width ranges, tilt
  // span, tip travel); see README for the targets these reproduce.
  HandParams p;
  auto mk = [](double l1, double l2, double phi, double bx, double by,
               double bz) {
    LinkChain c;
    c.proximal_mm = l1;
    c.intermediate_mm = l2;
    c.coupling_b = 1.0;
    c.base_mm = {bx, by, bz};
    c.base_orientation_rad = phi;
    c.joint_min_rad = 0.0;
    c.joint_max_rad = 0.4276;
    c.ctrl_min = 0.0;
    c.ctrl_max = 1000.0;
    return c;
  };
  p.fingers[0] = mk(18.75, 7.25, 0.2223, 0.0, 21.0, 0.0);
  p.fingers[1] = mk(17.050730, 6.592949, 0.805903, -1.649772, 7.0, 11.473978);
  p.fingers[2] = mk(15.813714, 6.114636, 0.700157, 1.743040, -7.0, 8.984132);
  p.fingers[3] = mk(14.728655, 5.695080, 0.534324, 6.446389, -21.0, 5.221795);

  p.thumb.chain = mk(57.85, 43.05, -0.0999, 96.76, 15.4, -31.66);
  p.thumb.chain.joint_max_rad = 0.7776;
  p.thumb.yaw_min_rad = kPi - 0.35;
  p.thumb.yaw_max_rad = kPi + 0.35;
  p.thumb.pitch_min_rad = -0.3;
  p.thumb.pitch_max_rad = 0.3;
  p.thumb.opposition_yaw_rad = kPi;
  p.thumb.opposition_pitch_rad = 0.0;
  return p;
}

namespace {

void put_chain(io::KeyValueFile& kv, const std::string& prefix,
               const LinkChain& c) {
  kv.set_double(prefix + ".proximal_mm", c.proximal_mm);
  kv.set_double(prefix + ".intermediate_mm", c.intermediate_mm);
  kv.set_double(prefix + ".coupling_b", c.coupling_b);
  kv.set_double(prefix + ".base_x_mm", c.base_mm.x());
  kv.set_double(prefix + ".base_y_mm", c.base_mm.y());
  kv.set_double(prefix + ".base_z_mm", c.base_mm.z());
  kv.set_double(prefix + ".base_orientation_rad", c.base_orientation_rad);
  kv.set_double(prefix + ".joint_min_rad", c.joint_min_rad);
  kv.set_double(prefix + ".joint_max_rad", c.joint_max_rad);
  kv.set_double(prefix + ".ctrl_min", c.ctrl_min);
  kv.set_double(prefix + ".ctrl_max", c.ctrl_max);
}

LinkChain get_chain(const io::KeyValueFile& kv, const std::string& prefix) {
  LinkChain c;
  c.proximal_mm = kv.get_double(prefix + ".proximal_mm");
  c.intermediate_mm = kv.get_double(prefix + ".intermediate_mm");
  c.coupling_b = kv.get_double(prefix + ".coupling_b");
  c.base_mm = {kv.get_double(prefix + ".base_x_mm"),
               kv.get_double(prefix + ".base_y_mm"),
               kv.get_double(prefix + ".base_z_mm")};
  c.base_orientation_rad = kv.get_double(prefix + ".base_orientation_rad");
  c.joint_min_rad = kv.get_double(prefix + ".joint_min_rad");
  c.joint_max_rad = kv.get_double(prefix + ".joint_max_rad");
  c.ctrl_min = kv.get_double(prefix + ".ctrl_min");
  c.ctrl_max = kv.get_double(prefix + ".ctrl_max");
  return c;
}

}  // namespace

HandParams HandParams::load(const std::filesystem::path& path) {
  const auto kv = io::KeyValueFile::load(path);
  HandParams p;
  p.thumb.chain = get_chain(kv, "thumb");
  p.thumb.yaw_min_rad = kv.get_double("thumb.yaw_min_rad");
  p.thumb.yaw_max_rad = kv.get_double("thumb.yaw_max_rad");
  p.thumb.pitch_min_rad = kv.get_double("thumb.pitch_min_rad");
  p.thumb.pitch_max_rad = kv.get_double("thumb.pitch_max_rad");
  p.thumb.opposition_yaw_rad = kv.get_double("thumb.opposition_yaw_rad");
  p.thumb.opposition_pitch_rad = kv.get_double("thumb.opposition_pitch_rad");
  const char* names[] = {"index", "middle", "ring", "pinky"};
  for (int i = 0; i < 4; ++i) p.fingers[i] = get_chain(kv, names[i]);
  p.validate();
  return p;
}

void HandParams::save(const std::filesystem::path& path) const {
  io::KeyValueFile kv;
  put_chain(kv, "thumb", thumb.chain);
  kv.set_double("thumb.yaw_min_rad", thumb.yaw_min_rad);
  kv.set_double("thumb.yaw_max_rad", thumb.yaw_max_rad);
  kv.set_double("thumb.pitch_min_rad", thumb.pitch_min_rad);
  kv.set_double("thumb.pitch_max_rad", thumb.pitch_max_rad);
  kv.set_double("thumb.opposition_yaw_rad", thumb.opposition_yaw_rad);
  kv.set_double("thumb.opposition_pitch_rad", thumb.opposition_pitch_rad);
  const char* names[] = {"index", "middle", "ring", "pinky"};
  for (int i = 0; i < 4; ++i) put_chain(kv, names[i], fingers[i]);
  kv.save(path);
}

double ctrl_from_scalar(const HandParams& params, Finger finger, double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("closure scalar outside [0,1]");
  }
  const LinkChain& c = params.chain(finger);
  if (s == 0.0) return c.ctrl_min;
  if (s == 1.0) return c.ctrl_max;
  return c.ctrl_min + s * (c.ctrl_max - c.ctrl_min);
}

JointAngles joint_angles(const LinkChain& chain, double s) {
  JointAngles ja;
  ja.proximal_rad =
      chain.joint_min_rad + s * (chain.joint_max_rad - chain.joint_min_rad);
  const double raw_int = chain.coupling_b * ja.proximal_rad;
  ja.intermediate_rad =
      std::clamp(raw_int, chain.joint_min_rad, chain.joint_max_rad);
  ja.clamped = raw_int != ja.intermediate_rad;
  return ja;
}

namespace {

FingertipPose finger_pose(const LinkChain& c, double s) {
  const JointAngles ja = joint_angles(c, s);
  double u, w;
  chain_uw(c, ja.proximal_rad, ja.intermediate_rad, u, w);
  const double phi = c.base_orientation_rad;
  FingertipPose pose;
  pose.position_mm = c.base_mm + Eigen::Vector3d(u * std::cos(phi) + w * std::sin(phi),
                                                 0.0,
                                                 -u * std::sin(phi) + w * std::cos(phi));
  const JointAngles open = joint_angles(c, 0.0);
  pose.tilt_rad = (ja.proximal_rad + ja.intermediate_rad) -
                  (open.proximal_rad + open.intermediate_rad);
  return pose;
}

FingertipPose thumb_pose(const ThumbChain& t, double yaw, double pitch,
                         double s) {
  const LinkChain& c = t.chain;
  const JointAngles ja = joint_angles(c, s);
  double u, w;
  chain_uw(c, ja.proximal_rad, ja.intermediate_rad, u, w);
  const double a = c.base_orientation_rad + pitch;
  const double xl = u * std::cos(a) + w * std::sin(a);
  const double zl = -u * std::sin(a) + w * std::cos(a);
  FingertipPose pose;
  pose.position_mm =
      c.base_mm +
      Eigen::Vector3d(xl * std::cos(yaw), xl * std::sin(yaw), zl);
  const JointAngles open = joint_angles(c, 0.0);
  pose.tilt_rad = (ja.proximal_rad + ja.intermediate_rad) -
                  (open.proximal_rad + open.intermediate_rad);
  return pose;
}

}  // namespace

FingertipPose fk_fingertip(const HandParams& params, Finger finger, double s) {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("closure scalar outside [0,1]");
  }
  if (finger == Finger::Thumb) {
    return thumb_pose(params.thumb, params.thumb.opposition_yaw_rad,
                      params.thumb.opposition_pitch_rad, s);
  }
  return finger_pose(params.chain(finger), s);
}

FingertipPose thumb_fk(const HandParams& params, double yaw_rad,
                       double pitch_rad, double s) {
  const ThumbChain& t = params.thumb;
  if (yaw_rad < t.yaw_min_rad || yaw_rad > t.yaw_max_rad) {
    throw std::invalid_argument("thumb yaw out of range");
  }
  if (pitch_rad < t.pitch_min_rad || pitch_rad > t.pitch_max_rad) {
    throw std::invalid_argument("thumb pitch out of range");
  }
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("closure scalar outside [0,1]");
  }
  return thumb_pose(t, yaw_rad, pitch_rad, s);
}

SweepTable SweepTable::build(const HandParams& params, int resolution) {
  if (resolution < 2) {
    throw std::invalid_argument("sweep resolution must be >= 2");
  }
  params.validate();
  SweepTable table;
  table.params_ = params;
  table.samples_.reserve(resolution);
  for (int i = 0; i < resolution; ++i) {
    SweepSample sample;
    sample.s = static_cast<double>(i) / (resolution - 1);
    for (Finger f : kAllFingers) {
      sample.tips[static_cast<int>(f)] = fk_fingertip(params, f, sample.s);
    }
    table.samples_.push_back(std::move(sample));
  }
  // Every thumb-finger pair distance must shrink strictly with closure,
  // otherwise the width solve has no unique root.
  for (Finger f : {Finger::Index, Finger::Middle, Finger::Ring, Finger::Pinky}) {
    double prev = 0.0;
    for (size_t i = 0; i < table.samples_.size(); ++i) {
      const auto& tip_t = table.samples_[i].tips[0].position_mm;
      const auto& tip_f = table.samples_[i].tips[static_cast<int>(f)].position_mm;
      const double d = std::hypot(tip_t.x() - tip_f.x(), tip_t.z() - tip_f.z());
      if (i > 0 && d >= prev) {
        throw std::domain_error(
            std::string("non-monotone thumb-") + to_string(f) +
            " width; bad linkage parameters");
      }
      prev = d;
    }
  }
  return table;
}

namespace {

// bracketing sample pair and interpolation weight for s
struct Bracket {
  size_t i0, i1;
  double t;
};

Bracket bracket_of(const std::vector<SweepSample>& samples, double s) {
  const size_t n = samples.size();
  if (s <= samples.front().s) return {0, 0, 0.0};
  if (s >= samples.back().s) return {n - 1, n - 1, 0.0};
  const double g = s * (n - 1);
  size_t i0 = std::min(static_cast<size_t>(g), n - 2);
  return {i0, i0 + 1, g - static_cast<double>(i0)};
}

}  // namespace

FingertipPose SweepTable::pose(double s, Finger finger) const {
  if (!(s >= 0.0 && s <= 1.0)) {
    throw std::invalid_argument("closure scalar outside [0,1]");
  }
  const Bracket b = bracket_of(samples_, s);
  const auto& p0 = samples_[b.i0].tips[static_cast<int>(finger)];
  const auto& p1 = samples_[b.i1].tips[static_cast<int>(finger)];
  FingertipPose out;
  out.position_mm = p0.position_mm + b.t * (p1.position_mm - p0.position_mm);
  out.tilt_rad = p0.tilt_rad + b.t * (p1.tilt_rad - p0.tilt_rad);
  return out;
}

double SweepTable::xz_distance(double s, Finger a, Finger b) const {
  const auto pa = pose(s, a).position_mm;
  const auto pb = pose(s, b).position_mm;
  return std::hypot(pa.x() - pb.x(), pa.z() - pb.z());
}

std::pair<double, double> SweepTable::pair_width_range(Finger finger) const {
  return {xz_distance(1.0, Finger::Thumb, finger),
          xz_distance(0.0, Finger::Thumb, finger)};
}

void SweepTable::to_csv(std::ostream& os) const {
  os << "s,finger_id,x_mm,y_mm,z_mm,tilt_rad\n";
  char buf[160];
  for (const auto& sample : samples_) {
    for (Finger f : kAllFingers) {
      const auto& tip = sample.tips[static_cast<int>(f)];
      std::snprintf(buf, sizeof(buf), "%.8f,%s,%.6f,%.6f,%.6f,%.8f\n",
                    sample.s, to_string(f), tip.position_mm.x(),
                    tip.position_mm.y(), tip.position_mm.z(), tip.tilt_rad);
      os << buf;
    }
  }
}

}  // namespace dexhand::hand
