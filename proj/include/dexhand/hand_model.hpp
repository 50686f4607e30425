#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "dexhand/hand_types.hpp"

namespace dexhand::hand {

/// One coupled two-link finger chain. The chain moves in an x-z plane of
/// the hand frame at fixed y; base_orientation tilts the extended
/// direction within that plane. The intermediate joint is rigidly coupled
/// to the proximal one (rate ratio coupling_b) and saturates at the
/// shared joint range.
struct LinkChain {
  double proximal_mm = 0.0;
  double intermediate_mm = 0.0;
  double coupling_b = 1.0;
  Eigen::Vector3d base_mm{0.0, 0.0, 0.0};
  double base_orientation_rad = 0.0;
  double joint_min_rad = 0.0;
  double joint_max_rad = 0.0;
  double ctrl_min = 0.0;
  double ctrl_max = 1000.0;
};

/// Thumb adds yaw (about hand z) and pitch (within the bend plane).
struct ThumbChain {
  LinkChain chain;
  double yaw_min_rad = 0.0, yaw_max_rad = 0.0;
  double pitch_min_rad = 0.0, pitch_max_rad = 0.0;
  double opposition_yaw_rad = 0.0;   // yaw/pitch used by the sweep table
  double opposition_pitch_rad = 0.0;
};

struct FingertipPose {
  Eigen::Vector3d position_mm{0.0, 0.0, 0.0};
  double tilt_rad = 0.0;  // distal-axis rotation relative to the open pose
};

/// Full five-finger parameter set. The shipped defaults are tuned so the
/// simulated hand reproduces the published aggregate geometry: 110 mm max
/// two-finger width closing to 0, 49 deg index tilt span, 12 mm lateral /
/// 7 mm vertical index tip travel, and ~100 mm max width for the
/// middle/ring/pinky pairs.
struct HandParams {
  ThumbChain thumb;
  std::array<LinkChain, 4> fingers;  // index, middle, ring, pinky

  const LinkChain& chain(Finger f) const;
  LinkChain& chain(Finger f);

  /// Throws std::invalid_argument when any invariant fails (positive
  /// lengths, ctrl_min < ctrl_max, coupling_b > 0, valid ranges).
  void validate() const;

  static HandParams defaults();
  static HandParams load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// Affine map of the closure scalar onto the control range; exact at both
/// endpoints. Throws on s outside [0,1].
double ctrl_from_scalar(const HandParams& params, Finger finger, double s);

/// Proximal/intermediate joint angles at closure s, including the
/// intermediate-saturation clamp.
struct JointAngles {
  double proximal_rad = 0.0;
  double intermediate_rad = 0.0;
  bool clamped = false;
};
JointAngles joint_angles(const LinkChain& chain, double s);

/// Fingertip pose at closure s; the thumb is evaluated at its opposition
/// yaw/pitch.
FingertipPose fk_fingertip(const HandParams& params, Finger finger, double s);

/// Thumb tip pose for explicit yaw/pitch. Throws on out-of-range yaw or
/// pitch.
FingertipPose thumb_fk(const HandParams& params, double yaw_rad,
                       double pitch_rad, double s);

struct SweepSample {
  double s = 0.0;
  std::array<FingertipPose, 5> tips;  // kAllFingers order
};

/// Precomputed fingertip sweep over s in [0,1]. The thumb-to-finger
/// xz-distances must be strictly decreasing for every finger pair; build
/// throws std::domain_error otherwise (bad linkage parameters).
class SweepTable {
 public:
  static SweepTable build(const HandParams& params, int resolution);

  int resolution() const { return static_cast<int>(samples_.size()); }
  const std::vector<SweepSample>& samples() const { return samples_; }
  const HandParams& params() const { return params_; }

  /// Linear interpolation between bracketing samples.
  FingertipPose pose(double s, Finger finger) const;

  /// Interpolated xz-plane distance between two fingertips at closure s.
  double xz_distance(double s, Finger a, Finger b) const;

  /// Distance endpoints for a thumb-finger pair: {D(1), D(0)}.
  std::pair<double, double> pair_width_range(Finger finger) const;

  /// CSV export: s,finger_id,x_mm,y_mm,z_mm,tilt_rad.
  void to_csv(std::ostream& os) const;

 private:
  HandParams params_;
  std::vector<SweepSample> samples_;
};

/// Named width-range constants the paper reports for the 3/4/5-finger
/// pinch: the table lists 0 mm minimum, the text states 7 mm. Both are
/// kept; the discrepancy is left unresolved.
inline constexpr double kTableMinWidth345Mm = 0.0;
inline constexpr double kTextMinWidth345Mm = 7.0;

}  // namespace dexhand::hand
