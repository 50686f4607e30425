#pragma once

#include <Eigen/Core>
#include <array>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dexhand/hand_model.hpp"

namespace dexhand::plan {

enum class Solver { Analytic, QP };

struct GraspSpec {
  double width_mm = 0.0;
  int n_fingers = 2;  // 2..5
  double force_target_n = 6.0;
};

/// Differential-IK settings. The solver runs in meters; damping and the
/// per-iteration step limit are standard differential-IK choices, only the
/// convergence thresholds are fixed by the characterization.
struct QPSettings {
  double tip_tolerance_m = 5e-4;
  int max_iterations = 1000;
  double step_limit_rad = 0.05;
  double damping = 1e-6;
};

struct ThumbCtrls {
  double yaw_raw = 0.0;
  double pitch_raw = 0.0;
  double bend_raw = 0.0;
};

struct GraspSolution {
  double s_star = 0.0;
  double theta_star_rad = 0.0;
  ThumbCtrls thumb_ctrls;
  std::map<Finger, double> finger_ctrls;  // active non-thumb fingers, raw
  double z_span_mm = 0.0;
  double tip_error_mm = 0.0;
  Solver solver = Solver::Analytic;
  int iterations = 0;

  int n_fingers = 2;
  double width_mm = 0.0;
  /// Planned contact points in the grasp (tilted) frame, one per active
  /// tip, thumb first. For the analytic solver the non-thumb planned
  /// points are the fingertip positions themselves projected onto the
  /// ideal contact plane; tip_error measures FK tips against these.
  std::vector<Eigen::Vector3d> planned_contacts_mm;
  std::vector<Finger> active;         // thumb first
  double grasp_plane_z_mm = 0.0;      // contact plane height, tilted frame
  double face_x_mm = 0.0;             // finger-side face, tilted frame
};

class WidthRangeError : public std::domain_error {
 public:
  WidthRangeError(double w, double lo, double hi, int n);
  double requested, lo, hi;
  int n_fingers;
};

/// theta* = atan2(-d_z, d_x). Throws std::domain_error when both
/// components vanish.
double tilt_from_d(const Eigen::Vector3d& d);

/// Rotation about y that levels the thumb-to-reference vector: the
/// returned frame has d_z' = 0 and d_x' = W.
Eigen::Vector3d apply_tilt(double theta, const Eigen::Vector3d& v);

/// Reachable width interval for an n-finger pinch: intersection of the
/// thumb-finger pair ranges of the participating fingers.
std::pair<double, double> reachable_range(const hand::SweepTable& table,
                                          int n_fingers);

/// Closure-scalar root find on the reference (index) pair plus the
/// coplanarity tilt; non-thumb fingers share s*, the thumb is solved
/// independently against the reference tip. Throws WidthRangeError.
GraspSolution solve_width_analytic(const hand::SweepTable& table,
                                   const GraspSpec& spec);

/// Differential-IK validation path: velocity-level QP (damped least
/// squares with linearized coupling rows and active bound clamping)
/// iterated from the open hand toward the ideal contact points derived
/// from the analytic solution.
GraspSolution solve_width_qp(const hand::SweepTable& table,
                             const GraspSpec& spec,
                             const QPSettings& settings = {});

/// Recomputes (z_span, tip_error) of a solution from forward kinematics;
/// matches the solver-reported values.
std::pair<double, double> grasp_quality(const GraspSolution& solution,
                                        const hand::SweepTable& table);

/// Mean |z - plane_z| over tips; the plane is fixed by the caller.
double z_span_about_plane(const std::vector<Eigen::Vector3d>& tips_mm,
                          double plane_z_mm);

std::string solution_to_json(const GraspSolution& s);

}  // namespace dexhand::plan
