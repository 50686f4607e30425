#include "dexhand/grasp_planner.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "dexhand/root_find.hpp"

namespace dexhand::plan {

namespace {

using hand::HandParams;
using hand::LinkChain;
using hand::SweepTable;

std::vector<Finger> active_fingers(int n_fingers) {
  // thumb first, then the reference finger and its neighbors
  static const Finger order[] = {Finger::Index, Finger::Middle, Finger::Ring,
                                 Finger::Pinky};
  std::vector<Finger> out{Finger::Thumb};
  for (int i = 0; i + 1 < n_fingers; ++i) out.push_back(order[i]);
  return out;
}

double raw_from_angle(double angle, double lo, double hi) {
  return 1000.0 * (angle - lo) / (hi - lo);
}

double angle_from_raw(double raw, double lo, double hi) {
  return lo + (raw / 1000.0) * (hi - lo);
}

}  // namespace

WidthRangeError::WidthRangeError(double w, double lo_, double hi_, int n)
    : std::domain_error([&] {
        std::ostringstream os;
        os << "width " << w << " mm outside reachable range (" << lo_ << ", "
           << hi_ << ") for " << n << "-finger grasp";
        return os.str();
      }()),
      requested(w), lo(lo_), hi(hi_), n_fingers(n) {}

double tilt_from_d(const Eigen::Vector3d& d) {
  if (std::abs(d.x()) < 1e-12 && std::abs(d.z()) < 1e-12) {
    throw std::domain_error("tilt_from_d: degenerate thumb-reference vector");
  }
  return std::atan2(-d.z(), d.x());
}

Eigen::Vector3d apply_tilt(double theta, const Eigen::Vector3d& v) {
  const double c = std::cos(theta), s = std::sin(theta);
  return {c * v.x() - s * v.z(), v.y(), s * v.x() + c * v.z()};
}

std::pair<double, double> reachable_range(const SweepTable& table,
                                          int n_fingers) {
  if (n_fingers < 2 || n_fingers > 5) {
    throw std::invalid_argument("n_fingers must lie in [2,5]");
  }
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  for (Finger f : active_fingers(n_fingers)) {
    if (f == Finger::Thumb) continue;
    const auto [pmin, pmax] = table.pair_width_range(f);
    lo = std::max(lo, pmin);
    hi = std::min(hi, pmax);
  }
  return {lo, hi};
}

namespace {

struct AnalyticFrame {
  double s_star = 0.0;
  double s_thumb = 0.0;
  double theta = 0.0;
  int iterations = 0;
  std::vector<Finger> active;
  std::vector<Eigen::Vector3d> tilted_tips;  // thumb first, mm
  double face_x = 0.0;
  double plane_z = 0.0;
};

AnalyticFrame analytic_frame(const SweepTable& table, const GraspSpec& spec) {
  const auto [lo, hi] = reachable_range(table, spec.n_fingers);
  const double w = spec.width_mm;
  if (!(w >= lo - 1e-9 && w <= hi + 1e-9)) {
    throw WidthRangeError(w, lo, hi, spec.n_fingers);
  }

  AnalyticFrame fr;
  fr.active = active_fingers(spec.n_fingers);

  // reference solve on the index pair; all non-thumb fingers share s*
  auto fref = [&](double s) {
    return table.xz_distance(s, Finger::Thumb, Finger::Index) - w;
  };
  const auto r1 = brent_root(fref, 0.0, 1.0, 1e-12);
  fr.s_star = std::clamp(r1.root, 0.0, 1.0);

  // thumb solved independently to span the width from the opposing side
  const Eigen::Vector3d ref_tip =
      table.pose(fr.s_star, Finger::Index).position_mm;
  auto fthumb = [&](double t) {
    const Eigen::Vector3d tt = table.pose(t, Finger::Thumb).position_mm;
    return std::hypot(tt.x() - ref_tip.x(), tt.z() - ref_tip.z()) - w;
  };
  const auto r2 = brent_root(fthumb, 0.0, 1.0, 1e-12);
  fr.s_thumb = std::clamp(r2.root, 0.0, 1.0);
  fr.iterations = r1.iterations + r2.iterations;

  const Eigen::Vector3d thumb_tip =
      table.pose(fr.s_thumb, Finger::Thumb).position_mm;
  fr.theta = tilt_from_d(thumb_tip - ref_tip);

  fr.tilted_tips.push_back(apply_tilt(fr.theta, thumb_tip));
  for (size_t i = 1; i < fr.active.size(); ++i) {
    const Eigen::Vector3d tip =
        table.pose(fr.s_star, fr.active[i]).position_mm;
    fr.tilted_tips.push_back(apply_tilt(fr.theta, tip));
  }
  // contact face and grasp plane anchored at the reference finger
  fr.face_x = fr.tilted_tips[1].x();
  fr.plane_z = fr.tilted_tips[1].z();
  return fr;
}

/// Ideal antipodal/plane contact arrangement implied by an analytic frame:
/// finger contacts on the face plane at the grasp height, the thumb
/// opposing one width away. For the two-finger pinch the pair is made
/// collinear (shared y); plane grasps keep each finger's own y.
std::vector<Eigen::Vector3d> ideal_contacts(const AnalyticFrame& fr,
                                            double width_mm) {
  std::vector<Eigen::Vector3d> targets(fr.tilted_tips.size());
  if (fr.tilted_tips.size() == 2) {
    const double ybar = 0.5 * (fr.tilted_tips[0].y() + fr.tilted_tips[1].y());
    targets[0] = {fr.face_x + width_mm, ybar, fr.plane_z};
    targets[1] = {fr.face_x, ybar, fr.plane_z};
  } else {
    targets[0] = {fr.face_x + width_mm, fr.tilted_tips[0].y(), fr.plane_z};
    for (size_t i = 1; i < fr.tilted_tips.size(); ++i) {
      targets[i] = {fr.face_x, fr.tilted_tips[i].y(), fr.plane_z};
    }
  }
  return targets;
}

void fill_ctrls(GraspSolution& sol, const HandParams& params,
                double s_fingers, double s_thumb) {
  const auto& t = params.thumb;
  sol.thumb_ctrls.yaw_raw =
      raw_from_angle(t.opposition_yaw_rad, t.yaw_min_rad, t.yaw_max_rad);
  sol.thumb_ctrls.pitch_raw = raw_from_angle(t.opposition_pitch_rad,
                                             t.pitch_min_rad, t.pitch_max_rad);
  sol.thumb_ctrls.bend_raw =
      hand::ctrl_from_scalar(params, Finger::Thumb, s_thumb);
  for (size_t i = 1; i < sol.active.size(); ++i) {
    sol.finger_ctrls[sol.active[i]] =
        hand::ctrl_from_scalar(params, sol.active[i], s_fingers);
  }
}

}  // namespace

double z_span_about_plane(const std::vector<Eigen::Vector3d>& tips_mm,
                          double plane_z_mm) {
  if (tips_mm.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& t : tips_mm) acc += std::abs(t.z() - plane_z_mm);
  return acc / static_cast<double>(tips_mm.size());
}

GraspSolution solve_width_analytic(const SweepTable& table,
                                   const GraspSpec& spec) {
  const AnalyticFrame fr = analytic_frame(table, spec);
  GraspSolution sol;
  sol.solver = Solver::Analytic;
  sol.n_fingers = spec.n_fingers;
  sol.width_mm = spec.width_mm;
  sol.s_star = fr.s_star;
  sol.theta_star_rad = fr.theta;
  sol.iterations = fr.iterations;
  sol.active = fr.active;
  sol.face_x_mm = fr.face_x;
  sol.grasp_plane_z_mm = fr.plane_z;
  // the analytic plan's contacts are its own fingertip positions
  sol.planned_contacts_mm = fr.tilted_tips;
  sol.tip_error_mm = 0.0;
  sol.z_span_mm = z_span_about_plane(fr.tilted_tips, fr.plane_z);
  fill_ctrls(sol, table.params(), fr.s_star, fr.s_thumb);
  return sol;
}

// ---------------------------------------------------------------------------
// Differential-IK width-to-grasp validation path.
//
// Variables: [base tilt, thumb pitch, thumb proximal, thumb intermediate,
// (proximal, intermediate) per active finger]. Tip rows are stacked with
// one coupling row per chain (velocity-level q_int' = b q_prox'); each step
// solves the damped normal equations and clamps steps that push active
// bounds outward. All positions in meters.
// ---------------------------------------------------------------------------

namespace {

struct QPModel {
  const HandParams* params;
  std::vector<Finger> active;  // thumb first
  int nv = 0;
  Eigen::VectorXd lo, hi;

  int theta_i() const { return 0; }
  int pitch_i() const { return 1; }
  int thumb_prox_i() const { return 2; }
  int thumb_int_i() const { return 3; }
  int finger_prox_i(int k) const { return 4 + 2 * k; }  // k over non-thumb
};

QPModel make_model(const HandParams& params, const std::vector<Finger>& active) {
  QPModel m;
  m.params = &params;
  m.active = active;
  const int nf = static_cast<int>(active.size()) - 1;
  m.nv = 4 + 2 * nf;
  m.lo.resize(m.nv);
  m.hi.resize(m.nv);
  m.lo[0] = -1.2;  m.hi[0] = 1.2;   // base tilt
  m.lo[1] = params.thumb.pitch_min_rad - params.thumb.opposition_pitch_rad;
  m.hi[1] = params.thumb.pitch_max_rad - params.thumb.opposition_pitch_rad;
  const auto& tc = params.thumb.chain;
  m.lo[2] = tc.joint_min_rad;  m.hi[2] = tc.joint_max_rad;
  m.lo[3] = tc.joint_min_rad;  m.hi[3] = tc.joint_max_rad;
  for (int k = 0; k < nf; ++k) {
    const auto& fc = params.chain(active[k + 1]);
    m.lo[4 + 2 * k] = fc.joint_min_rad;
    m.hi[4 + 2 * k] = fc.joint_max_rad;
    m.lo[5 + 2 * k] = fc.joint_min_rad;
    m.hi[5 + 2 * k] = fc.joint_max_rad;
  }
  return m;
}

// world tips (meters) and the stacked tip Jacobian
void qp_fk(const QPModel& m, const Eigen::VectorXd& q,
           std::vector<Eigen::Vector3d>& tips, Eigen::MatrixXd* J) {
  const HandParams& p = *m.params;
  const double theta = q[0];
  const double c = std::cos(theta), s = std::sin(theta);
  auto tilt = [&](const Eigen::Vector3d& v) -> Eigen::Vector3d {
    return {c * v.x() - s * v.z(), v.y(), s * v.x() + c * v.z()};
  };
  auto dtilt = [&](const Eigen::Vector3d& v) -> Eigen::Vector3d {
    return {-s * v.x() - c * v.z(), 0.0, c * v.x() - s * v.z()};
  };

  const int ntips = static_cast<int>(m.active.size());
  tips.resize(ntips);
  if (J) J->setZero(3 * ntips, m.nv);

  // thumb
  {
    const auto& tc = p.thumb.chain;
    const double yaw = p.thumb.opposition_yaw_rad;
    const double qp_ = q[m.thumb_prox_i()], qi = q[m.thumb_int_i()];
    const double u = tc.proximal_mm * std::sin(qp_) +
                     tc.intermediate_mm * std::sin(qp_ + qi);
    const double w = tc.proximal_mm * std::cos(qp_) +
                     tc.intermediate_mm * std::cos(qp_ + qi);
    const double a = tc.base_orientation_rad + p.thumb.opposition_pitch_rad +
                     q[m.pitch_i()];
    const double ca = std::cos(a), sa = std::sin(a);
    const double xl = u * ca + w * sa;
    const double zl = -u * sa + w * ca;
    const Eigen::Vector3d ph =
        (tc.base_mm +
         Eigen::Vector3d(xl * std::cos(yaw), xl * std::sin(yaw), zl)) /
        1000.0;
    tips[0] = tilt(ph);
    if (J) {
      const double du_qp = tc.proximal_mm * std::cos(qp_) +
                           tc.intermediate_mm * std::cos(qp_ + qi);
      const double du_qi = tc.intermediate_mm * std::cos(qp_ + qi);
      const double dw_qp = -tc.proximal_mm * std::sin(qp_) -
                           tc.intermediate_mm * std::sin(qp_ + qi);
      const double dw_qi = -tc.intermediate_mm * std::sin(qp_ + qi);
      auto col_from_plane = [&](double dxl, double dzl) -> Eigen::Vector3d {
        const Eigen::Vector3d dh(dxl * std::cos(yaw), dxl * std::sin(yaw), dzl);
        return tilt(dh / 1000.0);
      };
      const Eigen::Vector3d cp = col_from_plane(du_qp * ca + dw_qp * sa,
                                                -du_qp * sa + dw_qp * ca);
      const Eigen::Vector3d ci = col_from_plane(du_qi * ca + dw_qi * sa,
                                                -du_qi * sa + dw_qi * ca);
      const Eigen::Vector3d cpitch = col_from_plane(zl, -xl);
      J->block<3, 1>(0, m.thumb_prox_i()) = cp;
      J->block<3, 1>(0, m.thumb_int_i()) = ci;
      J->block<3, 1>(0, m.pitch_i()) = cpitch;
      J->block<3, 1>(0, m.theta_i()) = dtilt(ph);
    }
  }

  for (int k = 0; k + 1 < ntips; ++k) {
    const auto& fc = p.chain(m.active[k + 1]);
    const double qp_ = q[m.finger_prox_i(k)], qi = q[m.finger_prox_i(k) + 1];
    const double u = fc.proximal_mm * std::sin(qp_) +
                     fc.intermediate_mm * std::sin(qp_ + qi);
    const double w = fc.proximal_mm * std::cos(qp_) +
                     fc.intermediate_mm * std::cos(qp_ + qi);
    const double phi = fc.base_orientation_rad;
    const double cf = std::cos(phi), sf = std::sin(phi);
    const Eigen::Vector3d ph =
        (fc.base_mm + Eigen::Vector3d(u * cf + w * sf, 0.0, -u * sf + w * cf)) /
        1000.0;
    tips[k + 1] = tilt(ph);
    if (J) {
      const double du_qp = fc.proximal_mm * std::cos(qp_) +
                           fc.intermediate_mm * std::cos(qp_ + qi);
      const double du_qi = fc.intermediate_mm * std::cos(qp_ + qi);
      const double dw_qp = -fc.proximal_mm * std::sin(qp_) -
                           fc.intermediate_mm * std::sin(qp_ + qi);
      const double dw_qi = -fc.intermediate_mm * std::sin(qp_ + qi);
      auto col = [&](double du, double dw) -> Eigen::Vector3d {
        const Eigen::Vector3d dh(du * cf + dw * sf, 0.0, -du * sf + dw * cf);
        return tilt(dh / 1000.0);
      };
      J->block<3, 1>(3 * (k + 1), m.finger_prox_i(k)) = col(du_qp, dw_qp);
      J->block<3, 1>(3 * (k + 1), m.finger_prox_i(k) + 1) = col(du_qi, dw_qi);
      J->block<3, 1>(3 * (k + 1), m.theta_i()) = dtilt(ph);
    }
  }
}

}  // namespace

GraspSolution solve_width_qp(const SweepTable& table, const GraspSpec& spec,
                             const QPSettings& settings) {
  const AnalyticFrame fr = analytic_frame(table, spec);
  const auto targets_mm = ideal_contacts(fr, spec.width_mm);

  const HandParams& params = table.params();
  QPModel m = make_model(params, fr.active);
  const int ntips = static_cast<int>(m.active.size());
  const int nf = ntips - 1;
  const int ncoup = 1 + nf;

  std::vector<Eigen::Vector3d> targets(ntips);
  for (int i = 0; i < ntips; ++i) targets[i] = targets_mm[i] / 1000.0;

  Eigen::VectorXd q = Eigen::VectorXd::Zero(m.nv);  // open hand, no tilt
  for (int i = 0; i < m.nv; ++i) q[i] = std::clamp(q[i], m.lo[i], m.hi[i]);

  std::vector<Eigen::Vector3d> tips;
  Eigen::MatrixXd J;
  int iters = 0;
  bool regularized = false;
  const double tol_m = settings.tip_tolerance_m;

  for (int it = 0; it < settings.max_iterations; ++it) {
    iters = it + 1;
    qp_fk(m, q, tips, &J);
    double worst = 0.0;
    Eigen::VectorXd e(3 * ntips + ncoup);
    for (int i = 0; i < ntips; ++i) {
      const Eigen::Vector3d r = targets[i] - tips[i];
      worst = std::max(worst, r.norm());
      e.segment<3>(3 * i) = r;
    }
    if (worst < tol_m) break;

    // stacked system: tip rows plus linearized rigid-coupling rows
    Eigen::MatrixXd Js(3 * ntips + ncoup, m.nv);
    Js.topRows(3 * ntips) = J;
    Js.bottomRows(ncoup).setZero();
    {
      const double bt = params.thumb.chain.coupling_b;
      Js(3 * ntips, m.thumb_prox_i()) = -bt;
      Js(3 * ntips, m.thumb_int_i()) = 1.0;
      e[3 * ntips] = -(q[m.thumb_int_i()] - bt * q[m.thumb_prox_i()]);
      for (int k = 0; k < nf; ++k) {
        const double b = params.chain(m.active[k + 1]).coupling_b;
        Js(3 * ntips + 1 + k, m.finger_prox_i(k)) = -b;
        Js(3 * ntips + 1 + k, m.finger_prox_i(k) + 1) = 1.0;
        e[3 * ntips + 1 + k] =
            -(q[m.finger_prox_i(k) + 1] - b * q[m.finger_prox_i(k)]);
      }
    }

    // damped least squares with active bound clamping
    Eigen::VectorXd dq = Eigen::VectorXd::Zero(m.nv);
    std::vector<bool> free(m.nv, true);
    for (int pass = 0; pass < m.nv; ++pass) {
      std::vector<int> idx;
      for (int i = 0; i < m.nv; ++i)
        if (free[i]) idx.push_back(i);
      if (idx.empty()) break;
      Eigen::MatrixXd Jf(Js.rows(), idx.size());
      for (size_t c2 = 0; c2 < idx.size(); ++c2) Jf.col(c2) = Js.col(idx[c2]);
      Eigen::MatrixXd A = Jf * Jf.transpose();
      A.diagonal().array() += settings.damping;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
      if (ldlt.info() != Eigen::Success) {
        A.diagonal().array() += 100.0 * settings.damping;
        ldlt.compute(A);
        regularized = true;
      }
      Eigen::VectorXd dqf = Jf.transpose() * ldlt.solve(e);
      dq.setZero();
      for (size_t c2 = 0; c2 < idx.size(); ++c2) dq[idx[c2]] = dqf[c2];
      bool violated = false;
      for (int i = 0; i < m.nv; ++i) {
        if (!free[i]) continue;
        const bool at_lo = q[i] <= m.lo[i] + 1e-12 && dq[i] < -1e-12;
        const bool at_hi = q[i] >= m.hi[i] - 1e-12 && dq[i] > 1e-12;
        if (at_lo || at_hi) {
          free[i] = false;
          violated = true;
        }
      }
      if (!violated) break;
    }
    const double mx = dq.cwiseAbs().maxCoeff();
    if (mx > settings.step_limit_rad) dq *= settings.step_limit_rad / mx;
    q += dq;
    for (int i = 0; i < m.nv; ++i) q[i] = std::clamp(q[i], m.lo[i], m.hi[i]);
  }

  qp_fk(m, q, tips, nullptr);
  double err = 0.0;
  for (int i = 0; i < ntips; ++i) err += (targets[i] - tips[i]).norm();
  err = err / ntips * 1000.0;

  GraspSolution sol;
  sol.solver = Solver::QP;
  sol.n_fingers = spec.n_fingers;
  sol.width_mm = spec.width_mm;
  sol.theta_star_rad = q[m.theta_i()];
  sol.iterations = iters;
  sol.active = fr.active;
  sol.face_x_mm = fr.face_x;
  sol.grasp_plane_z_mm = fr.plane_z;
  sol.planned_contacts_mm = targets_mm;
  sol.tip_error_mm = err;
  {
    std::vector<Eigen::Vector3d> tips_mm(tips.size());
    for (size_t i = 0; i < tips.size(); ++i) tips_mm[i] = tips[i] * 1000.0;
    sol.z_span_mm = z_span_about_plane(tips_mm, fr.plane_z);
  }
  // closure scalar of the reference finger; thumb bend from its own joint
  const auto& ic = params.chain(Finger::Index);
  sol.s_star = (q[m.finger_prox_i(0)] - ic.joint_min_rad) /
               (ic.joint_max_rad - ic.joint_min_rad);
  const auto& tc = params.thumb.chain;
  const double s_thumb = (q[m.thumb_prox_i()] - tc.joint_min_rad) /
                         (tc.joint_max_rad - tc.joint_min_rad);
  fill_ctrls(sol, params, 0.0, std::clamp(s_thumb, 0.0, 1.0));
  // per-finger ctrls reflect each finger's own converged closure
  for (int k = 0; k < nf; ++k) {
    const auto& fc = params.chain(m.active[k + 1]);
    const double sk = std::clamp((q[m.finger_prox_i(k)] - fc.joint_min_rad) /
                                     (fc.joint_max_rad - fc.joint_min_rad),
                                 0.0, 1.0);
    sol.finger_ctrls[m.active[k + 1]] =
        hand::ctrl_from_scalar(params, m.active[k + 1], sk);
  }
  // thumb pitch deviation from opposition, exported in raw units
  const double pitch = params.thumb.opposition_pitch_rad + q[m.pitch_i()];
  sol.thumb_ctrls.pitch_raw = raw_from_angle(
      std::clamp(pitch, params.thumb.pitch_min_rad, params.thumb.pitch_max_rad),
      params.thumb.pitch_min_rad, params.thumb.pitch_max_rad);
  (void)regularized;
  return sol;
}

std::pair<double, double> grasp_quality(const GraspSolution& solution,
                                        const SweepTable& table) {
  const HandParams& params = table.params();
  std::vector<Eigen::Vector3d> tips;
  // thumb from its exported controls
  const auto& t = params.thumb;
  const double yaw = angle_from_raw(solution.thumb_ctrls.yaw_raw,
                                    t.yaw_min_rad, t.yaw_max_rad);
  const double pitch = angle_from_raw(solution.thumb_ctrls.pitch_raw,
                                      t.pitch_min_rad, t.pitch_max_rad);
  const auto& tc = t.chain;
  const double s_thumb =
      (solution.thumb_ctrls.bend_raw - tc.ctrl_min) / (tc.ctrl_max - tc.ctrl_min);
  tips.push_back(apply_tilt(
      solution.theta_star_rad,
      hand::thumb_fk(params, yaw, pitch, std::clamp(s_thumb, 0.0, 1.0))
          .position_mm));
  for (size_t i = 1; i < solution.active.size(); ++i) {
    const Finger f = solution.active[i];
    const auto& fc = params.chain(f);
    const double s =
        (solution.finger_ctrls.at(f) - fc.ctrl_min) / (fc.ctrl_max - fc.ctrl_min);
    tips.push_back(apply_tilt(
        solution.theta_star_rad,
        hand::fk_fingertip(params, f, std::clamp(s, 0.0, 1.0)).position_mm));
  }
  const double zspan = z_span_about_plane(tips, solution.grasp_plane_z_mm);
  double err = 0.0;
  for (size_t i = 0; i < tips.size(); ++i) {
    err += (tips[i] - solution.planned_contacts_mm[i]).norm();
  }
  err /= static_cast<double>(tips.size());
  return {zspan, err};
}

std::string solution_to_json(const GraspSolution& s) {
  nlohmann::json j;
  j["W_mm"] = s.width_mm;
  j["n"] = s.n_fingers;
  j["s_star"] = s.s_star;
  j["theta_star_rad"] = s.theta_star_rad;
  nlohmann::json ctrls;
  ctrls["thumb"] = {{"yaw", s.thumb_ctrls.yaw_raw},
                    {"pitch", s.thumb_ctrls.pitch_raw},
                    {"bend", s.thumb_ctrls.bend_raw}};
  for (const auto& [f, v] : s.finger_ctrls) ctrls[to_string(f)] = v;
  j["ctrls"] = ctrls;
  j["z_span_mm"] = s.z_span_mm;
  j["tip_error_mm"] = s.tip_error_mm;
  j["solver"] = s.solver == Solver::Analytic ? "analytic" : "qp";
  j["iterations"] = s.iterations;
  return j.dump(2) + "\n";
}

}  // namespace dexhand::plan
