#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace dexhand::wrench {

using Vector6d = Eigen::Matrix<double, 6, 1>;

struct Contact {
  Eigen::Vector3d point_m{0, 0, 0};   // object frame
  Eigen::Vector3d normal{0, 0, 1};    // unit, into the object
  double mu = 0.5;
  double force_n = 1.0;
};

/// Unit contact wrench (f, lambda * p x f), normalized to unit 6-norm for
/// the quality computation.
struct WrenchPrimitive {
  Vector6d w = Vector6d::Zero();
};

struct GraspWrenchSpace {
  std::vector<WrenchPrimitive> primitives;  // contacts * m, deterministic order
  int cone_edges_m = 8;
  double torque_scale = 1.0;  // 1 / characteristic length
};

/// m unit force vectors evenly spaced on the friction cone of half-angle
/// atan(mu) about the contact normal; mu = 0 degenerates to m copies of
/// the normal. Throws on a non-unit normal or m < 3.
std::vector<Eigen::Vector3d> cone_edges(const Contact& contact, int m);

/// Throws std::invalid_argument on an empty contact list.
GraspWrenchSpace build_gws(const std::vector<Contact>& contacts, int m,
                           double torque_scale);

struct QualityVerdict {
  bool force_closure = false;
  /// Minimum of the support function over the sampled directions; exact
  /// only at the sampled resolution and non-increasing under refinement.
  double epsilon_lower_bound = 0.0;
  int direction_samples = 0;
  int span_rank = 0;
  std::string reason;
};

/// Samples the support function h(u) = max_i w_i . u over deterministic
/// low-discrepancy unit directions (plus local refinement around the
/// minimizer). Directions are drawn inside the linear span of the
/// primitives: a contact set whose wrenches only span a subspace is
/// judged within that subspace, which makes the classical two-contact
/// antipodal case come out closed even though two hard point contacts
/// never span all six dimensions. Fewer than 7 primitives can never
/// enclose the origin in full 6-D and short-circuits to a false verdict.
QualityVerdict force_closure(const GraspWrenchSpace& gws,
                             int direction_samples);

enum class Feasibility { Feasible, Infeasible, Marginal };

struct FeasibilityResult {
  Feasibility verdict = Feasibility::Infeasible;
  std::vector<double> alpha;  // convex certificate when feasible
};

/// Exact membership test: does a convex combination of the primitives
/// equal w_task? Solved with a dense two-phase simplex (Bland's rule);
/// phase-1 objectives inside the marginal band are reported as Marginal
/// rather than silently rounded.
FeasibilityResult task_wrench_feasible(const GraspWrenchSpace& gws,
                                       const Vector6d& w_task);

struct TimedTrace {
  std::string label;                               // e.g. finger name
  std::vector<std::pair<double, double>> samples;  // (t_s, force_n)
};

struct MismatchReport {
  std::vector<std::pair<std::string, double>> per_trace;  // mean rel. error
  double pooled = 0.0;
};

/// Mean relative error between simulated and real force traces after
/// resampling onto the overlap window. Throws when the overlap is empty.
MismatchReport sim_real_force_compare(const std::vector<TimedTrace>& sim,
                                      const std::vector<TimedTrace>& real);

/// Contact-set input: {"contacts":[{"p":[..],"n":[..],"mu":..,"f_n":..}],
/// "m":8,"lambda":..}
std::vector<Contact> contacts_from_json(const std::string& text, int& m_out,
                                        double& lambda_out);
std::string verdict_to_json(const QualityVerdict& v,
                            const FeasibilityResult* task = nullptr);

}  // namespace dexhand::wrench
