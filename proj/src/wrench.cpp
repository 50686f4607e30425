#include "dexhand/wrench.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "dexhand/stats.hpp"

namespace dexhand::wrench {

namespace {
constexpr double kUnitTol = 1e-9;
}

std::vector<Eigen::Vector3d> cone_edges(const Contact& contact, int m) {
  if (m < 3) throw std::invalid_argument("cone edges require m >= 3");
  if (std::abs(contact.normal.norm() - 1.0) > kUnitTol) {
    throw std::invalid_argument("contact normal must be unit length");
  }
  if (contact.mu < 0.0) throw std::invalid_argument("mu must be >= 0");

  const Eigen::Vector3d n = contact.normal;
  // deterministic tangent basis: cross with the least-aligned axis
  int least = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) < std::abs(n[least])) least = i;
  }
  Eigen::Vector3d axis = Eigen::Vector3d::Zero();
  axis[least] = 1.0;
  const Eigen::Vector3d t1 = n.cross(axis).normalized();
  const Eigen::Vector3d t2 = n.cross(t1);

  const double half = std::atan(contact.mu);
  const double ca = std::cos(half), sa = std::sin(half);
  std::vector<Eigen::Vector3d> edges;
  edges.reserve(m);
  for (int i = 0; i < m; ++i) {
    const double ang = 2.0 * std::numbers::pi * i / m;
    edges.push_back(ca * n + sa * (std::cos(ang) * t1 + std::sin(ang) * t2));
  }
  return edges;
}

GraspWrenchSpace build_gws(const std::vector<Contact>& contacts, int m,
                           double torque_scale) {
  if (contacts.empty()) throw std::invalid_argument("empty contact list");
  if (torque_scale <= 0.0) throw std::invalid_argument("torque_scale must be > 0");
  GraspWrenchSpace gws;
  gws.cone_edges_m = m;
  gws.torque_scale = torque_scale;
  gws.primitives.reserve(contacts.size() * m);
  for (const auto& c : contacts) {
    for (const auto& e : cone_edges(c, m)) {
      WrenchPrimitive p;
      p.w.head<3>() = e;
      p.w.tail<3>() = torque_scale * c.point_m.cross(e);
      const double n = p.w.norm();
      if (n > 0.0) p.w /= n;
      gws.primitives.push_back(p);
    }
  }
  return gws;
}

namespace {

// prefix-nested quasi-random unit directions in R^dim (Kronecker sequence
// through the normal quantile); deterministic, so refined runs sample a
// superset of coarser ones
Eigen::VectorXd qr_direction(int index, int dim) {
  // generalized golden-ratio increments (Harmonious numbers)
  static const double phi_by_dim[7] = {0, 0, 1.32471795724474602596,
                                       1.22074408460575947536,
                                       1.16730397826141868425,
                                       1.13472413840151949260,
                                       1.11127756842787055638};
  const double g = phi_by_dim[std::clamp(dim, 2, 6)];
  Eigen::VectorXd u(dim);
  double a = 1.0 / g;
  for (int j = 0; j < dim; ++j) {
    const double alpha = a;
    double v = 0.5 + alpha * (index + 1);
    v -= std::floor(v);
    v = std::min(std::max(v, 1e-12), 1.0 - 1e-12);
    u[j] = stats::normal_quantile(v);
    a /= g;
  }
  const double n = u.norm();
  return n > 0.0 ? Eigen::VectorXd(u / n) : Eigen::VectorXd::Unit(dim, 0);
}

}  // namespace

QualityVerdict force_closure(const GraspWrenchSpace& gws,
                             int direction_samples) {
  if (direction_samples < 100) {
    throw std::invalid_argument("direction_samples must be >= 100");
  }
  QualityVerdict v;
  v.direction_samples = direction_samples;
  const int np = static_cast<int>(gws.primitives.size());
  if (np < 7) {
    v.force_closure = false;
    v.epsilon_lower_bound = 0.0;
    v.reason = "fewer than 7 wrench primitives: origin cannot be interior";
    return v;
  }

  Eigen::MatrixXd W(6, np);
  for (int i = 0; i < np; ++i) W.col(i) = gws.primitives[i].w;

  // judge the hull inside the linear span of the primitives; directions
  // orthogonal to every achievable wrench say nothing about the grasp
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinU);
  const double smax = svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    if (svd.singularValues()(i) > 1e-9 * std::max(1.0, smax)) ++rank;
  }
  v.span_rank = rank;
  if (rank == 0) {
    v.force_closure = false;
    v.reason = "all primitives vanish";
    return v;
  }
  const Eigen::MatrixXd basis = svd.matrixU().leftCols(rank);  // 6 x r
  const Eigen::MatrixXd P = basis.transpose() * W;             // r x np

  auto support_min_dir = [&](const Eigen::VectorXd& u) {
    return (P.transpose() * u).maxCoeff();
  };

  double eps = std::numeric_limits<double>::infinity();
  Eigen::VectorXd argmin = Eigen::VectorXd::Unit(rank, 0);
  for (int i = 0; i < direction_samples; ++i) {
    const Eigen::VectorXd u = qr_direction(i, rank);
    const double h = support_min_dir(u);
    if (h < eps) {
      eps = h;
      argmin = u;
    }
  }
  // local pattern descent around the sampled minimizer
  double step = 0.3;
  for (int round = 0; round < 3; ++round) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int j = 0; j < rank; ++j) {
        for (double sgn : {1.0, -1.0}) {
          Eigen::VectorXd u = argmin + sgn * step * Eigen::VectorXd::Unit(rank, j);
          u.normalize();
          const double h = support_min_dir(u);
          if (h < eps - 1e-15) {
            eps = h;
            argmin = u;
            improved = true;
          }
        }
      }
    }
    step *= 0.25;
  }

  v.epsilon_lower_bound = std::max(0.0, eps);
  v.force_closure = eps > 1e-9;
  if (!v.force_closure) {
    v.reason = "support function non-positive along a sampled direction";
    v.epsilon_lower_bound = 0.0;
  }
  return v;
}

FeasibilityResult task_wrench_feasible(const GraspWrenchSpace& gws,
                                       const Vector6d& w_task) {
  if (gws.primitives.empty()) throw std::invalid_argument("empty GWS");
  const int n = static_cast<int>(gws.primitives.size());
  constexpr int kRows = 7;  // six wrench components + the convexity row
  constexpr double kFeasTol = 1e-9;
  constexpr double kMarginalTol = 1e-6;

  FeasibilityResult out;

  // quick norm-bound reject: a convex combination of unit wrenches cannot
  // exceed the largest primitive norm
  double max_norm = 0.0;
  for (const auto& p : gws.primitives) max_norm = std::max(max_norm, p.w.norm());
  if (w_task.norm() > max_norm + kMarginalTol) {
    out.verdict = Feasibility::Infeasible;
    return out;
  }

  // phase-1 simplex: A alpha + I a = b, minimize sum(a), Bland's rule
  Eigen::MatrixXd T(kRows + 1, n + kRows + 1);
  T.setZero();
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < n; ++c) T(r, c) = gws.primitives[c].w[r];
    T(r, n + kRows) = w_task[r];
  }
  for (int c = 0; c < n; ++c) T(6, c) = 1.0;
  T(6, n + kRows) = 1.0;
  for (int r = 0; r < kRows; ++r) {
    if (T(r, n + kRows) < 0.0) T.row(r) = -T.row(r);
    T(r, n + r) = 1.0;
  }
  std::vector<int> basis(kRows);
  for (int r = 0; r < kRows; ++r) basis[r] = n + r;
  // objective row: reduced costs of minimizing the artificial sum
  for (int r = 0; r < kRows; ++r) T.row(kRows) -= T.row(r);

  const int max_pivots = 20000;
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    int enter = -1;
    for (int c = 0; c < n + kRows; ++c) {
      if (T(kRows, c) < -kFeasTol) {
        enter = c;  // Bland: smallest improving index
        break;
      }
    }
    if (enter < 0) break;
    int leave = -1;
    double best = 0.0;
    for (int r = 0; r < kRows; ++r) {
      if (T(r, enter) > kFeasTol) {
        const double ratio = T(r, n + kRows) / T(r, enter);
        if (leave < 0 || ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && basis[r] < basis[leave])) {
          best = ratio;
          leave = r;
        }
      }
    }
    if (leave < 0) break;  // unbounded cannot happen in phase 1
    T.row(leave) /= T(leave, enter);
    for (int r = 0; r <= kRows; ++r) {
      if (r != leave && std::abs(T(r, enter)) > 0.0) {
        T.row(r) -= T(r, enter) * T.row(leave);
      }
    }
    basis[leave] = enter;
  }

  const double objective = -T(kRows, n + kRows);
  if (objective > kMarginalTol) {
    out.verdict = Feasibility::Infeasible;
    return out;
  }
  if (objective > kFeasTol) {
    out.verdict = Feasibility::Marginal;
    return out;
  }
  out.verdict = Feasibility::Feasible;
  out.alpha.assign(n, 0.0);
  for (int r = 0; r < kRows; ++r) {
    if (basis[r] < n) out.alpha[basis[r]] = std::max(0.0, T(r, n + kRows));
  }
  return out;
}

MismatchReport sim_real_force_compare(const std::vector<TimedTrace>& sim,
                                      const std::vector<TimedTrace>& real) {
  MismatchReport rep;
  std::vector<double> all;
  for (const auto& s : sim) {
    const TimedTrace* r = nullptr;
    for (const auto& cand : real) {
      if (cand.label == s.label) {
        r = &cand;
        break;
      }
    }
    if (!r) continue;
    if (s.samples.empty() || r->samples.empty()) {
      throw std::invalid_argument("empty trace for " + s.label);
    }
    const double lo = std::max(s.samples.front().first, r->samples.front().first);
    const double hi = std::min(s.samples.back().first, r->samples.back().first);
    if (!(lo < hi)) throw std::invalid_argument("empty overlap window");

    auto interp = [](const std::vector<std::pair<double, double>>& tr, double t) {
      auto it = std::lower_bound(
          tr.begin(), tr.end(), t,
          [](const auto& a, double v) { return a.first < v; });
      if (it == tr.begin()) return it->second;
      if (it == tr.end()) return tr.back().second;
      const auto prev = std::prev(it);
      const double u = (t - prev->first) / (it->first - prev->first);
      return prev->second + u * (it->second - prev->second);
    };

    std::vector<double> errs;
    for (const auto& [t, fs] : s.samples) {
      if (t < lo || t > hi) continue;
      if (std::abs(fs) < 1e-2) continue;  // relative error undefined near zero
      const double fr = interp(r->samples, t);
      errs.push_back(std::abs(fr - fs) / std::abs(fs));
    }
    if (errs.empty()) throw std::invalid_argument("no comparable samples");
    rep.per_trace.emplace_back(s.label, stats::mean(errs));
    all.insert(all.end(), errs.begin(), errs.end());
  }
  if (all.empty()) throw std::invalid_argument("no matching trace labels");
  rep.pooled = stats::mean(all);
  return rep;
}

std::vector<Contact> contacts_from_json(const std::string& text, int& m_out,
                                        double& lambda_out) {
  const auto j = nlohmann::json::parse(text);
  std::vector<Contact> contacts;
  for (const auto& cj : j.at("contacts")) {
    Contact c;
    const auto& p = cj.at("p");
    const auto& nrm = cj.at("n");
    c.point_m = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
    c.normal = {nrm.at(0).get<double>(), nrm.at(1).get<double>(),
                nrm.at(2).get<double>()};
    c.normal.normalize();
    c.mu = cj.at("mu").get<double>();
    c.force_n = cj.value("f_n", 1.0);
    contacts.push_back(c);
  }
  m_out = j.value("m", 8);
  lambda_out = j.value("lambda", 1.0);
  return contacts;
}

std::string verdict_to_json(const QualityVerdict& v,
                            const FeasibilityResult* task) {
  nlohmann::json j;
  j["force_closure"] = v.force_closure;
  j["epsilon_lower_bound"] = v.epsilon_lower_bound;
  j["direction_samples"] = v.direction_samples;
  j["span_rank"] = v.span_rank;
  if (!v.reason.empty()) j["reason"] = v.reason;
  if (task) {
    j["task_wrench"] = {
        {"verdict", task->verdict == Feasibility::Feasible     ? "feasible"
                    : task->verdict == Feasibility::Infeasible ? "infeasible"
                                                               : "marginal"}};
    if (task->verdict == Feasibility::Feasible) {
      j["task_wrench"]["alpha"] = task->alpha;
    }
  }
  return j.dump(2) + "\n";
}

}  // namespace dexhand::wrench
