#include "artik/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "artik/errors.hpp"
#include "artik/joint_fit.hpp"
#include "artik/rng.hpp"

namespace artik {

namespace detail {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat66 = Eigen::Matrix<double, 6, 6>;

inline Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

// Spatial vectors are [angular; linear] at the frame origin. crm is the
// motion cross product v x m, crf the force cross product v x* f.
inline Vec6 crm(const Vec6& v, const Vec6& m) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(m.head<3>());
  out.tail<3>() = v.head<3>().cross(m.tail<3>()) + v.tail<3>().cross(m.head<3>());
  return out;
}

inline Vec6 crf(const Vec6& v, const Vec6& f) {
  Vec6 out;
  out.head<3>() = v.head<3>().cross(f.head<3>()) + v.tail<3>().cross(f.tail<3>());
  out.tail<3>() = v.head<3>().cross(f.tail<3>());
  return out;
}

inline Quat axis_quat(const Vec3& unit_axis, double angle) {
  const double half = 0.5 * angle;
  const double s = std::sin(half);
  return Quat(std::cos(half), s * unit_axis.x(), s * unit_axis.y(),
              s * unit_axis.z());
}

}  // namespace detail

using detail::CompiledBody;
using detail::CompiledJoint;
using detail::Mat66;
using detail::QPose;
using detail::Vec6;

CompiledMechanism::CompiledMechanism(const Mechanism& m) : source_(m) {
  const int n_links = static_cast<int>(m.links.size());
  std::vector<int> node_of_link(n_links, -1);
  const CompiledBody empty{0.0, Vec3::Zero(), Mat3::Zero()};

  for (const MechJoint& j : m.joints) {
    const int parent_node = j.parent < 0 ? -1 : node_of_link[j.parent];
    if (j.parent >= 0 && parent_node < 0)
      throw ConfigError("joints are not in parent-first order");
    CompiledJoint node;
    node.parent = parent_node;
    node.damping = j.damping;
    node.actuated = j.actuated;
    node.ref = {to_quat(j.ref.r), j.ref.p};

    if (j.kind == JointKind::kFloating) {
      // Six chained single-DoF nodes: translations x/y/z in the parent
      // frame, then intrinsic x/y/z rotations. Only the last carries the
      // link's inertia.
      static const Vec3 axes[3] = {Vec3::UnitX(), Vec3::UnitY(),
                                   Vec3::UnitZ()};
      int up = parent_node;
      for (int k = 0; k < 6; ++k) {
        CompiledJoint sub;
        sub.kind = k < 3 ? JointKind::kPrismatic : JointKind::kRevolute;
        sub.parent = up;
        sub.coord = dof_++;
        sub.axis = axes[k % 3];
        sub.pivot = Vec3::Zero();
        sub.ref = QPose{};
        sub.damping = j.damping;
        sub.actuated = j.actuated;
        sub.ref_rot = Quat::Identity();
        sub.axis_child = sub.axis;
        sub.pivot_child = Vec3::Zero();
        up = static_cast<int>(nodes_.size());
        nodes_.push_back(sub);
        bodies_.push_back(empty);
        link_of_node_.push_back(k == 5 ? j.child : -1);
      }
    } else {
      node.kind = j.kind;
      node.ref_rot = node.ref.q;
      const Mat3 Rt = node.ref_rot.toRotationMatrix().transpose();
      if (j.kind == JointKind::kFixed) {
        node.coord = -1;
        node.axis = Vec3::UnitZ();
        node.axis_child = node.axis;
        node.pivot_child = Vec3::Zero();
      } else {
        node.coord = dof_++;
        node.axis = j.axis.normalized();
        node.axis_child = Rt * node.axis;
        node.pivot = j.pivot;
        node.pivot_child = Rt * (j.pivot - j.ref.p);
      }
      nodes_.push_back(node);
      bodies_.push_back(empty);
      link_of_node_.push_back(j.child);
    }
    node_of_link[j.child] = static_cast<int>(nodes_.size()) - 1;
  }

  for (std::size_t i = 0; i < link_of_node_.size(); ++i) {
    const int link = link_of_node_[i];
    if (link < 0) continue;
    const Link& l = m.links[link];
    bodies_[i] = {l.mass, l.com, l.inertia.asDiagonal()};
  }
  if (static_cast<int>(nodes_.size()) > kMaxNodes)
    throw ConfigError("mechanism exceeds " + std::to_string(kMaxNodes) +
                      " compiled joints");
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].actuated && nodes_[i].coord >= 0)
      actuated_coords_.push_back(nodes_[i].coord);
}

void CompiledMechanism::node_poses(const double* q, QPose* out) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const CompiledJoint& n = nodes_[i];
    QPose local;
    if (n.kind == JointKind::kRevolute) {
      const Quat rot = detail::axis_quat(n.axis, q[n.coord]);
      local.q = rot * n.ref.q;
      local.p = n.pivot + rot * (n.ref.p - n.pivot);
    } else if (n.kind == JointKind::kPrismatic) {
      local.q = n.ref.q;
      local.p = n.ref.p + n.axis * (q[n.coord] - n.axis.dot(n.ref.p));
    } else {
      local = n.ref;
    }
    out[i] = n.parent < 0 ? local : detail::qcompose(out[n.parent], local);
  }
}

void CompiledMechanism::link_poses(const std::vector<double>& q,
                                   std::vector<Pose>* out) const {
  if (static_cast<int>(q.size()) != dof_)
    throw DimensionMismatch("expected " + std::to_string(dof_) +
                            " coordinates, got " + std::to_string(q.size()));
  std::array<QPose, kMaxNodes> world;
  node_poses(q.data(), world.data());
  out->assign(source_.links.size(), Pose::identity());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const int link = link_of_node_[i];
    if (link >= 0)
      (*out)[link] = Pose(from_quat(world[i].q), world[i].p);
  }
}

void CompiledMechanism::link_qposes(const double* q, QPose* out) const {
  std::array<QPose, kMaxNodes> world;
  node_poses(q, world.data());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const int link = link_of_node_[i];
    if (link >= 0) out[link] = world[i];
  }
}

void CompiledMechanism::forward_dynamics(const std::vector<double>& q,
                                         const std::vector<double>& qd,
                                         const std::vector<double>& tau,
                                         std::vector<double>* qdd) const {
  if (static_cast<int>(q.size()) != dof_ ||
      static_cast<int>(qd.size()) != dof_ ||
      (!tau.empty() && static_cast<int>(tau.size()) != dof_))
    throw DimensionMismatch("state/force size does not match " +
                            std::to_string(dof_) + " degrees of freedom");
  const int N = static_cast<int>(nodes_.size());

  // Per-node local transform (parent -> child motion transform pieces).
  std::array<Mat3, kMaxNodes> Rt;      // rotation part, transposed (child<-parent)
  std::array<Vec3, kMaxNodes> p_loc;   // child origin in parent frame
  std::array<Vec6, kMaxNodes> S;       // motion subspace in child frame
  std::array<Vec6, kMaxNodes> v;       // spatial velocity
  std::array<Vec6, kMaxNodes> c;       // velocity-product acceleration
  std::array<Mat66, kMaxNodes> IA;     // articulated inertia
  std::array<Vec6, kMaxNodes> pA;      // articulated bias force
  std::array<Vec6, kMaxNodes> U;
  std::array<double, kMaxNodes> D, u;

  for (int i = 0; i < N; ++i) {
    const CompiledJoint& n = nodes_[i];
    QPose local;
    double qdi = 0.0;
    if (n.kind == JointKind::kRevolute) {
      const Quat rot = detail::axis_quat(n.axis, q[n.coord]);
      local.q = rot * n.ref.q;
      local.p = n.pivot + rot * (n.ref.p - n.pivot);
      S[i].head<3>() = n.axis_child;
      S[i].tail<3>() = n.pivot_child.cross(n.axis_child);
      qdi = qd[n.coord];
    } else if (n.kind == JointKind::kPrismatic) {
      local.q = n.ref.q;
      local.p = n.ref.p + n.axis * (q[n.coord] - n.axis.dot(n.ref.p));
      S[i].head<3>().setZero();
      S[i].tail<3>() = n.axis_child;
      qdi = qd[n.coord];
    } else {
      local = n.ref;
      S[i].setZero();
    }
    Rt[i] = local.q.toRotationMatrix().transpose();
    p_loc[i] = local.p;

    // v_child = Xup * v_parent + S qd, with Xup = [Rt 0; -Rt p^ Rt].
    Vec6 vj = S[i] * qdi;
    if (n.parent >= 0) {
      const Vec6& vp = v[n.parent];
      Vec6 xv;
      xv.head<3>() = Rt[i] * vp.head<3>();
      xv.tail<3>() = Rt[i] * (vp.tail<3>() - p_loc[i].cross(vp.head<3>()));
      v[i] = xv + vj;
    } else {
      v[i] = vj;
    }
    c[i] = detail::crm(v[i], vj);

    const CompiledBody& b = bodies_[i];
    const Mat3 cx = detail::skew(b.com);
    IA[i].topLeftCorner<3, 3>() = b.inertia_com + b.mass * cx * cx.transpose();
    IA[i].topRightCorner<3, 3>() = b.mass * cx;
    IA[i].bottomLeftCorner<3, 3>() = b.mass * cx.transpose();
    IA[i].bottomRightCorner<3, 3>() = b.mass * Mat3::Identity();
    pA[i] = detail::crf(v[i], IA[i] * v[i]);
  }

  for (int i = N - 1; i >= 0; --i) {
    const CompiledJoint& n = nodes_[i];
    Mat66 Ia;
    Vec6 pa;
    if (n.coord >= 0) {
      U[i] = IA[i] * S[i];
      D[i] = S[i].dot(U[i]);
      if (!(D[i] > 1e-12))
        throw SingularInertia("articulated inertia not positive along " +
                              std::string(joint_kind_name(n.kind)) +
                              " coordinate " + std::to_string(n.coord));
      const double tau_i = tau.empty() ? 0.0 : tau[n.coord];
      u[i] = tau_i - n.damping * qd[n.coord] - S[i].dot(pA[i]);
      if (n.parent < 0) continue;
      Ia = IA[i] - U[i] * (U[i] / D[i]).transpose();
      pa = pA[i] + Ia * c[i] + U[i] * (u[i] / D[i]);
    } else {
      if (n.parent < 0) continue;
      Ia = IA[i];
      pa = pA[i] + Ia * c[i];
    }
    // Xup^T f for force transform back to the parent frame.
    Mat66 X;
    X.topLeftCorner<3, 3>() = Rt[i];
    X.topRightCorner<3, 3>().setZero();
    X.bottomLeftCorner<3, 3>() = -Rt[i] * detail::skew(p_loc[i]);
    X.bottomRightCorner<3, 3>() = Rt[i];
    IA[n.parent] += X.transpose() * Ia * X;
    pA[n.parent] += X.transpose() * pa;
  }

  qdd->assign(dof_, 0.0);
  std::array<Vec6, kMaxNodes> a;
  // Gravity enters as a fictitious upward base acceleration.
  Vec6 a0 = Vec6::Zero();
  a0.tail<3>() = -source_.gravity;
  for (int i = 0; i < N; ++i) {
    const CompiledJoint& n = nodes_[i];
    const Vec6& ap = n.parent < 0 ? a0 : a[n.parent];
    Vec6 ax;
    ax.head<3>() = Rt[i] * ap.head<3>();
    ax.tail<3>() = Rt[i] * (ap.tail<3>() - p_loc[i].cross(ap.head<3>()));
    ax += c[i];
    if (n.coord >= 0) {
      const double qdd_i = (u[i] - U[i].dot(ax)) / D[i];
      (*qdd)[n.coord] = qdd_i;
      ax += S[i] * qdd_i;
    }
    a[i] = ax;
  }
}

double CompiledMechanism::energy(const std::vector<double>& q,
                                 const std::vector<double>& qd) const {
  const int N = static_cast<int>(nodes_.size());
  std::array<QPose, kMaxNodes> world;
  node_poses(q.data(), world.data());
  std::array<Vec6, kMaxNodes> v;
  double kinetic = 0.0, potential = 0.0;
  for (int i = 0; i < N; ++i) {
    const CompiledJoint& n = nodes_[i];
    QPose local;
    double qdi = 0.0;
    Vec6 S = Vec6::Zero();
    if (n.kind == JointKind::kRevolute) {
      const Quat rot = detail::axis_quat(n.axis, q[n.coord]);
      local.q = rot * n.ref.q;
      local.p = n.pivot + rot * (n.ref.p - n.pivot);
      S.head<3>() = n.axis_child;
      S.tail<3>() = n.pivot_child.cross(n.axis_child);
      qdi = qd[n.coord];
    } else if (n.kind == JointKind::kPrismatic) {
      local.q = n.ref.q;
      local.p = n.ref.p + n.axis * (q[n.coord] - n.axis.dot(n.ref.p));
      S.tail<3>() = n.axis_child;
      qdi = qd[n.coord];
    } else {
      local = n.ref;
    }
    const Mat3 Rt = local.q.toRotationMatrix().transpose();
    Vec6 vi = S * qdi;
    if (n.parent >= 0) {
      const Vec6& vp = v[n.parent];
      vi.head<3>() += Rt * vp.head<3>();
      vi.tail<3>() += Rt * (vp.tail<3>() - local.p.cross(vp.head<3>()));
    }
    v[i] = vi;
    const CompiledBody& b = bodies_[i];
    if (b.mass <= 0.0) continue;
    const Vec3 omega = vi.head<3>();
    const Vec3 v_com = vi.tail<3>() + omega.cross(b.com);
    kinetic += 0.5 * b.mass * v_com.squaredNorm() +
               0.5 * omega.dot(b.inertia_com * omega);
    const Vec3 com_world = world[i].p + world[i].q * b.com;
    potential -= b.mass * source_.gravity.dot(com_world);
  }
  return kinetic + potential;
}

void step(const CompiledMechanism& cm, SimState* state,
          const std::vector<double>& tau, const StepConfig& cfg) {
  if (!(cfg.dt > 0.0) || cfg.substeps < 1)
    throw ConfigError("step needs dt > 0 and substeps >= 1");
  const double h = cfg.dt / cfg.substeps;
  std::vector<double> qdd;
  for (int s = 0; s < cfg.substeps; ++s) {
    cm.forward_dynamics(state->q, state->qd, tau, &qdd);
    for (int i = 0; i < cm.dof(); ++i) {
      state->qd[i] += qdd[i] * h;
      state->q[i] += state->qd[i] * h;
    }
  }
}

namespace {

// Map a control row onto full generalized forces: a full-width row is used
// as-is, shorter rows feed the actuated coordinates in order.
void scatter_controls(const CompiledMechanism& cm,
                      const std::vector<int>& actuated,
                      const std::vector<double>& row,
                      std::vector<double>* tau) {
  std::fill(tau->begin(), tau->end(), 0.0);
  if (static_cast<int>(row.size()) == cm.dof()) {
    std::copy(row.begin(), row.end(), tau->begin());
    return;
  }
  if (row.size() > actuated.size())
    throw DimensionMismatch("control row has " + std::to_string(row.size()) +
                            " entries for " + std::to_string(actuated.size()) +
                            " actuated coordinates");
  for (std::size_t k = 0; k < row.size(); ++k) (*tau)[actuated[k]] = row[k];
}

bool state_ok(const SimState& s, double limit) {
  for (double x : s.q)
    if (!std::isfinite(x) || std::abs(x) > limit) return false;
  for (double x : s.qd)
    if (!std::isfinite(x) || std::abs(x) > limit) return false;
  return true;
}

std::vector<int> actuated_list(const Mechanism& m) {
  std::vector<int> out;
  const std::vector<int> off = m.coord_offsets();
  for (std::size_t i = 0; i < m.joints.size(); ++i) {
    if (!m.joints[i].actuated) continue;
    const int width = m.joints[i].kind == JointKind::kFloating ? 6
                      : m.joints[i].kind == JointKind::kFixed  ? 0
                                                               : 1;
    for (int k = 0; k < width; ++k) out.push_back(off[i] + k);
  }
  return out;
}

}  // namespace

Rollout rollout(const CompiledMechanism& cm, const SimState& x0, int frames,
                const StepConfig& cfg,
                const std::vector<std::vector<double>>& controls) {
  if (static_cast<int>(x0.q.size()) != cm.dof() ||
      static_cast<int>(x0.qd.size()) != cm.dof())
    throw DimensionMismatch("initial state does not match mechanism dof");
  Rollout out;
  if (frames <= 0) return out;
  const std::vector<int> actuated = actuated_list(cm.source());

  SimState s = x0;
  std::vector<double> tau(cm.dof(), 0.0);
  out.q.reserve(frames);
  out.qd.reserve(frames);
  out.q.push_back(s.q);
  out.qd.push_back(s.qd);
  if (!state_ok(s, cfg.divergence_limit)) {
    out.diverged = true;
    out.diverged_at = 0;
    return out;
  }
  for (int t = 1; t < frames; ++t) {
    if (std::size_t(t - 1) < controls.size())
      scatter_controls(cm, actuated, controls[t - 1], &tau);
    else
      std::fill(tau.begin(), tau.end(), 0.0);
    step(cm, &s, tau, cfg);
    out.q.push_back(s.q);
    out.qd.push_back(s.qd);
    if (!state_ok(s, cfg.divergence_limit)) {
      out.diverged = true;
      out.diverged_at = t;
      break;
    }
  }
  return out;
}

ObservationSet generate_observations(
    const Mechanism& m, const SimState& x0, int frames, double dt,
    const std::vector<std::vector<double>>& controls,
    const ObservationNoise& noise) {
  const CompiledMechanism cm(m);
  const Rollout roll = rollout(cm, x0, frames, StepConfig{dt, 1, 1e6}, controls);
  if (roll.diverged)
    throw ConfigError("trajectory diverged at frame " +
                      std::to_string(roll.diverged_at));

  ObservationSet obs;
  obs.dt = dt;
  obs.seed = noise.seed;
  obs.scene = m.name;
  const int n = static_cast<int>(m.links.size());
  obs.bodies.resize(n);
  std::vector<Pose> poses;
  for (int b = 0; b < n; ++b) {
    obs.bodies[b].body_id = b;
    obs.bodies[b].name = m.links[b].name;
    obs.bodies[b].dt = dt;
    obs.bodies[b].poses.reserve(frames);
  }
  for (int t = 0; t < frames; ++t) {
    cm.link_poses(roll.q[t], &poses);
    for (int b = 0; b < n; ++b) obs.bodies[b].poses.push_back(poses[b]);
  }
  if (noise.sigma_p > 0.0 || noise.sigma_r > 0.0) {
    for (int b = 0; b < n; ++b) {
      Rng rng(derive_seed(noise.seed, std::uint64_t(b)));
      for (int t = 0; t < frames; ++t) {
        Pose& pose = obs.bodies[b].poses[t];
        const Vec3 dp(rng.gaussian(), rng.gaussian(), rng.gaussian());
        Vec3 dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
        const double mag = std::abs(rng.gaussian()) * noise.sigma_r;
        if (dir.norm() < 1e-12) dir = Vec3::UnitX();
        const Vec3 dr = dir.normalized() * mag;
        pose.p += noise.sigma_p * dp;
        pose.r = from_quat(to_quat(dr) * to_quat(pose.r));
      }
    }
  }
  return obs;
}

JointModel joint_model_of(const MechJoint& j) {
  switch (j.kind) {
    case JointKind::kRevolute:
      return Revolute{j.axis.normalized(), j.pivot, j.ref};
    case JointKind::kPrismatic:
      return Prismatic{j.axis.normalized(), j.ref};
    case JointKind::kFixed:
      return StaticJoint{j.ref};
    case JointKind::kFloating:
      break;
  }
  throw ConfigError("floating joints have no single-coordinate model");
}

Pose pose_from_floating_coords(const double* q) {
  const Quat rot = detail::axis_quat(Vec3::UnitX(), q[3]) *
                   detail::axis_quat(Vec3::UnitY(), q[4]) *
                   detail::axis_quat(Vec3::UnitZ(), q[5]);
  return Pose(from_quat(rot), Vec3(q[0], q[1], q[2]));
}

void floating_coords_from_pose(const Pose& t, double* q) {
  q[0] = t.p.x();
  q[1] = t.p.y();
  q[2] = t.p.z();
  const Mat3 R = to_quat(t.r).toRotationMatrix();
  const double sb = std::clamp(R(0, 2), -1.0, 1.0);
  q[4] = std::asin(sb);
  if (std::abs(sb) < 1.0 - 1e-9) {
    q[3] = std::atan2(-R(1, 2), R(2, 2));
    q[5] = std::atan2(-R(0, 1), R(0, 0));
  } else {
    // Chart singularity: roll and yaw are degenerate, pick zero roll.
    q[3] = 0.0;
    q[5] = std::atan2(R(1, 0), R(1, 1));
  }
}

std::vector<SimState> states_from_observations(const Mechanism& m,
                                               const ObservationSet& obs) {
  validate(obs);
  if (obs.n_bodies() != static_cast<int>(m.links.size()))
    throw DimensionMismatch("observation bodies do not match mechanism links");
  const int T = obs.frames();
  const int dof = m.dof();
  const std::vector<int> off = m.coord_offsets();

  std::vector<std::vector<double>> q(T, std::vector<double>(dof, 0.0));
  for (std::size_t ji = 0; ji < m.joints.size(); ++ji) {
    const MechJoint& j = m.joints[ji];
    if (j.kind == JointKind::kFixed) continue;
    for (int t = 0; t < T; ++t) {
      const Pose& child = obs.bodies[j.child].poses[t];
      const Pose rel =
          j.parent < 0 ? child
                       : relative_transform(obs.bodies[j.parent].poses[t], child);
      if (j.kind == JointKind::kFloating) {
        floating_coords_from_pose(rel, &q[t][off[ji]]);
      } else {
        q[t][off[ji]] = project_to_joint(joint_model_of(j), rel).q;
      }
    }
    // Unwrap every angular coordinate so velocities stay finite across the
    // +-pi seam.
    const int base = off[ji];
    const bool angular = j.kind == JointKind::kRevolute;
    for (int k = 0; k < (j.kind == JointKind::kFloating ? 6 : 1); ++k) {
      if (!(angular || (j.kind == JointKind::kFloating && k >= 3))) continue;
      for (int t = 1; t < T; ++t) {
        double& cur = q[t][base + k];
        const double prev = q[t - 1][base + k];
        cur = prev + wrap_angle(cur - prev);
      }
    }
  }

  std::vector<SimState> states(T);
  const double dt = obs.dt;
  for (int t = 0; t < T; ++t) {
    states[t].q = q[t];
    states[t].qd.assign(dof, 0.0);
    for (int i = 0; i < dof; ++i) {
      if (t == 0)
        states[t].qd[i] = (q[1][i] - q[0][i]) / dt;
      else if (t == T - 1)
        states[t].qd[i] = (q[T - 1][i] - q[T - 2][i]) / dt;
      else
        states[t].qd[i] = (q[t + 1][i] - q[t - 1][i]) / (2.0 * dt);
    }
  }
  return states;
}

}  // namespace artik
