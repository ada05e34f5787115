#include "artik/joint_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "artik/errors.hpp"
#include "artik/rng.hpp"

namespace artik {

namespace {

// Sign that makes the first nonzero component of v positive.
double canonical_sign(const Vec3& v) {
  for (int i = 0; i < 3; ++i) {
    if (v[i] > 0.0) return 1.0;
    if (v[i] < 0.0) return -1.0;
  }
  return 1.0;
}

Quat axis_angle_quat(const Vec3& unit_axis, double angle) {
  const double half = 0.5 * angle;
  const double s = std::sin(half);
  return Quat(std::cos(half), s * unit_axis.x(), s * unit_axis.y(),
              s * unit_axis.z());
}

// Chordal mean rotation: dominant eigenvector of the quaternion
// outer-product sum (sign-invariant).
Quat mean_rotation(const std::vector<Quat>& qs) {
  Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
  for (const Quat& q : qs) {
    Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
    M += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(M);
  const Eigen::Vector4d v = es.eigenvectors().col(3);  // largest eigenvalue
  Quat q(v[0], v[1], v[2], v[3]);
  q.normalize();
  return q;
}

struct FrameCache {
  std::vector<Quat> rot;
  std::vector<Vec3> pos;
};

FrameCache cache_frames(const std::vector<Pose>& seq) {
  FrameCache c;
  c.rot.reserve(seq.size());
  c.pos.reserve(seq.size());
  for (const Pose& t : seq) {
    c.rot.push_back(to_quat(t.r));
    c.pos.push_back(t.p);
  }
  return c;
}

}  // namespace

const char* joint_type_name(const JointModel& m) {
  if (std::holds_alternative<Revolute>(m)) return "revolute";
  if (std::holds_alternative<Prismatic>(m)) return "prismatic";
  if (std::holds_alternative<StaticJoint>(m)) return "static";
  return "free";
}

double pose_residual(const Pose& a, const Pose& b, double rotation_weight) {
  return rotation_weight * rotation_angle_between(a, b) + (a.p - b.p).norm();
}

RevolutePairFit fit_revolute_pair(const Pose& t_a, const Pose& t_b,
                                  double min_motion) {
  const Vec3 dr = t_b.r - t_a.r;
  const double angle = dr.norm();
  if (angle < min_motion)
    throw DegenerateRotation("consecutive rotations differ by " +
                             std::to_string(angle) + " rad");
  const Vec3 dp = t_b.p - t_a.p;
  RevolutePairFit fit;
  fit.axis = dr / angle;
  fit.pivot = t_a.p + dr.cross(dp) / (angle * angle);
  fit.q = angle;
  const double sign = canonical_sign(fit.axis);
  fit.axis *= sign;
  fit.q *= sign;
  return fit;
}

PrismaticPairFit fit_prismatic_pair(const Pose& t_a, const Pose& t_b,
                                    double min_motion) {
  const Vec3 dp = t_b.p - t_a.p;
  const double dist = dp.norm();
  if (dist < min_motion)
    throw DegenerateTranslation("consecutive translations differ by " +
                                std::to_string(dist) + " m");
  PrismaticPairFit fit;
  fit.axis = dp / dist;
  const double sign = canonical_sign(fit.axis);
  fit.axis *= sign;
  fit.q = fit.axis.dot(t_b.p);
  return fit;
}

Pose fit_static(const std::vector<Pose>& seq) {
  if (seq.empty()) throw ConfigError("fit_static on empty sequence");
  std::vector<Quat> qs;
  qs.reserve(seq.size());
  Vec3 p = Vec3::Zero();
  for (const Pose& t : seq) {
    qs.push_back(to_quat(t.r));
    p += t.p;
  }
  return Pose(from_quat(mean_rotation(qs)), p / double(seq.size()));
}

Pose joint_model_pose(const JointModel& model, double q) {
  if (const auto* rev = std::get_if<Revolute>(&model)) {
    return compose(rotation_about_line(rev->axis, rev->pivot, q), rev->ref);
  }
  if (const auto* pri = std::get_if<Prismatic>(&model)) {
    const double along_ref = pri->axis.dot(pri->ref.p);
    return Pose(pri->ref.r, pri->ref.p + pri->axis * (q - along_ref));
  }
  if (const auto* sta = std::get_if<StaticJoint>(&model)) return sta->pose;
  return Pose::identity();  // free joint carries no constraint
}

JointProjection project_to_joint(const JointModel& model, const Pose& t,
                                 double rotation_weight) {
  JointProjection out;
  if (const auto* rev = std::get_if<Revolute>(&model)) {
    const Quat d = to_quat(t.r) * to_quat(rev->ref.r).conjugate();
    out.q = twist_angle_about_axis(d, rev->axis);
    out.reconstructed = joint_model_pose(model, out.q);
  } else if (const auto* pri = std::get_if<Prismatic>(&model)) {
    out.q = pri->axis.dot(t.p);
    out.reconstructed = joint_model_pose(model, out.q);
  } else if (std::holds_alternative<StaticJoint>(model)) {
    out.q = 0.0;
    out.reconstructed = joint_model_pose(model, 0.0);
  } else {
    out.q = 0.0;
    out.reconstructed = t;  // free joint explains any pose
  }
  out.residual = pose_residual(out.reconstructed, t, rotation_weight);
  return out;
}

double model_error(const JointModel& model, const std::vector<Pose>& seq,
                   double rotation_weight) {
  if (seq.empty()) throw ConfigError("model_error on empty sequence");
  double sum = 0.0;
  for (const Pose& t : seq)
    sum += project_to_joint(model, t, rotation_weight).residual;
  return sum / double(seq.size());
}

namespace {

std::vector<double> residuals_under(const JointModel& m,
                                    const std::vector<Pose>& seq,
                                    double lambda) {
  std::vector<double> res(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i)
    res[i] = project_to_joint(m, seq[i], lambda).residual;
  return res;
}

// Exact relative screw of two frames: axis and angle of R_b R_a^T plus the
// in-plane rotation center. The coordinate-difference closed form carries an
// axis bias that grows with the reference orientation rather than the step
// size, which starves the inlier gate on large swings; this form does not.
struct PairScrew {
  Vec3 axis;
  double angle;
  Vec3 pivot;
};

std::optional<PairScrew> pair_screw(const Pose& t_a, const Pose& t_b,
                                    double min_motion) {
  Quat d = to_quat(t_b.r) * to_quat(t_a.r).conjugate();
  if (d.w() < 0.0) d.coeffs() = -d.coeffs();
  const double vn = d.vec().norm();
  const double angle = 2.0 * std::atan2(vn, d.w());
  if (angle < min_motion || vn == 0.0) return std::nullopt;
  PairScrew s;
  s.axis = d.vec() / vn;
  s.angle = angle;
  const Vec3 dp = t_b.p - t_a.p;
  const Vec3 dperp = dp - s.axis.dot(dp) * s.axis;
  const double half = 0.5 * angle;
  s.pivot = t_a.p + 0.5 * dperp +
            (0.5 * std::cos(half) / std::sin(half)) * s.axis.cross(dp);
  return s;
}

int count_pair_inliers(const std::vector<double>& res, double threshold,
                       std::vector<char>* pair_inlier) {
  const int pairs = static_cast<int>(res.size()) - 1;
  int count = 0;
  if (pair_inlier) pair_inlier->assign(pairs, 0);
  for (int i = 0; i < pairs; ++i) {
    if (std::max(res[i], res[i + 1]) < threshold) {
      ++count;
      if (pair_inlier) (*pair_inlier)[i] = 1;
    }
  }
  return count;
}

std::vector<int> inlier_frames(const std::vector<char>& pair_inlier) {
  std::vector<int> frames;
  const int pairs = static_cast<int>(pair_inlier.size());
  for (int i = 0; i < pairs; ++i) {
    if (!pair_inlier[i]) continue;
    if (frames.empty() || frames.back() != i) frames.push_back(i);
    frames.push_back(i + 1);
  }
  return frames;
}

// Pivot from the closest point to the per-pair rotation axis lines.
Vec3 chord_pivot_ls(const std::vector<Vec3>& axes,
                    const std::vector<Vec3>& pivots, const Vec3& final_axis) {
  Mat3 M = Mat3::Zero();
  Vec3 rhs = Vec3::Zero();
  for (std::size_t k = 0; k < axes.size(); ++k) {
    const Mat3 P = Mat3::Identity() - axes[k] * axes[k].transpose();
    M += P;
    rhs += P * pivots[k];
  }
  M += (1e-9 * std::max(1.0, M.trace())) * final_axis * final_axis.transpose();
  return M.ldlt().solve(rhs);
}

// Joint least squares for the revolute pivot and reference translation:
// seq[t].p = (I - R(q_t)) pivot + R(q_t) ref_p. The pivot component along
// the axis is gauge; a small regularizer pins it to zero.
void revolute_translation_ls(const Vec3& axis, const std::vector<double>& q,
                             const std::vector<Vec3>& obs_p, Vec3* pivot,
                             Vec3* ref_p) {
  Eigen::Matrix<double, 6, 6> M = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
  for (std::size_t t = 0; t < q.size(); ++t) {
    const Mat3 R = axis_angle_quat(axis, q[t]).toRotationMatrix();
    Eigen::Matrix<double, 3, 6> A;
    A.leftCols<3>() = Mat3::Identity() - R;
    A.rightCols<3>() = R;
    M += A.transpose() * A;
    rhs += A.transpose() * obs_p[t];
  }
  M.topLeftCorner<3, 3>() +=
      (1e-9 * std::max(1.0, M.trace())) * axis * axis.transpose();
  const Eigen::Matrix<double, 6, 1> sol = M.ldlt().solve(rhs);
  *pivot = sol.head<3>();
  *ref_p = sol.tail<3>();
}

JointModel refit_revolute(const std::vector<Pose>& seq,
                          const FrameCache& frames, const Revolute& hyp,
                          const std::vector<double>& res,
                          const std::vector<char>& pair_inlier,
                          const RansacConfig& cfg) {
  std::vector<Vec3> axes, pivots;
  Vec3 axis_sum = Vec3::Zero();
  for (std::size_t i = 0; i < pair_inlier.size(); ++i) {
    if (!pair_inlier[i]) continue;
    const auto sc = pair_screw(seq[i], seq[i + 1], cfg.min_motion);
    if (!sc) continue;
    Vec3 a = sc->axis;
    if (a.dot(hyp.axis) < 0.0) a = -a;
    const double pres = std::max(res[i], res[i + 1]);
    const double w =
        sc->angle * sc->angle / (0.1 * cfg.inlier_threshold + pres + 1e-15);
    axes.push_back(a);
    pivots.push_back(sc->pivot);
    axis_sum += w * a;
  }
  Revolute out = hyp;
  if (!axes.empty() && axis_sum.norm() > 1e-12) {
    out.axis = axis_sum.normalized();
    out.axis *= canonical_sign(out.axis);
    out.pivot = chord_pivot_ls(axes, pivots, out.axis);
  }

  const std::vector<int> frames_in = inlier_frames(pair_inlier);
  if (frames_in.empty()) return out;

  // Anchor q at the first inlier frame, then recover the rotation part of
  // the reference as the chordal mean of the de-rotated inlier rotations.
  const Quat ref0 = frames.rot[frames_in.front()];
  std::vector<double> q_in;
  std::vector<Quat> derot;
  std::vector<Vec3> p_in;
  q_in.reserve(frames_in.size());
  for (int t : frames_in) {
    const double qt =
        twist_angle_about_axis(frames.rot[t] * ref0.conjugate(), out.axis);
    q_in.push_back(qt);
    derot.push_back(axis_angle_quat(out.axis, -qt) * frames.rot[t]);
    p_in.push_back(frames.pos[t]);
  }
  Quat ref_rot = mean_rotation(derot);

  Vec3 pivot, ref_p;
  revolute_translation_ls(out.axis, q_in, p_in, &pivot, &ref_p);
  out.pivot = pivot - pivot.dot(out.axis) * out.axis;
  out.ref = Pose(from_quat(ref_rot), ref_p);
  return out;
}

JointModel refit_prismatic(const std::vector<Pose>& seq,
                           const FrameCache& frames, const Prismatic& hyp,
                           const std::vector<double>& res,
                           const std::vector<char>& pair_inlier,
                           const RansacConfig& cfg) {
  Vec3 axis_sum = Vec3::Zero();
  for (std::size_t i = 0; i < pair_inlier.size(); ++i) {
    if (!pair_inlier[i]) continue;
    const Vec3 dp = seq[i + 1].p - seq[i].p;
    const double dist = dp.norm();
    if (dist < cfg.min_motion) continue;
    Vec3 a = dp / dist;
    if (a.dot(hyp.axis) < 0.0) a = -a;
    const double pres = std::max(res[i], res[i + 1]);
    axis_sum += (dist * dist / (0.1 * cfg.inlier_threshold + pres + 1e-15)) * a;
  }
  Prismatic out = hyp;
  if (axis_sum.norm() > 1e-12) {
    out.axis = axis_sum.normalized();
    out.axis *= canonical_sign(out.axis);
  }
  const std::vector<int> frames_in = inlier_frames(pair_inlier);
  if (!frames_in.empty()) {
    std::vector<Quat> rots;
    Vec3 perp = Vec3::Zero();
    const Mat3 P = Mat3::Identity() - out.axis * out.axis.transpose();
    for (int t : frames_in) {
      rots.push_back(frames.rot[t]);
      perp += P * frames.pos[t];
    }
    out.ref = Pose(from_quat(mean_rotation(rots)),
                   perp / double(frames_in.size()));
  }
  return out;
}

JointModel refit_static(const std::vector<Pose>& seq,
                        const std::vector<char>& pair_inlier,
                        const StaticJoint& hyp) {
  const std::vector<int> frames_in = inlier_frames(pair_inlier);
  if (frames_in.empty()) return hyp;
  std::vector<Pose> sel;
  sel.reserve(frames_in.size());
  for (int t : frames_in) sel.push_back(seq[t]);
  return StaticJoint{fit_static(sel)};
}

}  // namespace

std::optional<JointFitResult> ransac_fit(const std::vector<Pose>& seq,
                                         FitType type,
                                         const RansacConfig& cfg) {
  if (cfg.iterations < 1) throw ConfigError("ransac iterations must be >= 1");
  if (!(cfg.inlier_threshold > 0.0))
    throw ConfigError("ransac inlier_threshold must be positive");
  const int T = static_cast<int>(seq.size());
  if (T < 2) return std::nullopt;
  const int min_inliers =
      cfg.min_inliers >= 0
          ? cfg.min_inliers
          : static_cast<int>(std::ceil(0.5 * double(T - 1)));

  // Enumerate hypothesis pairs carrying enough motion for this joint type.
  // Revolute validity uses the relative rotation angle, not the coordinate
  // difference, so canonicalization flips near the pi boundary cannot make a
  // still pair look like motion.
  std::vector<int> valid;
  for (int t = 0; t + 1 < T; ++t) {
    bool ok = true;
    if (type == FitType::kRevolute)
      ok = rotation_angle_between(seq[t], seq[t + 1]) >= cfg.min_motion;
    else if (type == FitType::kPrismatic)
      ok = (seq[t + 1].p - seq[t].p).norm() >= cfg.min_motion;
    if (ok) valid.push_back(t);
  }
  if (valid.empty()) return std::nullopt;

  JointModel best_model;
  int best_inliers = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<double> best_res;

  for (int k = 0; k < cfg.iterations; ++k) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(k));
    const int t = valid[rng.uniform_int(static_cast<int>(valid.size()))];
    JointModel model;
    if (type == FitType::kRevolute) {
      const auto sc = pair_screw(seq[t], seq[t + 1], cfg.min_motion);
      if (!sc) continue;
      model = Revolute{sc->axis, sc->pivot, seq[t]};
    } else if (type == FitType::kPrismatic) {
      const PrismaticPairFit pf =
          fit_prismatic_pair(seq[t], seq[t + 1], cfg.min_motion);
      Pose ref = seq[t];
      ref.p -= pf.axis.dot(ref.p) * pf.axis;
      model = Prismatic{pf.axis, ref};
    } else {
      model = StaticJoint{fit_static({seq[t], seq[t + 1]})};
    }
    const std::vector<double> res =
        residuals_under(model, seq, cfg.rotation_weight);
    const int inliers = count_pair_inliers(res, cfg.inlier_threshold, nullptr);
    double cost = 0.0;
    for (double r : res) cost += r;
    cost /= double(T);
    if (inliers > best_inliers ||
        (inliers == best_inliers && cost < best_cost)) {
      best_model = model;
      best_inliers = inliers;
      best_cost = cost;
      best_res = res;
    }
  }
  if (best_inliers < min_inliers) return std::nullopt;

  // Refit on the winning hypothesis' inlier set.
  std::vector<char> pair_inlier;
  count_pair_inliers(best_res, cfg.inlier_threshold, &pair_inlier);
  const FrameCache frames = cache_frames(seq);
  JointModel refit = best_model;
  if (type == FitType::kRevolute) {
    refit = refit_revolute(seq, frames, std::get<Revolute>(best_model),
                           best_res, pair_inlier, cfg);
  } else if (type == FitType::kPrismatic) {
    refit = refit_prismatic(seq, frames, std::get<Prismatic>(best_model),
                            best_res, pair_inlier, cfg);
  } else {
    refit = refit_static(seq, pair_inlier, std::get<StaticJoint>(best_model));
  }

  JointFitResult out;
  out.model = refit;
  out.q.resize(T);
  double cost = 0.0;
  std::vector<double> res(T);
  for (int i = 0; i < T; ++i) {
    const JointProjection pr =
        project_to_joint(refit, seq[i], cfg.rotation_weight);
    out.q[i] = pr.q;
    res[i] = pr.residual;
    cost += pr.residual;
  }
  out.cost = cost / double(T);
  out.inlier_count = count_pair_inliers(res, cfg.inlier_threshold, nullptr);
  if (out.inlier_count < min_inliers) return std::nullopt;
  return out;
}

std::optional<JointFitResult> ransac_fit_best(const std::vector<Pose>& seq,
                                              const RansacConfig& cfg) {
  std::optional<JointFitResult> best;
  for (FitType type :
       {FitType::kRevolute, FitType::kPrismatic, FitType::kStatic}) {
    auto r = ransac_fit(seq, type, cfg);
    if (r && (!best || r->cost < best->cost)) best = std::move(r);
  }
  return best;
}

JointModel invert_joint_model(const JointModel& m) {
  if (const auto* rev = std::get_if<Revolute>(&m)) {
    const Pose inv_ref = inverse(rev->ref);
    const Mat3 Rt = to_quat(rev->ref.r).toRotationMatrix().transpose();
    Revolute out;
    out.axis = Rt * rev->axis;
    out.pivot = apply(inv_ref, rev->pivot);
    out.ref = inv_ref;
    out.axis *= canonical_sign(out.axis);
    out.pivot -= out.pivot.dot(out.axis) * out.axis;
    return out;
  }
  if (const auto* pri = std::get_if<Prismatic>(&m)) {
    const Mat3 Rt = to_quat(pri->ref.r).toRotationMatrix().transpose();
    Prismatic out;
    out.axis = (Rt * pri->axis).normalized();
    out.axis *= canonical_sign(out.axis);
    out.ref = inverse(pri->ref);
    out.ref.p -= out.axis.dot(out.ref.p) * out.axis;
    return out;
  }
  if (const auto* sta = std::get_if<StaticJoint>(&m))
    return StaticJoint{inverse(sta->pose)};
  return FreeJoint{};
}

}  // namespace artik
