#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "artik/pose.hpp"

namespace artik {

// 1-DoF joint hypotheses over a relative pose sequence T[t] (child expressed
// in parent). Each model describes the manifold the sequence should lie on:
//   revolute:  T(q) = Rot(axis, pivot, q) * ref
//   prismatic: T(q) = Trans(axis * (q - axis . ref.p)) * ref, so q = axis . T.p
//   static:    T(q) = pose for all q
// `ref` anchors the manifold at the data; q is measured relative to it.
struct Revolute {
  Vec3 axis{Vec3::UnitZ()};  // unit, first nonzero component positive
  Vec3 pivot{Vec3::Zero()};  // point on the axis line closest to the origin
  Pose ref;                  // relative pose at q = 0
};

struct Prismatic {
  Vec3 axis{Vec3::UnitX()};  // unit, first nonzero component positive
  Pose ref;                  // ref.p has no component along axis
};

struct StaticJoint {
  Pose pose;
};

struct FreeJoint {};  // unconstrained 6-DoF attachment

using JointModel = std::variant<Revolute, Prismatic, StaticJoint, FreeJoint>;

const char* joint_type_name(const JointModel& m);

struct RansacConfig {
  int iterations = 200;
  double inlier_threshold = 0.01;
  // Pairs that must fall within the threshold; -1 resolves to
  // ceil(0.5 * (frames - 1)) at fit time.
  int min_inliers = -1;
  double min_motion = 1e-6;      // below this a pair is degenerate
  double rotation_weight = 1.0;  // lambda in the residual metric
  std::uint64_t seed = 0;
};

struct JointFitResult {
  JointModel model;
  double cost = 0.0;      // mean per-frame residual over the whole sequence
  int inlier_count = 0;   // consecutive pairs within the inlier threshold
  std::vector<double> q;  // per-frame joint coordinate under the model
};

struct JointProjection {
  double q = 0.0;
  Pose reconstructed;
  double residual = 0.0;
};

// Weighted pose distance: |relative rotation angle| * lambda + |dp|.
double pose_residual(const Pose& a, const Pose& b, double rotation_weight);

// Closed-form single-pair fits from consecutive relative poses t_a -> t_b.
// dr = t_b.r - t_a.r (plain axis-angle difference), dp = t_b.p - t_a.p:
//   revolute:  axis = dr/|dr|, pivot = t_a.p + (dr x dp)/|dr|^2, q = |dr|
//   prismatic: axis = dp/|dp|, q = axis . t_b.p
// Valid when consecutive rotations stay well inside the +-pi ball and share
// an axis; callers gate pairs on min_motion. Axis sign is canonicalized to
// first-nonzero-positive with q flipped to match.
struct RevolutePairFit {
  Vec3 axis;
  Vec3 pivot;
  double q;
};
struct PrismaticPairFit {
  Vec3 axis;
  double q;
};
// Throw DegenerateRotation / DegenerateTranslation when the pair carries no
// usable motion (|dr| or |dp| < min_motion).
RevolutePairFit fit_revolute_pair(const Pose& t_a, const Pose& t_b,
                                  double min_motion = 1e-6);
PrismaticPairFit fit_prismatic_pair(const Pose& t_a, const Pose& t_b,
                                    double min_motion = 1e-6);

// Chordal-mean pose of a sequence: rotation via the quaternion outer-product
// eigenvector, translation via the arithmetic mean.
Pose fit_static(const std::vector<Pose>& seq);

// Best 1-DoF coordinate explaining t under the model, the model pose at that
// coordinate, and the residual between them.
JointProjection project_to_joint(const JointModel& model, const Pose& t,
                                 double rotation_weight = 1.0);

// Model pose at coordinate q (the reconstruction used by project_to_joint).
Pose joint_model_pose(const JointModel& model, double q);

// Mean per-frame projection residual over the sequence.
double model_error(const JointModel& model, const std::vector<Pose>& seq,
                   double rotation_weight = 1.0);

enum class FitType { kRevolute, kPrismatic, kStatic };

// RANSAC over consecutive-pair hypotheses: sample a valid pair, build the
// closed-form model, score by inlier count then cost, refit on inliers.
// Returns nullopt when no valid pair exists or the best model fails
// min_inliers.
std::optional<JointFitResult> ransac_fit(const std::vector<Pose>& seq,
                                         FitType type,
                                         const RansacConfig& cfg);

// Lowest-cost model among revolute/prismatic/static fits, if any succeeds.
std::optional<JointFitResult> ransac_fit_best(const std::vector<Pose>& seq,
                                              const RansacConfig& cfg);

// Model for the reversed parent/child direction: reproduces the inverted
// relative sequence with the same per-frame residuals.
JointModel invert_joint_model(const JointModel& m);

}  // namespace artik
