#pragma once

#include <Eigen/Dense>

namespace artik {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

// Rigid transform stored as canonical axis-angle rotation plus translation.
// Canonical form: |r| <= pi; at the |r| = pi boundary the sign ambiguity is
// resolved by making the first nonzero component of r positive.
struct Pose {
  Vec3 r{Vec3::Zero()};  // axis-angle rotation vector, radians
  Vec3 p{Vec3::Zero()};  // translation, meters

  Pose() = default;
  Pose(const Vec3& r_, const Vec3& p_) : r(r_), p(p_) {}

  static Pose identity() { return Pose(); }
};

// Axis-angle <-> quaternion. from_quat always returns a canonical vector.
Quat to_quat(const Vec3& r);
Vec3 from_quat(const Quat& q);

// Wrap an arbitrary rotation vector into canonical form.
Vec3 canonicalize_rotation(const Vec3& r);
Pose canonicalize(const Pose& t);

// Rotate a vector / map a point by the pose.
Vec3 rotate(const Pose& t, const Vec3& v);
Vec3 apply(const Pose& t, const Vec3& x);

// SE(3) composition: result maps coordinates through b, then a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& t);

// Transform of b expressed in the frame of a: inverse(a) * b.
Pose relative_transform(const Pose& a, const Pose& b);

// Geodesic angle between the two rotations, in [0, pi].
double rotation_angle_between(const Pose& a, const Pose& b);

// Rotation about the line through `pivot` with direction `axis` (unit).
Pose rotation_about_line(const Vec3& axis, const Vec3& pivot, double angle);

// Twist angle of rotation q about a fixed unit axis, in (-pi, pi].
// Exact whenever q is a rotation about that axis.
double twist_angle_about_axis(const Quat& q, const Vec3& axis);

// Wrap a scalar angle into (-pi, pi].
double wrap_angle(double a);

}  // namespace artik
