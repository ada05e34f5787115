#include "artik/pose.hpp"

#include <cmath>

namespace artik {

namespace {

constexpr double kTinyAngle = 1e-14;
constexpr double kPiBoundary = 1e-12;

// Flip r so its first nonzero component is positive. Used only on the
// sign-ambiguous |r| = pi shell.
Vec3 fix_pi_sign(const Vec3& r) {
  for (int i = 0; i < 3; ++i) {
    if (r[i] > 0.0) return r;
    if (r[i] < 0.0) return -r;
  }
  return r;
}

}  // namespace

Quat to_quat(const Vec3& r) {
  const double angle = r.norm();
  if (angle < kTinyAngle) {
    // First-order expansion keeps to_quat smooth through zero.
    Quat q(1.0, 0.5 * r.x(), 0.5 * r.y(), 0.5 * r.z());
    q.normalize();
    return q;
  }
  const Vec3 axis = r / angle;
  const double half = 0.5 * angle;
  const double s = std::sin(half);
  return Quat(std::cos(half), s * axis.x(), s * axis.y(), s * axis.z());
}

Vec3 from_quat(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();  // pick representative with w >= 0
  const double vnorm = q.vec().norm();
  const double angle = 2.0 * std::atan2(vnorm, q.w());  // in [0, pi]
  if (vnorm < kTinyAngle) return 2.0 * q.vec();
  Vec3 r = (angle / vnorm) * q.vec();
  if (std::abs(angle - M_PI) <= kPiBoundary) r = fix_pi_sign(r);
  return r;
}

Vec3 canonicalize_rotation(const Vec3& r) {
  double angle = r.norm();
  if (angle < kTinyAngle) return Vec3::Zero();
  Vec3 axis = r / angle;
  angle = std::fmod(angle, 2.0 * M_PI);
  if (angle < 0.0) angle += 2.0 * M_PI;
  if (angle > M_PI) {
    angle = 2.0 * M_PI - angle;
    axis = -axis;
  }
  Vec3 out = angle * axis;
  if (std::abs(angle - M_PI) <= kPiBoundary) out = fix_pi_sign(out);
  return out;
}

Pose canonicalize(const Pose& t) { return Pose(canonicalize_rotation(t.r), t.p); }

Vec3 rotate(const Pose& t, const Vec3& v) { return to_quat(t.r) * v; }

Vec3 apply(const Pose& t, const Vec3& x) { return to_quat(t.r) * x + t.p; }

Pose compose(const Pose& a, const Pose& b) {
  const Quat qa = to_quat(a.r);
  const Quat qb = to_quat(b.r);
  return Pose(from_quat(qa * qb), qa * b.p + a.p);
}

Pose inverse(const Pose& t) {
  const Quat qi = to_quat(t.r).conjugate();
  return Pose(from_quat(qi), -(qi * t.p));
}

Pose relative_transform(const Pose& a, const Pose& b) {
  return compose(inverse(a), b);
}

double rotation_angle_between(const Pose& a, const Pose& b) {
  const Quat d = to_quat(a.r).conjugate() * to_quat(b.r);
  return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

Pose rotation_about_line(const Vec3& axis, const Vec3& pivot, double angle) {
  const Quat q = to_quat(canonicalize_rotation(axis.normalized() * angle));
  return Pose(from_quat(q), pivot - q * pivot);
}

double twist_angle_about_axis(const Quat& q_in, const Vec3& axis) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return 2.0 * std::atan2(q.vec().dot(axis), q.w());
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

}  // namespace artik
