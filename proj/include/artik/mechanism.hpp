#pragma once

// Simulatable mechanism description: a kinematic tree of links connected by
// low-DoF joints, each link carrying rigid-body inertia. Mechanisms come
// from three places: built-in presets (ground truth for synthetic data),
// articulation inference (geometry from observation, inertia unknown), and
// JSON round-trips.

#include <cstdint>
#include <string>
#include <vector>

#include "artik/pose.hpp"
#include "artik/topology.hpp"

namespace artik {

struct Link {
  std::string name;
  double mass = 1.0;
  Vec3 com = Vec3::Zero();       // in the link frame
  Vec3 inertia = Vec3::Ones();   // principal moments about the com, link axes
};

enum class JointKind { kRevolute, kPrismatic, kFixed, kFloating };

const char* joint_kind_name(JointKind k);

// Joint i connects links[parent] (or the world when parent == -1) to
// links[child]. The child pose in the parent frame at coordinate q follows
// the same manifolds as the fitted models:
//   revolute   Rot(axis, pivot, q) * ref
//   prismatic  ref translated to q along axis (q = axis . p)
//   fixed      ref
//   floating   6 DoF, translation xyz then intrinsic xyz rotation
struct MechJoint {
  JointKind kind = JointKind::kRevolute;
  int parent = -1;
  int child = 0;
  Vec3 axis = Vec3::UnitZ();
  Vec3 pivot = Vec3::Zero();
  Pose ref;
  double damping = 0.0;   // viscous, opposes each coordinate's rate
  bool actuated = false;  // accepts an external generalized force
};

struct Mechanism {
  std::string name;
  std::vector<Link> links;
  std::vector<MechJoint> joints;  // topologically ordered, parent first
  Vec3 gravity = Vec3(0, 0, -9.81);

  int dof() const;
  // First generalized-coordinate index of each joint (floating takes 6).
  std::vector<int> coord_offsets() const;
  void validate() const;  // throws ConfigError on a malformed tree
};

// Generalized state, laid out joint by joint in mechanism order.
struct SimState {
  std::vector<double> q;
  std::vector<double> qd;
};

// One tunable scalar inside a Mechanism, addressed by path:
//   links/<i>/mass, links/<i>/com/<a>, links/<i>/inertia/<a>,
//   joints/<i>/damping            (<a> is 0, 1, or 2)
struct ParamEntry {
  std::string path;
  double lo = 0.0;
  double hi = 1.0;
};

struct ParamSpec {
  std::vector<ParamEntry> entries;

  int size() const { return static_cast<int>(entries.size()); }
  std::vector<double> get(const Mechanism& m) const;
  void apply(Mechanism* m, const std::vector<double>& theta) const;
  // Map normalized coordinates in [0, 1] to physical values and back.
  std::vector<double> to_physical(const std::vector<double>& z) const;
  std::vector<double> to_normalized(const std::vector<double>& theta) const;
};

double read_param(const Mechanism& m, const std::string& path);
void write_param(Mechanism* m, const std::string& path, double value);

// A self-contained benchmark scene: the true mechanism, the parameters a
// fitting run is allowed to touch, an initial state, and the open-loop
// excitation applied while recording (empty when the scene is passive).
struct Preset {
  Mechanism mech;
  ParamSpec params;
  SimState x0;
  double dt = 0.01;
  int frames = 400;
  // Generalized force on the actuated coordinates at step index k; empty
  // vector means unforced.
  std::vector<std::vector<double>> controls;
};

std::vector<std::string> preset_names();
// Throws ConfigError when the name is unknown. frames > 1 or dt > 0
// override the scene defaults (excitation is regenerated to match).
Preset preset(const std::string& name, int frames = -1, double dt = -1.0);

// Build a simulatable mechanism from an inferred articulation: joint
// geometry (kinds, axes, pivots, mounting poses) comes from the world
// model, inertial values and damping from `defaults`, matched by body id.
// Link order follows body ids so parameter paths port across.
Mechanism mechanism_from_world(const WorldModel& wm,
                               const Mechanism& defaults);

// Structural agreement between an inferred articulation and a reference
// mechanism: exact iff both connect the same body pairs (world included)
// with the same joint kinds. max_axis_err is the largest angle between a
// fitted revolute/prismatic axis and its reference line (sign-insensitive,
// frame-corrected when the inferred edge runs child-to-parent).
struct TopologyMatch {
  bool exact = false;
  double max_axis_err = 0.0;  // radians; 0 when no 1-DoF joints matched
  std::string detail;         // first structural mismatch, empty when exact
};

TopologyMatch compare_topology(const WorldModel& wm, const Mechanism& truth);

}  // namespace artik
