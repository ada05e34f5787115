#include "artik/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

#include "artik/errors.hpp"

namespace artik {

const char* joint_kind_name(JointKind k) {
  switch (k) {
    case JointKind::kRevolute: return "revolute";
    case JointKind::kPrismatic: return "prismatic";
    case JointKind::kFixed: return "fixed";
    case JointKind::kFloating: return "floating";
  }
  return "?";
}

int Mechanism::dof() const {
  int d = 0;
  for (const MechJoint& j : joints) {
    if (j.kind == JointKind::kFloating) d += 6;
    else if (j.kind != JointKind::kFixed) d += 1;
  }
  return d;
}

std::vector<int> Mechanism::coord_offsets() const {
  std::vector<int> off(joints.size());
  int d = 0;
  for (std::size_t i = 0; i < joints.size(); ++i) {
    off[i] = d;
    if (joints[i].kind == JointKind::kFloating) d += 6;
    else if (joints[i].kind != JointKind::kFixed) d += 1;
  }
  return off;
}

void Mechanism::validate() const {
  const int n = static_cast<int>(links.size());
  if (n == 0) throw ConfigError("mechanism has no links");
  for (const Link& l : links) {
    if (!(l.mass > 0.0))
      throw ConfigError("link " + l.name + ": mass must be positive");
    const Vec3& I = l.inertia;
    for (int a = 0; a < 3; ++a)
      if (!(I[a] > 0.0))
        throw ConfigError("link " + l.name + ": inertia must be positive");
    if (I.x() > I.y() + I.z() || I.y() > I.x() + I.z() ||
        I.z() > I.x() + I.y())
      throw ConfigError("link " + l.name +
                        ": inertia violates the triangle inequalities");
  }
  if (static_cast<int>(joints.size()) != n)
    throw ConfigError("mechanism needs exactly one joint per link");
  std::vector<char> has_parent(n, 0);
  std::vector<char> defined(n, 0);
  for (const MechJoint& j : joints) {
    if (j.child < 0 || j.child >= n)
      throw ConfigError("joint child index out of range");
    if (has_parent[j.child])
      throw ConfigError("link " + links[j.child].name + " has two parents");
    has_parent[j.child] = 1;
    if (j.parent >= n) throw ConfigError("joint parent index out of range");
    if (j.parent >= 0 && !defined[j.parent])
      throw ConfigError("joints are not in parent-first order");
    if (j.parent == j.child) throw ConfigError("joint connects link to itself");
    defined[j.child] = 1;
    if ((j.kind == JointKind::kRevolute || j.kind == JointKind::kPrismatic) &&
        j.axis.norm() < 1e-9)
      throw ConfigError("joint axis must be nonzero");
    if (j.damping < 0.0) throw ConfigError("joint damping must be >= 0");
  }
}

// ---- parameter paths ----

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string item;
  while (std::getline(ss, item, '/')) parts.push_back(item);
  return parts;
}

int parse_index(const std::string& s, int limit, const std::string& path) {
  int v = -1;
  try {
    v = std::stoi(s);
  } catch (...) {
    throw ConfigError("bad index in parameter path " + path);
  }
  if (v < 0 || v >= limit)
    throw ConfigError("index out of range in parameter path " + path);
  return v;
}

// Returns a pointer to the addressed scalar, shared by read and write.
double* param_slot(Mechanism* m, const std::string& path) {
  const std::vector<std::string> parts = split_path(path);
  if (parts.size() == 3 && parts[0] == "links" && parts[2] == "mass")
    return &m->links[parse_index(parts[1], int(m->links.size()), path)].mass;
  if (parts.size() == 4 && parts[0] == "links") {
    Link& l = m->links[parse_index(parts[1], int(m->links.size()), path)];
    const int a = parse_index(parts[3], 3, path);
    if (parts[2] == "inertia") return &l.inertia[a];
    if (parts[2] == "com") return &l.com[a];
  }
  if (parts.size() == 3 && parts[0] == "joints" && parts[2] == "damping")
    return &m->joints[parse_index(parts[1], int(m->joints.size()), path)]
                .damping;
  throw ConfigError("unknown parameter path " + path);
}

}  // namespace

double read_param(const Mechanism& m, const std::string& path) {
  return *param_slot(const_cast<Mechanism*>(&m), path);
}

void write_param(Mechanism* m, const std::string& path, double value) {
  *param_slot(m, path) = value;
}

std::vector<double> ParamSpec::get(const Mechanism& m) const {
  std::vector<double> out(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i)
    out[i] = read_param(m, entries[i].path);
  return out;
}

void ParamSpec::apply(Mechanism* m, const std::vector<double>& theta) const {
  if (theta.size() != entries.size())
    throw DimensionMismatch("parameter vector has " +
                            std::to_string(theta.size()) + " entries, spec " +
                            std::to_string(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i)
    write_param(m, entries[i].path, theta[i]);
}

std::vector<double> ParamSpec::to_physical(const std::vector<double>& z) const {
  if (z.size() != entries.size())
    throw DimensionMismatch("normalized vector size mismatch");
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = entries[i].lo + z[i] * (entries[i].hi - entries[i].lo);
  return out;
}

std::vector<double> ParamSpec::to_normalized(
    const std::vector<double>& theta) const {
  if (theta.size() != entries.size())
    throw DimensionMismatch("parameter vector size mismatch");
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    out[i] = (theta[i] - entries[i].lo) / (entries[i].hi - entries[i].lo);
  return out;
}

// ---- presets ----

namespace {

std::vector<std::vector<double>> chirp_controls(int frames, double dt,
                                                double amp, double f0,
                                                double f1) {
  // Linear frequency sweep; instantaneous frequency runs f0 -> f1 across
  // the recording so both slow cart motion and fast pole response appear.
  const double T = frames * dt;
  std::vector<std::vector<double>> u(std::size_t(std::max(0, frames - 1)));
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double t = double(k) * dt;
    const double phase = 2.0 * M_PI * (f0 * t + (f1 - f0) * t * t / (2.0 * T));
    u[k] = {amp * std::sin(phase)};
  }
  return u;
}

Preset make_cartpole(int frames, double dt) {
  Preset p;
  p.mech.name = "cartpole";
  p.mech.links = {
      {"cart", 1.0, Vec3::Zero(), Vec3(0.01, 0.01, 0.01)},
      {"pole", 0.25, Vec3(0, 0, -0.3), Vec3(0.0075, 0.0075, 1e-4)},
  };
  MechJoint slide;
  slide.kind = JointKind::kPrismatic;
  slide.parent = -1;
  slide.child = 0;
  slide.axis = Vec3::UnitX();
  slide.damping = 0.1;
  slide.actuated = true;
  MechJoint hinge;
  hinge.kind = JointKind::kRevolute;
  hinge.parent = 0;
  hinge.child = 1;
  hinge.axis = Vec3::UnitY();
  hinge.pivot = Vec3::Zero();
  hinge.damping = 0.02;
  p.mech.joints = {slide, hinge};
  p.params.entries = {
      {"links/0/mass", 0.1, 4.0},
      {"links/1/mass", 0.02, 1.0},
      {"links/1/inertia/1", 5e-4, 0.05},
      {"joints/1/damping", 0.0, 0.2},
  };
  p.x0 = {{0.0, 0.3}, {0.0, 0.0}};
  p.dt = dt > 0 ? dt : 0.05;
  p.frames = frames > 1 ? frames : 200;
  p.controls = chirp_controls(p.frames, p.dt, 1.5, 0.2, 0.5);
  return p;
}

Preset make_double_pendulum() {
  // Two pendula with natural frequencies close to 2:1. The first link is
  // L-shaped: its center of mass sits off the pivot-to-elbow line, so both
  // in-plane components of its inertia matter.
  Preset p;
  p.mech.name = "double_pendulum";
  p.mech.links = {
      {"link1", 0.6, Vec3(0.05, 0, -0.25), Vec3(0.012, 0.012, 0.012)},
      {"link2", 0.3, Vec3(0, 0, -0.0623), Vec3(3.9e-4, 3.9e-4, 3.9e-4)},
  };
  MechJoint shoulder;
  shoulder.kind = JointKind::kRevolute;
  shoulder.parent = -1;
  shoulder.child = 0;
  shoulder.axis = Vec3::UnitY();
  shoulder.pivot = Vec3::Zero();
  shoulder.damping = 0.01;
  MechJoint elbow;
  elbow.kind = JointKind::kRevolute;
  elbow.parent = 0;
  elbow.child = 1;
  elbow.axis = Vec3::UnitY();
  elbow.pivot = Vec3(0.2, 0, -0.4);
  // Link2's frame sits on the elbow axis, so its 0.0623 m center-of-mass
  // drop is measured from its own hinge. That arm sets the 2:1 tuning.
  elbow.ref.p = elbow.pivot;
  elbow.damping = 0.004;
  p.mech.joints = {shoulder, elbow};
  p.params.entries = {
      {"links/0/mass", 0.1, 2.0},
      {"links/0/inertia/1", 1e-3, 0.05},
      {"links/1/mass", 0.05, 1.0},
      {"links/1/inertia/1", 5e-5, 5e-3},
  };
  p.x0 = {{0.85, 0.0}, {0.0, 0.0}};
  p.dt = 0.01;
  p.frames = 400;
  return p;
}

Preset make_three_link() {
  Preset p;
  p.mech.name = "three_link";
  p.mech.links = {
      {"link1", 0.5, Vec3(0, 0, -0.2), Vec3(0.008, 0.008, 0.0008)},
      {"link2", 0.4, Vec3(0, 0, -0.15), Vec3(0.004, 0.004, 0.0004)},
      {"link3", 0.3, Vec3(0, 0, -0.1), Vec3(0.002, 0.002, 0.0002)},
  };
  MechJoint j0;
  j0.kind = JointKind::kRevolute;
  j0.parent = -1;
  j0.child = 0;
  j0.axis = Vec3::UnitY();
  j0.damping = 0.01;
  MechJoint j1;
  j1.kind = JointKind::kRevolute;
  j1.parent = 0;
  j1.child = 1;
  j1.axis = Vec3::UnitY();
  j1.pivot = Vec3(0, 0, -0.4);
  j1.ref.p = j1.pivot;  // link frame on its own hinge
  j1.damping = 0.008;
  MechJoint j2;
  j2.kind = JointKind::kRevolute;
  j2.parent = 1;
  j2.child = 2;
  j2.axis = Vec3::UnitX();
  j2.pivot = Vec3(0, 0, -0.3);
  j2.ref.p = j2.pivot;  // link frame on its own hinge
  j2.damping = 0.005;
  p.mech.joints = {j0, j1, j2};
  p.params.entries = {
      {"links/0/mass", 0.1, 2.0},
      {"links/1/mass", 0.1, 2.0},
      {"links/2/mass", 0.05, 1.0},
  };
  p.x0 = {{0.9, -0.5, 0.6}, {0.0, 0.0, 0.0}};
  p.dt = 0.01;
  p.frames = 400;
  return p;
}

Preset make_free_body() {
  // Ballistic tumble: distinct principal moments so the body precesses, a
  // spin axis near z so the orientation chart stays far from its singular
  // pitch, and enough flight time for gravity to bend the path visibly.
  Preset p;
  p.mech.name = "free_body";
  p.mech.links = {
      {"body", 0.8, Vec3::Zero(), Vec3(0.01, 0.014, 0.02)},
  };
  MechJoint base;
  base.kind = JointKind::kFloating;
  base.parent = -1;
  base.child = 0;
  p.mech.joints = {base};
  p.params.entries = {
      {"links/0/inertia/0", 0.005, 0.05},
      {"links/0/inertia/1", 0.005, 0.05},
      {"links/0/inertia/2", 0.005, 0.05},
  };
  p.x0 = {{0, 0, 0, 0, 0, 0}, {0.4, 0.15, 2.2, 0.2, 0.1, 0.9}};
  p.dt = 0.01;
  p.frames = 150;
  return p;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"cartpole", "double_pendulum", "three_link", "free_body"};
}

Preset preset(const std::string& name, int frames, double dt) {
  Preset p;
  if (name == "cartpole") {
    // Cartpole regenerates its excitation so the sweep spans whatever
    // recording length is requested.
    p = make_cartpole(frames, dt);
  } else if (name == "double_pendulum") {
    p = make_double_pendulum();
  } else if (name == "three_link") {
    p = make_three_link();
  } else if (name == "free_body") {
    p = make_free_body();
  } else {
    throw ConfigError("unknown preset " + name);
  }
  if (frames > 1) p.frames = frames;
  if (dt > 0) p.dt = dt;
  p.mech.validate();
  return p;
}

Mechanism mechanism_from_world(const WorldModel& wm,
                               const Mechanism& defaults) {
  const int n = static_cast<int>(wm.body_names.size());
  if (static_cast<int>(defaults.links.size()) != n)
    throw DimensionMismatch("world model has " + std::to_string(n) +
                            " bodies, defaults " +
                            std::to_string(defaults.links.size()) + " links");
  Mechanism m;
  m.name = defaults.name;
  m.gravity = defaults.gravity;
  m.links = defaults.links;

  // Damping and actuation carry over by the unordered body pair the joint
  // connects (-1 for the world side); orientation flips don't change them.
  std::map<std::pair<int, int>, std::pair<double, bool>> dyn;
  for (const MechJoint& j : defaults.joints)
    dyn[std::minmax(j.parent, j.child)] = {j.damping, j.actuated};

  const auto push = [&](int parent, int child, const JointModel& model) {
    MechJoint j;
    j.parent = parent;
    j.child = child;
    if (const auto* rev = std::get_if<Revolute>(&model)) {
      j.kind = JointKind::kRevolute;
      j.axis = rev->axis;
      j.pivot = rev->pivot;
      j.ref = rev->ref;
    } else if (const auto* pri = std::get_if<Prismatic>(&model)) {
      j.kind = JointKind::kPrismatic;
      j.axis = pri->axis;
      j.ref = pri->ref;
    } else if (const auto* sta = std::get_if<StaticJoint>(&model)) {
      j.kind = JointKind::kFixed;
      j.ref = sta->pose;
    } else {
      j.kind = JointKind::kFloating;
    }
    const auto it = dyn.find(std::minmax(parent, child));
    if (it != dyn.end()) {
      j.damping = it->second.first;
      j.actuated = it->second.second;
    }
    m.joints.push_back(j);
  };

  for (const KinematicTree& tree : wm.trees) {
    if (tree.base == BaseMode::kFixed)
      push(-1, tree.root, tree.root_joint);
    else
      push(-1, tree.root, JointModel(FreeJoint{}));
    for (const WorldJoint& wj : tree.joints) push(wj.parent, wj.child, wj.model);
  }
  return m;
}

namespace {

JointKind model_kind(const JointModel& m) {
  if (std::holds_alternative<Revolute>(m)) return JointKind::kRevolute;
  if (std::holds_alternative<Prismatic>(m)) return JointKind::kPrismatic;
  if (std::holds_alternative<StaticJoint>(m)) return JointKind::kFixed;
  return JointKind::kFloating;
}

std::optional<Vec3> model_axis(const JointModel& m) {
  if (const auto* rev = std::get_if<Revolute>(&m)) return rev->axis;
  if (const auto* pri = std::get_if<Prismatic>(&m)) return pri->axis;
  return std::nullopt;
}

double line_angle(const Vec3& a, const Vec3& b) {
  const Vec3 u = a.normalized();
  const Vec3 v = b.normalized();
  return std::atan2(u.cross(v).norm(), std::abs(u.dot(v)));
}

}  // namespace

TopologyMatch compare_topology(const WorldModel& wm, const Mechanism& truth) {
  TopologyMatch out;
  const auto body_name = [&](int id) {
    if (id < 0) return std::string("world");
    if (id < static_cast<int>(wm.body_names.size())) return wm.body_names[id];
    return "body" + std::to_string(id);
  };
  if (wm.body_names.size() != truth.links.size()) {
    out.detail = "body count " + std::to_string(wm.body_names.size()) +
                 " differs from reference " +
                 std::to_string(truth.links.size());
    return out;
  }

  std::map<std::pair<int, int>, const MechJoint*> ref;
  for (const MechJoint& j : truth.joints)
    ref[std::minmax(j.parent, j.child)] = &j;

  struct InfEdge {
    int parent, child;
    JointKind kind;
    std::optional<Vec3> axis;
  };
  std::vector<InfEdge> edges;
  for (const KinematicTree& tree : wm.trees) {
    if (tree.base == BaseMode::kFixed)
      edges.push_back({-1, tree.root, model_kind(tree.root_joint),
                       model_axis(tree.root_joint)});
    else
      edges.push_back({-1, tree.root, JointKind::kFloating, std::nullopt});
    for (const WorldJoint& wj : tree.joints)
      edges.push_back(
          {wj.parent, wj.child, model_kind(wj.model), model_axis(wj.model)});
  }

  if (edges.size() != truth.joints.size()) {
    out.detail = std::to_string(edges.size()) + " joints inferred, reference has " +
                 std::to_string(truth.joints.size());
    return out;
  }

  std::map<std::pair<int, int>, bool> used;
  for (const InfEdge& e : edges) {
    const auto key = std::minmax(e.parent, e.child);
    const auto it = ref.find(key);
    if (it == ref.end()) {
      out.detail = "no reference joint between " + body_name(e.parent) +
                   " and " + body_name(e.child);
      return out;
    }
    if (used[key]) {
      out.detail = "duplicate joint between " + body_name(e.parent) + " and " +
                   body_name(e.child);
      return out;
    }
    used[key] = true;
    const MechJoint& r = *it->second;
    if (r.kind != e.kind) {
      out.detail = body_name(e.parent) + "->" + body_name(e.child) +
                   " inferred " + joint_kind_name(e.kind) + ", reference " +
                   joint_kind_name(r.kind);
      return out;
    }
    if (e.axis) {
      // The reference axis lives in the reference parent frame; when the
      // inferred edge runs the other way it lives in the reference child
      // frame instead, one ref-rotation away.
      Vec3 b = r.axis;
      if (e.parent != r.parent) b = to_quat(r.ref.r).conjugate() * b;
      out.max_axis_err = std::max(out.max_axis_err, line_angle(*e.axis, b));
    }
  }
  out.exact = true;
  return out;
}

}  // namespace artik
