#include "artik/json_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "artik/errors.hpp"

namespace artik {

namespace {

json pose_to_json(const Pose& t) {
  return json::array({t.r.x(), t.r.y(), t.r.z(), t.p.x(), t.p.y(), t.p.z()});
}

Pose pose_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 6)
    throw ParseError(where + ": pose must be [rx, ry, rz, px, py, pz]");
  Pose t;
  for (int k = 0; k < 6; ++k) {
    if (!j[k].is_number())
      throw ParseError(where + ": pose entry " + std::to_string(k) +
                       " is not a number");
  }
  t.r = Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  t.p = Vec3(j[3].get<double>(), j[4].get<double>(), j[5].get<double>());
  return t;
}

json vec3_to_json(const Vec3& v) {
  return json::array({v.x(), v.y(), v.z()});
}

Vec3 vec3_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError(where + ": expected a 3-vector");
  for (int k = 0; k < 3; ++k)
    if (!j[k].is_number())
      throw ParseError(where + ": entry " + std::to_string(k) +
                       " is not a number");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

const json& field(const json& j, const char* key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw ParseError(where + ": missing field \"" + key + "\"");
  return *it;
}

double number_field(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number())
    throw ParseError(where + ": field \"" + key + "\" is not a number");
  return v.get<double>();
}

std::string string_field(const json& j, const char* key,
                         const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_string())
    throw ParseError(where + ": field \"" + key + "\" is not a string");
  return v.get<std::string>();
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& v : j) {
    if (!v.is_number())
      throw ParseError(where + ": array entry is not a number");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

json observations_to_json(const ObservationSet& obs) {
  json j;
  j["dt"] = obs.dt;
  if (obs.seed) j["seed"] = *obs.seed;
  if (!obs.scene.empty()) j["scene"] = obs.scene;
  json bodies = json::array();
  for (const BodyTrajectory& b : obs.bodies) {
    json jb;
    jb["id"] = b.body_id;
    jb["name"] = b.name;
    json poses = json::array();
    for (const Pose& t : b.poses) poses.push_back(pose_to_json(t));
    jb["poses"] = std::move(poses);
    bodies.push_back(std::move(jb));
  }
  j["bodies"] = std::move(bodies);
  return j;
}

ObservationSet observations_from_json(const json& j) {
  ObservationSet obs;
  obs.dt = number_field(j, "dt", "observations");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer())
      throw ParseError("observations: field \"seed\" is not an integer");
    obs.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("scene")) obs.scene = string_field(j, "scene", "observations");
  const json& bodies = field(j, "bodies", "observations");
  if (!bodies.is_array())
    throw ParseError("observations: \"bodies\" is not an array");
  for (const json& jb : bodies) {
    BodyTrajectory b;
    const std::string where =
        "observations body " + std::to_string(obs.bodies.size());
    b.body_id = static_cast<int>(number_field(jb, "id", where));
    b.name = string_field(jb, "name", where);
    b.dt = obs.dt;
    const json& poses = field(jb, "poses", where);
    if (!poses.is_array())
      throw ParseError(where + ": \"poses\" is not an array");
    b.poses.reserve(poses.size());
    for (const json& jp : poses) b.poses.push_back(pose_from_json(jp, where));
    obs.bodies.push_back(std::move(b));
  }
  validate(obs);
  return obs;
}

json joint_model_to_json(const JointModel& m) {
  json j;
  if (const Revolute* r = std::get_if<Revolute>(&m)) {
    j["type"] = "revolute";
    j["axis"] = vec3_to_json(r->axis);
    j["pivot"] = vec3_to_json(r->pivot);
    j["ref"] = pose_to_json(r->ref);
  } else if (const Prismatic* p = std::get_if<Prismatic>(&m)) {
    j["type"] = "prismatic";
    j["axis"] = vec3_to_json(p->axis);
    j["ref"] = pose_to_json(p->ref);
  } else if (const StaticJoint* s = std::get_if<StaticJoint>(&m)) {
    j["type"] = "static";
    j["pose"] = pose_to_json(s->pose);
  } else {
    j["type"] = "free";
  }
  return j;
}

JointModel joint_model_from_json(const json& j) {
  const std::string type = string_field(j, "type", "joint");
  const std::string where = "joint (" + type + ")";
  if (type == "revolute") {
    Revolute r;
    r.axis = vec3_from_json(field(j, "axis", where), where);
    r.pivot = vec3_from_json(field(j, "pivot", where), where);
    if (j.contains("ref")) r.ref = pose_from_json(j["ref"], where);
    return r;
  }
  if (type == "prismatic") {
    Prismatic p;
    p.axis = vec3_from_json(field(j, "axis", where), where);
    if (j.contains("ref")) p.ref = pose_from_json(j["ref"], where);
    return p;
  }
  if (type == "static") {
    StaticJoint s;
    s.pose = pose_from_json(field(j, "pose", where), where);
    return s;
  }
  if (type == "free") return FreeJoint{};
  throw ParseError("joint: unknown type \"" + type + "\"");
}

json world_model_to_json(const WorldModel& wm) {
  json j;
  j["dt"] = wm.dt;
  j["frames"] = wm.frames;
  j["body_names"] = wm.body_names;
  json trees = json::array();
  for (const KinematicTree& tree : wm.trees) {
    json jt;
    jt["root"] = tree.root;
    json base;
    if (tree.base == BaseMode::kFixed) {
      base["mode"] = "fixed";
      base["joint"] = joint_model_to_json(tree.root_joint);
      base["q"] = tree.root_q;
    } else {
      base["mode"] = "floating";
      json poses = json::array();
      for (const Pose& t : tree.root_poses) poses.push_back(pose_to_json(t));
      base["poses"] = std::move(poses);
    }
    jt["base"] = std::move(base);
    json edges = json::array();
    for (const WorldJoint& wj : tree.joints) {
      json je;
      je["parent"] = wj.parent;
      je["child"] = wj.child;
      je["joint"] = joint_model_to_json(wj.model);
      je["q"] = wj.q;
      je["cost"] = wj.cost;
      je["inliers"] = wj.inlier_count;
      edges.push_back(std::move(je));
    }
    jt["edges"] = std::move(edges);
    trees.push_back(std::move(jt));
  }
  j["trees"] = std::move(trees);
  return j;
}

WorldModel world_model_from_json(const json& j) {
  WorldModel wm;
  wm.dt = number_field(j, "dt", "world model");
  wm.frames = static_cast<int>(number_field(j, "frames", "world model"));
  const json& names = field(j, "body_names", "world model");
  if (!names.is_array())
    throw ParseError("world model: \"body_names\" is not an array");
  for (const json& n : names) {
    if (!n.is_string())
      throw ParseError("world model: body name is not a string");
    wm.body_names.push_back(n.get<std::string>());
  }
  const json& trees = field(j, "trees", "world model");
  if (!trees.is_array())
    throw ParseError("world model: \"trees\" is not an array");
  for (const json& jt : trees) {
    KinematicTree tree;
    const std::string where = "tree " + std::to_string(wm.trees.size());
    tree.root = static_cast<int>(number_field(jt, "root", where));
    const json& base = field(jt, "base", where);
    const std::string mode = string_field(base, "mode", where);
    if (mode == "fixed") {
      tree.base = BaseMode::kFixed;
      tree.root_joint = joint_model_from_json(field(base, "joint", where));
      tree.root_q = number_list(field(base, "q", where), where + " base q");
    } else if (mode == "floating") {
      tree.base = BaseMode::kFloating;
      const json& poses = field(base, "poses", where);
      if (!poses.is_array())
        throw ParseError(where + ": base \"poses\" is not an array");
      for (const json& jp : poses)
        tree.root_poses.push_back(pose_from_json(jp, where));
    } else {
      throw ParseError(where + ": unknown base mode \"" + mode + "\"");
    }
    const json& edges = field(jt, "edges", where);
    if (!edges.is_array())
      throw ParseError(where + ": \"edges\" is not an array");
    for (const json& je : edges) {
      WorldJoint wj;
      wj.parent = static_cast<int>(number_field(je, "parent", where));
      wj.child = static_cast<int>(number_field(je, "child", where));
      wj.model = joint_model_from_json(field(je, "joint", where));
      wj.q = number_list(field(je, "q", where), where + " edge q");
      if (je.contains("cost")) wj.cost = je["cost"].get<double>();
      if (je.contains("inliers")) wj.inlier_count = je["inliers"].get<int>();
      tree.joints.push_back(std::move(wj));
    }
    wm.trees.push_back(std::move(tree));
  }
  return wm;
}

json mechanism_to_json(const Mechanism& m) {
  json j;
  j["name"] = m.name;
  j["gravity"] = vec3_to_json(m.gravity);
  json links = json::array();
  for (const Link& l : m.links) {
    json jl;
    jl["name"] = l.name;
    jl["mass"] = l.mass;
    jl["com"] = vec3_to_json(l.com);
    jl["inertia"] = vec3_to_json(l.inertia);
    links.push_back(std::move(jl));
  }
  j["links"] = std::move(links);
  json joints = json::array();
  for (const MechJoint& mj : m.joints) {
    json jj;
    jj["kind"] = joint_kind_name(mj.kind);
    jj["parent"] = mj.parent;
    jj["child"] = mj.child;
    jj["axis"] = vec3_to_json(mj.axis);
    jj["pivot"] = vec3_to_json(mj.pivot);
    jj["ref"] = pose_to_json(mj.ref);
    jj["damping"] = mj.damping;
    jj["actuated"] = mj.actuated;
    joints.push_back(std::move(jj));
  }
  j["joints"] = std::move(joints);
  return j;
}

Mechanism mechanism_from_json(const json& j) {
  Mechanism m;
  m.name = j.contains("name") ? string_field(j, "name", "mechanism") : "";
  if (j.contains("gravity"))
    m.gravity = vec3_from_json(j["gravity"], "mechanism gravity");
  const json& links = field(j, "links", "mechanism");
  if (!links.is_array())
    throw ParseError("mechanism: \"links\" is not an array");
  for (const json& jl : links) {
    Link l;
    const std::string where = "link " + std::to_string(m.links.size());
    l.name = string_field(jl, "name", where);
    l.mass = number_field(jl, "mass", where);
    l.com = vec3_from_json(field(jl, "com", where), where);
    l.inertia = vec3_from_json(field(jl, "inertia", where), where);
    m.links.push_back(std::move(l));
  }
  const json& joints = field(j, "joints", "mechanism");
  if (!joints.is_array())
    throw ParseError("mechanism: \"joints\" is not an array");
  for (const json& jj : joints) {
    MechJoint mj;
    const std::string where = "mechanism joint " + std::to_string(m.joints.size());
    const std::string kind = string_field(jj, "kind", where);
    if (kind == "revolute")
      mj.kind = JointKind::kRevolute;
    else if (kind == "prismatic")
      mj.kind = JointKind::kPrismatic;
    else if (kind == "fixed")
      mj.kind = JointKind::kFixed;
    else if (kind == "floating")
      mj.kind = JointKind::kFloating;
    else
      throw ParseError(where + ": unknown kind \"" + kind + "\"");
    mj.parent = static_cast<int>(number_field(jj, "parent", where));
    mj.child = static_cast<int>(number_field(jj, "child", where));
    if (jj.contains("axis")) mj.axis = vec3_from_json(jj["axis"], where);
    if (jj.contains("pivot")) mj.pivot = vec3_from_json(jj["pivot"], where);
    if (jj.contains("ref")) mj.ref = pose_from_json(jj["ref"], where);
    if (jj.contains("damping")) mj.damping = number_field(jj, "damping", where);
    if (jj.contains("actuated")) {
      if (!jj["actuated"].is_boolean())
        throw ParseError(where + ": \"actuated\" is not a boolean");
      mj.actuated = jj["actuated"].get<bool>();
    }
    m.joints.push_back(std::move(mj));
  }
  m.validate();
  return m;
}

json param_spec_to_json(const ParamSpec& spec) {
  json entries = json::array();
  for (const ParamEntry& e : spec.entries) {
    json je;
    je["path"] = e.path;
    je["lo"] = e.lo;
    je["hi"] = e.hi;
    entries.push_back(std::move(je));
  }
  json j;
  j["entries"] = std::move(entries);
  return j;
}

ParamSpec param_spec_from_json(const json& j) {
  ParamSpec spec;
  const json& entries = field(j, "entries", "param spec");
  if (!entries.is_array())
    throw ParseError("param spec: \"entries\" is not an array");
  for (const json& je : entries) {
    ParamEntry e;
    const std::string where =
        "param entry " + std::to_string(spec.entries.size());
    e.path = string_field(je, "path", where);
    e.lo = number_field(je, "lo", where);
    e.hi = number_field(je, "hi", where);
    if (!(e.hi > e.lo))
      throw ParseError(where + ": bounds must satisfy lo < hi");
    spec.entries.push_back(std::move(e));
  }
  return spec;
}

json ground_truth_to_json(const GroundTruth& gt) {
  json j;
  j["scene"] = gt.scene;
  j["dt"] = gt.dt;
  j["frames"] = gt.frames;
  j["mechanism"] = mechanism_to_json(gt.mech);
  j["params"] = param_spec_to_json(gt.params);
  j["theta"] = gt.theta;
  j["x0"] = json{{"q", gt.x0.q}, {"qd", gt.x0.qd}};
  json controls = json::array();
  for (const std::vector<double>& row : gt.controls) controls.push_back(row);
  j["controls"] = std::move(controls);
  return j;
}

GroundTruth ground_truth_from_json(const json& j) {
  GroundTruth gt;
  gt.scene = string_field(j, "scene", "ground truth");
  gt.dt = number_field(j, "dt", "ground truth");
  gt.frames = static_cast<int>(number_field(j, "frames", "ground truth"));
  gt.mech = mechanism_from_json(field(j, "mechanism", "ground truth"));
  gt.params = param_spec_from_json(field(j, "params", "ground truth"));
  gt.theta = number_list(field(j, "theta", "ground truth"), "ground truth theta");
  const json& x0 = field(j, "x0", "ground truth");
  gt.x0.q = number_list(field(x0, "q", "ground truth x0"), "ground truth x0 q");
  gt.x0.qd =
      number_list(field(x0, "qd", "ground truth x0"), "ground truth x0 qd");
  if (j.contains("controls")) {
    const json& controls = j["controls"];
    if (!controls.is_array())
      throw ParseError("ground truth: \"controls\" is not an array");
    for (const json& row : controls)
      gt.controls.push_back(number_list(row, "ground truth controls"));
  }
  return gt;
}

std::string joints_csv(const WorldModel& wm) {
  // Column per articulated connection, in tree order; rows are frames.
  std::vector<std::string> headers;
  std::vector<const std::vector<double>*> columns;
  const auto name_of = [&](int id) {
    return id >= 0 && id < static_cast<int>(wm.body_names.size())
               ? wm.body_names[id]
               : "body" + std::to_string(id);
  };
  for (const KinematicTree& tree : wm.trees) {
    if (tree.base == BaseMode::kFixed && !tree.root_q.empty()) {
      headers.push_back("world->" + name_of(tree.root));
      columns.push_back(&tree.root_q);
    }
    for (const WorldJoint& wj : tree.joints) {
      headers.push_back(name_of(wj.parent) + "->" + name_of(wj.child));
      columns.push_back(&wj.q);
    }
  }
  std::ostringstream out;
  out << "frame";
  for (const std::string& h : headers) out << "," << h;
  out << "\n";
  out.precision(17);
  for (int t = 0; t < wm.frames; ++t) {
    out << t;
    for (const std::vector<double>* col : columns) {
      out << ",";
      if (t < static_cast<int>(col->size())) out << (*col)[t];
    }
    out << "\n";
  }
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path);
  return buf.str();
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw IoError("write failed for " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    throw IoError("cannot move " + tmp + " into place: " + ec.message());
  }
}

void write_json_atomic(const std::string& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

json load_json(const std::string& path) {
  const std::string text = read_text_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw ParseError("invalid JSON in " + path);
  return j;
}

}  // namespace artik
