#pragma once

// JSON and CSV serialization for every artifact the pipeline reads or
// writes: observation trajectories, world models, mechanisms, and the
// ground-truth sidecar emitted next to generated data. All writers go
// through an atomic temp-file + rename so interrupted runs never leave a
// truncated file behind.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "artik/estimation.hpp"
#include "artik/mechanism.hpp"
#include "artik/topology.hpp"
#include "artik/trajectory.hpp"

namespace artik {

using json = nlohmann::json;

// Trajectory files: {"dt", "seed", "scene", "bodies":[{"id","name","poses":
// [[rx,ry,rz,px,py,pz],...]}]}. Angles in radians, meters for translation.
json observations_to_json(const ObservationSet& obs);
ObservationSet observations_from_json(const json& j);

json joint_model_to_json(const JointModel& m);
JointModel joint_model_from_json(const json& j);

json world_model_to_json(const WorldModel& wm);
WorldModel world_model_from_json(const json& j);

json mechanism_to_json(const Mechanism& m);
Mechanism mechanism_from_json(const json& j);

json param_spec_to_json(const ParamSpec& spec);
ParamSpec param_spec_from_json(const json& j);

// Everything needed to score an estimate against the generator: the true
// mechanism, the tunable-parameter boxes and true values, the initial
// state, and the control sequence applied while recording.
struct GroundTruth {
  std::string scene;
  double dt = 0.01;
  int frames = 0;
  Mechanism mech;
  ParamSpec params;
  std::vector<double> theta;
  SimState x0;
  std::vector<std::vector<double>> controls;
};

json ground_truth_to_json(const GroundTruth& gt);
GroundTruth ground_truth_from_json(const json& j);

// Per-joint q time series, one column per joint, header row names each
// column world->child/parent->child.
std::string joints_csv(const WorldModel& wm);

std::string read_text_file(const std::string& path);  // throws IoError
void write_text_atomic(const std::string& path, const std::string& content);
void write_json_atomic(const std::string& path, const json& j);
json load_json(const std::string& path);  // IoError / ParseError

}  // namespace artik
