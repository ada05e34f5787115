#pragma once

// Articulation discovery over a set of rigid-body trajectories. Every body
// pair is scored by the best single-joint explanation of its relative
// motion; a minimum spanning forest over those costs picks the kinematic
// tree, and a world-attachment pass decides whether each tree is anchored
// (fixed base) or free floating.

#include <optional>
#include <string>
#include <vector>

#include "artik/joint_fit.hpp"
#include "artik/trajectory.hpp"

namespace artik {

struct TopologyConfig {
  RansacConfig ransac;
  // Fit candidate pairs concurrently. Results are identical either way:
  // each pair draws from its own seed stream.
  bool parallel = true;
};

// Pairwise joint-fit costs. Entry (i, j) is the cheapest single-joint model
// of body j's motion in body i's frame, +inf when no candidate reached the
// inlier quota. fits is row-major with only i < j populated; entry (i, i)
// holds the world-attachment fit of body i's absolute trajectory.
struct CostMatrix {
  int n = 0;
  std::vector<double> cost;                        // n*n, row-major
  std::vector<std::optional<JointFitResult>> fit;  // n*n, row-major

  double at(int i, int j) const { return cost[std::size_t(i) * n + j]; }
  const std::optional<JointFitResult>& fit_at(int i, int j) const {
    return fit[std::size_t(i) * n + j];
  }
};

struct TreeEdge {
  int i = 0;  // endpoints as stored in the cost matrix, i < j
  int j = 0;
  double cost = 0.0;
};

// Directed joint in the final model: child's pose in the parent's frame is
// joint_model_pose(model, q[t]). parent == -1 means the world frame.
struct WorldJoint {
  int parent = -1;
  int child = 0;
  JointModel model;
  std::vector<double> q;
  double cost = 0.0;
  int inlier_count = 0;
};

enum class BaseMode { kFixed, kFloating };

// One kinematic tree (connected component of the spanning forest).
struct KinematicTree {
  BaseMode base = BaseMode::kFixed;
  int root = 0;
  // Fixed base: root's pose in the world is joint_model_pose(root_joint,
  // root_q[t]). Floating base: root_poses holds the observed world poses.
  JointModel root_joint;
  std::vector<double> root_q;
  std::vector<Pose> root_poses;
  std::vector<WorldJoint> joints;  // breadth-first from the root
};

struct WorldModel {
  double dt = 0.0;
  int frames = 0;
  std::vector<std::string> body_names;
  std::vector<KinematicTree> trees;
};

CostMatrix build_cost_matrix(const ObservationSet& obs,
                             const TopologyConfig& cfg);

// Deterministic minimum spanning forest (Prim per component). Ties break on
// (cost, i, j) lexicographically; edges with infinite cost are never taken.
std::vector<TreeEdge> minimum_spanning_forest(const CostMatrix& C);

// Full pipeline: cost matrix, spanning forest, world attachment, and
// orientation of every edge away from its root.
WorldModel infer_articulation(const ObservationSet& obs,
                              const TopologyConfig& cfg);

// World pose of every body at one frame, reconstructed from the model.
std::vector<Pose> model_world_poses(const WorldModel& wm, int frame);

// Mean pose residual between the model's reconstruction and the
// observations, over all bodies and frames.
double reconstruction_error(const WorldModel& wm, const ObservationSet& obs,
                            double rotation_weight = 1.0);

// Text rendering of the forest, one line per tree:
//   world -[revolute]-> cart -[revolute]-> pole
std::string tree_summary(const WorldModel& wm);

}  // namespace artik
