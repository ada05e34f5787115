#pragma once

// Forward dynamics and simulation for Mechanism trees: articulated-body
// algorithm, semi-implicit Euler stepping, trajectory rollout, and
// synthetic observation generation. A mechanism is compiled once into a
// flat quaternion-based form so the per-step cost stays trig-free except
// for one sin/cos per revolute or floating-rotation coordinate.

#include <cstdint>
#include <optional>
#include <vector>

#include "artik/mechanism.hpp"
#include "artik/trajectory.hpp"

namespace artik {

namespace detail {

// Unit quaternion + translation; composition avoids the axis-angle trig
// round-trip that dominates pose math on hot paths.
struct QPose {
  Quat q{1, 0, 0, 0};
  Vec3 p{0, 0, 0};
};

inline QPose qcompose(const QPose& a, const QPose& b) {
  return {a.q * b.q, a.p + a.q * b.p};
}

struct CompiledJoint {
  JointKind kind;
  int parent;        // node index, -1 for world
  int coord;         // first generalized coordinate
  Vec3 axis;         // revolute/prismatic, in the parent frame
  Vec3 pivot;
  QPose ref;
  double damping;
  bool actuated;
  // Precomputed constants of the joint manifold: rotation of ref and the
  // axis/pivot pulled into the child frame where the motion subspace lives.
  Quat ref_rot;
  Vec3 axis_child;   // R_ref^T axis
  Vec3 pivot_child;  // R_ref^T (pivot - ref.p), revolute only
};

struct CompiledBody {
  double mass;
  Vec3 com;
  Mat3 inertia_com;  // about the com, link axes
};

}  // namespace detail

struct StepConfig;

// Flattened mechanism ready for simulation. Floating joints expand into six
// single-DoF nodes (three prismatic, three revolute, x/y/z order); fixed
// joints keep their node but contribute no coordinate.
class CompiledMechanism {
 public:
  explicit CompiledMechanism(const Mechanism& m);

  int dof() const { return dof_; }
  int n_links() const { return static_cast<int>(link_of_node_.size()); }

  // Coordinate indices driven by actuated joints, in joint order. Control
  // rows shorter than dof() map onto these.
  const std::vector<int>& actuated_coords() const { return actuated_coords_; }

  // World pose of every link for generalized coordinates q.
  void link_poses(const std::vector<double>& q, std::vector<Pose>* out) const;

  // Same in the internal quaternion form, for residual loops that compare
  // against precomputed observation quaternions. out must hold n_links()
  // entries indexed by link.
  void link_qposes(const double* q, detail::QPose* out) const;

  // Forward dynamics: generalized accelerations for the given state and
  // applied generalized forces (tau may be empty for unforced).
  void forward_dynamics(const std::vector<double>& q,
                        const std::vector<double>& qd,
                        const std::vector<double>& tau,
                        std::vector<double>* qdd) const;

  // Total mechanical energy (kinetic + gravitational potential).
  double energy(const std::vector<double>& q,
                const std::vector<double>& qd) const;

  const Mechanism& source() const { return source_; }

  // Nodes after expansion; every simulation routine is const and allocation
  // free past construction, so one instance serves many threads.
  static constexpr int kMaxNodes = 16;

 private:
  Mechanism source_;
  int dof_ = 0;
  std::vector<detail::CompiledJoint> nodes_;  // topological order
  std::vector<detail::CompiledBody> bodies_;  // per node (zero for virtual)
  std::vector<int> link_of_node_;             // source link index, -1 virtual
  std::vector<int> actuated_coords_;

  void node_poses(const double* q, detail::QPose* out) const;
  friend void step(const CompiledMechanism&, SimState*,
                   const std::vector<double>&, const StepConfig&);
};

struct StepConfig {
  double dt = 0.01;
  int substeps = 1;
  // State magnitudes past this are treated as divergence by rollout().
  double divergence_limit = 1e6;
};

// One semi-implicit Euler step (velocity first, then position), split into
// `substeps` equal substeps. Throws SingularInertia when the articulated
// inertia collapses.
void step(const CompiledMechanism& cm, SimState* state,
          const std::vector<double>& tau, const StepConfig& cfg);

struct Rollout {
  std::vector<std::vector<double>> q;   // frames x dof, q[0] is the start
  std::vector<std::vector<double>> qd;
  bool diverged = false;
  int diverged_at = -1;  // first non-finite or out-of-range frame
};

// Simulate `frames` states including the initial one (frames - 1 steps).
// controls[k], when present, is the generalized force during step k; rows
// shorter than the full dof apply to the actuated coordinates in order.
// Divergence is flagged, not thrown, so callers can treat it as a bad
// parameter draw rather than an error.
Rollout rollout(const CompiledMechanism& cm, const SimState& x0, int frames,
                const StepConfig& cfg,
                const std::vector<std::vector<double>>& controls = {});

struct ObservationNoise {
  double sigma_p = 0.0;  // translation, per axis
  double sigma_r = 0.0;  // rotation, axis-angle per axis
  std::uint64_t seed = 0;
};

// Roll the mechanism and record the world pose trajectory of every link,
// optionally perturbed by Gaussian pose noise. Noise streams are seeded per
// body and axis, so the sample at (body, frame) is stable under reordering.
ObservationSet generate_observations(const Mechanism& m, const SimState& x0,
                                     int frames, double dt,
                                     const std::vector<std::vector<double>>& controls,
                                     const ObservationNoise& noise);

// The joint-model manifold a mechanism joint moves on (throws ConfigError
// for floating joints, which carry six coordinates, not one).
JointModel joint_model_of(const MechJoint& j);

// Chart for the floating joint: translation xyz then intrinsic xyz
// rotation. The inverse picks the pitch in [-pi/2, pi/2] and falls back to
// a zero-roll solution at the chart singularity.
Pose pose_from_floating_coords(const double* q);
void floating_coords_from_pose(const Pose& t, double* q);

// Generalized states recovered from observed poses alone: per frame, each
// joint coordinate comes from projecting the observed relative pose onto
// the joint manifold (revolute series unwrapped for continuity), and
// velocities from central differences (one-sided at the ends).
std::vector<SimState> states_from_observations(const Mechanism& m,
                                               const ObservationSet& obs);

}  // namespace artik
