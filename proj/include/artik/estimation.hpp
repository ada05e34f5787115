#pragma once

// Inertial parameter estimation by shooting: candidate parameters are
// scored by simulating the mechanism over short windows and comparing the
// predicted link poses against the observed trajectory. Optimizers work in
// normalized coordinates (each parameter mapped to [0, 1] by its box), with
// the window start states estimated alongside when learn_x0 is set.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "artik/dynamics.hpp"
#include "artik/mechanism.hpp"

namespace artik {

struct ShootingConfig {
  int window_length = 10;          // frames per window, last may be shorter
  double continuity_weight = 100.0;
  double sigma_obs = 0.01;         // observation std in the residual metric
  double rotation_weight = 1.0;
  bool learn_x0 = true;            // append window starts to the unknowns
  StepConfig step;                 // step.dt is overridden by the data rate
};

// The estimation problem: mechanism skeleton (geometry fixed), tunable
// parameters, the observed trajectory, and the controls applied while
// recording. Unknown vector layout: params.size() normalized parameters in
// [0, 1], then (when learn_x0) each window's start state [q; qd].
class ShootingProblem {
 public:
  ShootingProblem(Mechanism skeleton, ParamSpec params, ObservationSet obs,
                  std::vector<std::vector<double>> controls,
                  ShootingConfig cfg);

  int n_params() const { return params_.size(); }
  int n_windows() const { return n_windows_; }
  int dim() const;

  // Box midpoints for the parameters, observation-projected states for the
  // window starts.
  std::vector<double> initial_point() const;
  // Same, but parameters drawn uniformly in [0, 1] from the given seed.
  std::vector<double> sampled_point(std::uint64_t seed) const;
  // Window start states recovered from the observations alone.
  const std::vector<SimState>& observed_window_starts() const {
    return obs_starts_;
  }

  // Sum of squared pose residuals over frames and bodies scaled by
  // 1/(2 sigma_obs^2), plus the weighted squared continuity defects between
  // adjacent windows. Divergent rollouts score +inf; parameters outside
  // [0, 1] throw LimitViolation.
  double loss(const std::vector<double>& x) const;
  // Central differences with per-coordinate step h*max(|x_i|, 1), one-sided
  // at the box walls. Exploits window separability but returns exactly the
  // same vector as gradient_fd_full. Throws NonFiniteLoss when a probe is
  // non-finite.
  std::vector<double> gradient_fd(const std::vector<double>& x,
                                  double h = 1e-5) const;
  std::vector<double> gradient_fd_full(const std::vector<double>& x,
                                       double h = 1e-5) const;

  std::vector<double> physical_params(const std::vector<double>& x) const;
  Mechanism mechanism_for(const std::vector<double>& x) const;
  const ParamSpec& params() const { return params_; }
  const ShootingConfig& config() const { return cfg_; }
  const Mechanism& skeleton() const { return skeleton_; }
  const std::vector<std::vector<double>>& controls() const {
    return controls_;
  }

 private:
  Mechanism skeleton_;
  ParamSpec params_;
  ObservationSet obs_;
  std::vector<std::vector<double>> controls_;
  ShootingConfig cfg_;
  int n_windows_ = 0;
  int dof_ = 0;
  std::vector<int> window_start_;
  std::vector<int> actuated_coords_;
  std::vector<SimState> obs_starts_;
  std::vector<std::vector<Quat>> obs_rot_;  // [body][frame]
  std::vector<std::vector<Vec3>> obs_pos_;

  // Loss decomposes into per-window terms; term w depends only on the
  // parameters and window w's start (plus start w+1 for the continuity
  // defect). Summation order is fixed so the structured and naive gradients
  // agree bitwise.
  double term(const CompiledMechanism& cm, const std::vector<double>& x,
              int w) const;
  SimState window_start_state(const std::vector<double>& x, int w) const;
};

struct AdamConfig {
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int steps = 2000;
  double fd_step = 1e-5;
};

struct OptimizeResult {
  std::vector<double> x;        // best-ever iterate
  double loss = 0.0;
  std::vector<double> history;  // loss after each step
};

using LossFn = std::function<double(const std::vector<double>&)>;
using GradFn = std::function<std::vector<double>(const std::vector<double>&)>;

// Central differences of an arbitrary loss, step h*max(|x_i|, 1) per
// coordinate. The first n_box coordinates live in [0, 1]; probes that
// would cross a wall fall back to one-sided differences. Throws
// NonFiniteLoss when a probe is non-finite.
std::vector<double> gradient_fd(const LossFn& loss,
                                const std::vector<double>& x, double h = 1e-5,
                                int n_box = 0);

// Projected Adam descent: each step applies the Adam update then clamps the
// first n_box coordinates to [0, 1] (the rest are unconstrained).
OptimizeResult adam_minimize(const LossFn& loss, const GradFn& grad,
                             std::vector<double> x0, int n_box,
                             const AdamConfig& cfg);

struct SvgdConfig {
  AdamConfig adam;
  int particles = 16;
  std::uint64_t seed = 0;
};

struct SvgdResult {
  std::vector<std::vector<double>> particles;
  std::vector<double> losses;  // final loss per particle
  int best = 0;                // lowest loss
};

// Stein variational gradient descent toward exp(-loss), RBF kernel with the
// median-pairwise-squared-distance / log(n+1) bandwidth. Each particle
// moves by the shared Adam rule applied to the negative Stein direction
// followed by the box projection, so one particle reproduces adam_minimize
// exactly. Exact duplicate particles are split by a deterministic epsilon
// before each step; the kernel repulsion is zero at zero distance and could
// never separate them otherwise.
SvgdResult svgd_minimize(const LossFn& loss, const GradFn& grad,
                         std::vector<std::vector<double>> init, int n_box,
                         const SvgdConfig& cfg);

enum class FitMethod { kAdam, kSvgd };

struct EstimateResult {
  std::vector<double> theta;    // physical parameters, best particle
  std::vector<double> x;        // full unknown vector of the best particle
  double loss = 0.0;
  std::optional<double> nmae;   // when ground truth is supplied
  std::vector<double> history;  // Adam only
  std::vector<std::vector<double>> particle_thetas;  // SVGD only
};

// Run one estimation: Adam starts from a seeded uniform draw over the
// parameter box, SVGD from `particles` such draws; window starts always
// initialize from the observations.
EstimateResult estimate(const ShootingProblem& problem, FitMethod method,
                        const AdamConfig& adam, int particles,
                        std::uint64_t seed,
                        const std::optional<std::vector<double>>& truth);

// Mean absolute parameter error, each coordinate scaled by its box width.
double normalized_mae(const std::vector<double>& estimate,
                      const std::vector<double>& truth,
                      const ParamSpec& spec);

}  // namespace artik
