#pragma once

// Sampling-based model-predictive control (MPPI) on top of the simulator,
// plus the cart-pole tasks used to judge whether an estimated model is good
// enough to control the true system.

#include <cstdint>
#include <functional>
#include <vector>

#include "artik/dynamics.hpp"
#include "artik/mechanism.hpp"

namespace artik {

// Stage cost over full state and control; summed over the horizon.
using StageCost =
    std::function<double(const std::vector<double>& q,
                         const std::vector<double>& qd,
                         const std::vector<double>& u)>;

struct MppiConfig {
  int samples = 200;
  int horizon = 60;
  double beta = 1.0;        // inverse temperature for the weight softmax
  double sigma_u = 2.0;     // exploration noise per actuated coordinate
  // Symmetric control bound per actuated coordinate; the last entry repeats
  // when the mechanism has more actuated coordinates than entries.
  std::vector<double> u_limit{10.0};
  std::uint64_t seed = 0;
  StepConfig step{0.05, 1, 1e6};
};

class MppiController {
 public:
  MppiController(const Mechanism& plan_model, StageCost cost,
                 const MppiConfig& cfg);

  // Plan from the current state and return the first control of the
  // updated nominal sequence. plan_step indexes the noise stream so a
  // replay of the same episode is bit-identical.
  std::vector<double> plan(const SimState& x, int plan_step);

  const std::vector<std::vector<double>>& nominal() const { return nominal_; }

 private:
  CompiledMechanism cm_;
  StageCost cost_;
  MppiConfig cfg_;
  std::vector<double> u_lo_, u_hi_;  // per actuated coordinate
  std::vector<std::vector<double>> nominal_;  // horizon x n_act
};

// Closed-loop episode: the controller plans on plan_model while the state
// evolves under exec_model (sim-to-sim transfer when they differ).
struct EpisodeResult {
  std::vector<std::vector<double>> q;   // executed states, frames x dof
  std::vector<std::vector<double>> qd;
  std::vector<std::vector<double>> u;   // applied controls
  double mean_reward = 0.0;             // exp(-stage cost), averaged
  bool diverged = false;
};

EpisodeResult run_episode(const Mechanism& plan_model,
                          const Mechanism& exec_model, const SimState& x0,
                          int steps, const StageCost& cost,
                          const MppiConfig& cfg);

// Cart-pole task definitions. Coordinate 0 is the cart along x, coordinate
// 1 the pole angle with 0 hanging down and pi upright.
StageCost cartpole_swingup_cost();
StageCost cartpole_balance_cost();

// Swing-up success: the pole is within 0.2 rad of upright for the last 50
// of 200 steps. Balance success: starting 20 degrees from upright with the
// cart moving, the pole never falls past horizontal over the episode.
bool swingup_success(const EpisodeResult& ep);
bool balance_success(const EpisodeResult& ep);

}  // namespace artik
