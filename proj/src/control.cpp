#include "artik/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "artik/errors.hpp"
#include "artik/parallel.hpp"
#include "artik/pose.hpp"
#include "artik/rng.hpp"

namespace artik {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool state_ok(const SimState& s, double limit) {
  for (double v : s.q)
    if (!std::isfinite(v) || std::abs(v) > limit) return false;
  for (double v : s.qd)
    if (!std::isfinite(v) || std::abs(v) > limit) return false;
  return true;
}

}  // namespace

MppiController::MppiController(const Mechanism& plan_model, StageCost cost,
                               const MppiConfig& cfg)
    : cm_(plan_model), cost_(std::move(cost)), cfg_(cfg) {
  if (cfg_.samples < 1 || cfg_.horizon < 1)
    throw ConfigError("mppi needs at least one sample and one horizon step");
  if (cfg_.u_limit.empty())
    throw ConfigError("mppi control limit list is empty");
  const int n_act = static_cast<int>(cm_.actuated_coords().size());
  if (n_act == 0) throw ConfigError("plan model has no actuated coordinate");
  u_lo_.resize(n_act);
  u_hi_.resize(n_act);
  for (int a = 0; a < n_act; ++a) {
    const std::size_t idx =
        std::min<std::size_t>(a, cfg_.u_limit.size() - 1);
    const double lim = std::abs(cfg_.u_limit[idx]);
    u_lo_[a] = -lim;
    u_hi_[a] = lim;
  }
  nominal_.assign(cfg_.horizon, std::vector<double>(n_act, 0.0));
}

std::vector<double> MppiController::plan(const SimState& x, int plan_step) {
  const int K = cfg_.samples;
  const int H = cfg_.horizon;
  const int n_act = static_cast<int>(u_lo_.size());

  std::vector<std::vector<std::vector<double>>> eps(K);
  std::vector<double> score(K, kInf);

  parallel_for(K, [&](int k) {
    Rng rng(derive_seed(cfg_.seed, std::uint64_t(plan_step),
                        std::uint64_t(k)));
    auto& e = eps[k];
    e.assign(H, std::vector<double>(n_act));
    std::vector<std::vector<double>> u(H, std::vector<double>(n_act));
    for (int t = 0; t < H; ++t)
      for (int a = 0; a < n_act; ++a) {
        e[t][a] = cfg_.sigma_u * rng.gaussian();
        u[t][a] = std::clamp(nominal_[t][a] + e[t][a], u_lo_[a], u_hi_[a]);
      }
    const Rollout roll = rollout(cm_, x, H + 1, cfg_.step, u);
    double s = 0.0;
    const int good = roll.diverged ? roll.diverged_at : H + 1;
    if (good <= H) {
      score[k] = kInf;
      return;
    }
    for (int t = 0; t < H; ++t) s += cost_(roll.q[t], roll.qd[t], u[t]);
    score[k] = std::isfinite(s) ? s : kInf;
  });

  const double s_min = *std::min_element(score.begin(), score.end());
  if (!std::isfinite(s_min))
    throw AllRolloutsDiverged("every sampled control sequence diverged at plan step " +
                              std::to_string(plan_step));

  std::vector<double> w(K);
  double z = 0.0;
  for (int k = 0; k < K; ++k) {
    w[k] = std::exp(-(score[k] - s_min) / cfg_.beta);
    z += w[k];
  }
  for (int k = 0; k < K; ++k) w[k] /= z;

  for (int t = 0; t < H; ++t)
    for (int a = 0; a < n_act; ++a) {
      double du = 0.0;
      for (int k = 0; k < K; ++k) du += w[k] * eps[k][t][a];
      nominal_[t][a] = std::clamp(nominal_[t][a] + du, u_lo_[a], u_hi_[a]);
    }

  const std::vector<double> u0 = nominal_.front();
  for (int t = 0; t + 1 < H; ++t) nominal_[t] = nominal_[t + 1];
  return u0;
}

EpisodeResult run_episode(const Mechanism& plan_model,
                          const Mechanism& exec_model, const SimState& x0,
                          int steps, const StageCost& cost,
                          const MppiConfig& cfg) {
  MppiController ctrl(plan_model, cost, cfg);
  const CompiledMechanism exec(exec_model);
  const std::vector<int>& act = exec.actuated_coords();

  EpisodeResult ep;
  ep.q.reserve(steps + 1);
  ep.qd.reserve(steps + 1);
  ep.u.reserve(steps);

  SimState x = x0;
  ep.q.push_back(x.q);
  ep.qd.push_back(x.qd);
  double reward = 0.0;
  int executed = 0;
  std::vector<double> tau(exec.dof(), 0.0);
  for (int t = 0; t < steps; ++t) {
    const std::vector<double> u = ctrl.plan(x, t);
    reward += std::exp(-cost(x.q, x.qd, u));
    ++executed;
    ep.u.push_back(u);
    std::fill(tau.begin(), tau.end(), 0.0);
    for (std::size_t a = 0; a < u.size() && a < act.size(); ++a)
      tau[act[a]] = u[a];
    step(exec, &x, tau, cfg.step);
    if (!state_ok(x, cfg.step.divergence_limit)) {
      ep.diverged = true;
      break;
    }
    ep.q.push_back(x.q);
    ep.qd.push_back(x.qd);
  }
  ep.mean_reward = executed > 0 ? reward / executed : 0.0;
  return ep;
}

StageCost cartpole_swingup_cost() {
  return [](const std::vector<double>& q, const std::vector<double>& qd,
            const std::vector<double>& u) {
    (void)u;
    const double up = 1.0 + std::cos(q[1]);
    double qd2 = 0.0;
    for (double v : qd) qd2 += v * v;
    return 8.0 * up * up + 0.1 * q[0] * q[0] + 0.01 * qd2;
  };
}

StageCost cartpole_balance_cost() {
  return [](const std::vector<double>& q, const std::vector<double>& qd,
            const std::vector<double>& u) {
    (void)u;
    const double up = 1.0 + std::cos(q[1]);
    double qd2 = 0.0;
    for (double v : qd) qd2 += v * v;
    return 50.0 * up * up + 1.0 * q[0] * q[0] + 0.1 * qd2;
  };
}

bool swingup_success(const EpisodeResult& ep) {
  if (ep.diverged) return false;
  const int n = static_cast<int>(ep.q.size());
  if (n < 50) return false;
  for (int t = n - 50; t < n; ++t) {
    if (ep.q[t].size() < 2) return false;
    if (std::abs(wrap_angle(ep.q[t][1] - M_PI)) >= 0.2) return false;
  }
  return true;
}

bool balance_success(const EpisodeResult& ep) {
  if (ep.diverged) return false;
  for (const std::vector<double>& q : ep.q) {
    if (q.size() < 2) return false;
    if (std::abs(wrap_angle(q[1] - M_PI)) >= M_PI / 2.0) return false;
  }
  return true;
}

}  // namespace artik
