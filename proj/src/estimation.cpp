#include "artik/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <limits>

#include "artik/errors.hpp"
#include "artik/parallel.hpp"
#include "artik/rng.hpp"

namespace artik {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Left fold in index order; every loss evaluation sums the per-window term
// array exactly this way, so the structured gradient can rebuild identical
// totals after swapping individual entries.
double sum_terms(const std::vector<double>& terms) {
  double s = 0.0;
  for (double t : terms) s += t;
  return s;
}

bool state_ok(const SimState& s, double limit) {
  for (double v : s.q)
    if (!std::isfinite(v) || std::abs(v) > limit) return false;
  for (double v : s.qd)
    if (!std::isfinite(v) || std::abs(v) > limit) return false;
  return true;
}

}  // namespace

ShootingProblem::ShootingProblem(Mechanism skeleton, ParamSpec params,
                                 ObservationSet obs,
                                 std::vector<std::vector<double>> controls,
                                 ShootingConfig cfg)
    : skeleton_(std::move(skeleton)),
      params_(std::move(params)),
      obs_(std::move(obs)),
      controls_(std::move(controls)),
      cfg_(cfg) {
  validate(obs_);
  if (cfg_.window_length < 2)
    throw ConfigError("shooting window_length must be >= 2");
  if (!(cfg_.continuity_weight > 0.0) || !(cfg_.sigma_obs > 0.0))
    throw ConfigError("shooting weights must be positive");
  if (obs_.n_bodies() != static_cast<int>(skeleton_.links.size()))
    throw DimensionMismatch("observation bodies do not match skeleton links");
  cfg_.step.dt = obs_.dt;
  dof_ = skeleton_.dof();

  const int T = obs_.frames();
  for (int s = 0; s + 1 < T; s += cfg_.window_length) window_start_.push_back(s);
  n_windows_ = static_cast<int>(window_start_.size());

  const std::vector<int> off = skeleton_.coord_offsets();
  for (std::size_t ji = 0; ji < skeleton_.joints.size(); ++ji) {
    const MechJoint& mj = skeleton_.joints[ji];
    if (!mj.actuated || mj.kind == JointKind::kFixed) continue;
    const int width = mj.kind == JointKind::kFloating ? 6 : 1;
    for (int a = 0; a < width; ++a) actuated_coords_.push_back(off[ji] + a);
  }

  const std::vector<SimState> states = states_from_observations(skeleton_, obs_);
  obs_starts_.reserve(n_windows_);
  for (int s : window_start_) obs_starts_.push_back(states[s]);

  const int n_bodies = obs_.n_bodies();
  obs_rot_.resize(n_bodies);
  obs_pos_.resize(n_bodies);
  for (int b = 0; b < n_bodies; ++b) {
    obs_rot_[b].reserve(T);
    obs_pos_[b].reserve(T);
    for (const Pose& t : obs_.bodies[b].poses) {
      obs_rot_[b].push_back(to_quat(t.r));
      obs_pos_[b].push_back(t.p);
    }
  }
}

int ShootingProblem::dim() const {
  return params_.size() + (cfg_.learn_x0 ? n_windows_ * 2 * dof_ : 0);
}

std::vector<double> ShootingProblem::initial_point() const {
  std::vector<double> x(dim(), 0.5);
  if (cfg_.learn_x0) {
    for (int w = 0; w < n_windows_; ++w) {
      const int base = params_.size() + w * 2 * dof_;
      for (int i = 0; i < dof_; ++i) {
        x[base + i] = obs_starts_[w].q[i];
        x[base + dof_ + i] = obs_starts_[w].qd[i];
      }
    }
  }
  return x;
}

std::vector<double> ShootingProblem::sampled_point(std::uint64_t seed) const {
  std::vector<double> x = initial_point();
  Rng rng(seed);
  for (int i = 0; i < params_.size(); ++i) x[i] = rng.uniform();
  return x;
}

SimState ShootingProblem::window_start_state(const std::vector<double>& x,
                                             int w) const {
  if (!cfg_.learn_x0) return obs_starts_[w];
  SimState s;
  s.q.resize(dof_);
  s.qd.resize(dof_);
  const int base = params_.size() + w * 2 * dof_;
  for (int i = 0; i < dof_; ++i) {
    s.q[i] = x[base + i];
    s.qd[i] = x[base + dof_ + i];
  }
  return s;
}

double ShootingProblem::term(const CompiledMechanism& cm,
                             const std::vector<double>& x, int w) const {
  const int s_w = window_start_[w];
  const int e_w = w + 1 < n_windows_ ? window_start_[w + 1] : obs_.frames() - 1;
  const int n_bodies = obs_.n_bodies();
  const double inv_two_sigma2 = 1.0 / (2.0 * cfg_.sigma_obs * cfg_.sigma_obs);
  const double lam = cfg_.rotation_weight;
  const double limit = cfg_.step.divergence_limit;

  std::array<detail::QPose, CompiledMechanism::kMaxNodes> links;
  SimState s = window_start_state(x, w);
  std::vector<double> tau(dof_, 0.0);
  double acc = 0.0;

  const auto frame_residual = [&](int t) {
    cm.link_qposes(s.q.data(), links.data());
    double r = 0.0;
    for (int b = 0; b < n_bodies; ++b) {
      const Quat d = links[b].q.conjugate() * obs_rot_[b][t];
      const double ang = 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
      const double res = lam * ang + (links[b].p - obs_pos_[b][t]).norm();
      r += res * res;
    }
    return r * inv_two_sigma2;
  };

  if (!state_ok(s, limit)) return kInf;
  // Frames partition across windows: each window scores the frames its
  // rollout produces; only the first also scores its start frame.
  if (w == 0) acc += frame_residual(0);
  for (int t = s_w; t < e_w; ++t) {
    std::fill(tau.begin(), tau.end(), 0.0);
    if (std::size_t(t) < controls_.size()) {
      const std::vector<double>& row = controls_[t];
      if (static_cast<int>(row.size()) == dof_) {
        std::copy(row.begin(), row.end(), tau.begin());
      } else {
        for (std::size_t k = 0;
             k < row.size() && k < actuated_coords_.size(); ++k)
          tau[actuated_coords_[k]] = row[k];
      }
    }
    step(cm, &s, tau, cfg_.step);
    if (!state_ok(s, limit)) return kInf;
    acc += frame_residual(t + 1);
  }
  if (w + 1 < n_windows_) {
    const SimState next = window_start_state(x, w + 1);
    double defect = 0.0;
    for (int i = 0; i < dof_; ++i) {
      const double dq = s.q[i] - next.q[i];
      const double dqd = s.qd[i] - next.qd[i];
      defect += dq * dq + dqd * dqd;
    }
    acc += cfg_.continuity_weight * defect;
  }
  return acc;
}

std::vector<double> ShootingProblem::physical_params(
    const std::vector<double>& x) const {
  std::vector<double> z(x.begin(), x.begin() + params_.size());
  return params_.to_physical(z);
}

Mechanism ShootingProblem::mechanism_for(const std::vector<double>& x) const {
  for (int i = 0; i < params_.size(); ++i) {
    if (!std::isfinite(x[i]) || x[i] < 0.0 || x[i] > 1.0)
      throw LimitViolation("normalized parameter " + std::to_string(i) +
                           " = " + std::to_string(x[i]) + " outside [0, 1]");
  }
  Mechanism mech = skeleton_;
  params_.apply(&mech, physical_params(x));
  return mech;
}

double ShootingProblem::loss(const std::vector<double>& x) const {
  if (static_cast<int>(x.size()) != dim())
    throw DimensionMismatch("unknown vector size mismatch");
  const CompiledMechanism cm(mechanism_for(x));
  std::vector<double> terms(n_windows_);
  for (int w = 0; w < n_windows_; ++w) terms[w] = term(cm, x, w);
  return sum_terms(terms);
}

std::vector<double> ShootingProblem::gradient_fd(const std::vector<double>& x,
                                                 double h) const {
  const int d = dim();
  if (static_cast<int>(x.size()) != d)
    throw DimensionMismatch("unknown vector size mismatch");
  const int np = params_.size();
  std::vector<double> g(d, 0.0);

  // Base terms under the unperturbed parameters; window-coordinate probes
  // reuse the untouched entries and the same compiled mechanism.
  const CompiledMechanism base_cm(mechanism_for(x));
  std::vector<double> base_terms(n_windows_);
  for (int w = 0; w < n_windows_; ++w) base_terms[w] = term(base_cm, x, w);

  const auto check = [&](double v, int i) {
    if (!std::isfinite(v))
      throw NonFiniteLoss("loss probe at coordinate " + std::to_string(i) +
                          " is non-finite");
    return v;
  };

  std::vector<double> probe = x;
  for (int i = 0; i < d; ++i) {
    const double hi = h * std::max(std::abs(x[i]), 1.0);
    const bool is_param = i < np;
    const bool hi_ok = !is_param || x[i] + hi <= 1.0;
    const bool lo_ok = !is_param || x[i] - hi >= 0.0;

    const auto eval_at = [&](double value) {
      probe[i] = value;
      double total;
      if (is_param) {
        total = loss(probe);
      } else {
        // Only the owning window's term and its predecessor's defect depend
        // on a window-start coordinate; recompute those, keep the rest.
        const int w = (i - np) / (2 * dof_);
        std::vector<double> terms = base_terms;
        if (w > 0) terms[w - 1] = term(base_cm, probe, w - 1);
        terms[w] = term(base_cm, probe, w);
        total = sum_terms(terms);
      }
      probe[i] = x[i];
      return total;
    };

    if (hi_ok && lo_ok)
      g[i] = (check(eval_at(x[i] + hi), i) - check(eval_at(x[i] - hi), i)) /
             (2.0 * hi);
    else if (hi_ok)
      g[i] = (check(eval_at(x[i] + hi), i) - check(sum_terms(base_terms), i)) /
             hi;
    else
      g[i] = (check(sum_terms(base_terms), i) - check(eval_at(x[i] - hi), i)) /
             hi;
  }
  return g;
}

std::vector<double> ShootingProblem::gradient_fd_full(
    const std::vector<double>& x, double h) const {
  return artik::gradient_fd([this](const std::vector<double>& p) {
    return loss(p);
  }, x, h, params_.size());
}

std::vector<double> gradient_fd(const LossFn& loss,
                                const std::vector<double>& x, double h,
                                int n_box) {
  const int d = static_cast<int>(x.size());
  std::vector<double> g(d, 0.0);
  std::vector<double> probe = x;
  const double base = loss(x);
  const auto check = [&](double v, int i) {
    if (!std::isfinite(v))
      throw NonFiniteLoss("loss probe at coordinate " + std::to_string(i) +
                          " is non-finite");
    return v;
  };
  for (int i = 0; i < d; ++i) {
    const double hi = h * std::max(std::abs(x[i]), 1.0);
    const bool boxed = i < n_box;
    const bool hi_ok = !boxed || x[i] + hi <= 1.0;
    const bool lo_ok = !boxed || x[i] - hi >= 0.0;
    const auto eval_at = [&](double value) {
      probe[i] = value;
      const double v = loss(probe);
      probe[i] = x[i];
      return v;
    };
    if (hi_ok && lo_ok)
      g[i] = (check(eval_at(x[i] + hi), i) - check(eval_at(x[i] - hi), i)) /
             (2.0 * hi);
    else if (hi_ok)
      g[i] = (check(eval_at(x[i] + hi), i) - check(base, i)) / hi;
    else
      g[i] = (check(base, i) - check(eval_at(x[i] - hi), i)) / hi;
  }
  return g;
}

// ---- optimizers ----

namespace {

struct AdamState {
  std::vector<double> m, v;
  int t = 0;

  explicit AdamState(int d) : m(d, 0.0), v(d, 0.0) {}

  void update(const AdamConfig& cfg, const std::vector<double>& g,
              std::vector<double>* x, int n_box) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < x->size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      (*x)[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
    }
    for (int i = 0; i < n_box && i < static_cast<int>(x->size()); ++i)
      (*x)[i] = std::clamp((*x)[i], 0.0, 1.0);
  }
};

}  // namespace

OptimizeResult adam_minimize(const LossFn& loss, const GradFn& grad,
                             std::vector<double> x0, int n_box,
                             const AdamConfig& cfg) {
  OptimizeResult out;
  out.x = x0;
  out.loss = loss(x0);
  out.history.reserve(cfg.steps);
  AdamState adam(static_cast<int>(x0.size()));
  std::vector<double> x = std::move(x0);
  for (int s = 0; s < cfg.steps; ++s) {
    const std::vector<double> g = grad(x);
    adam.update(cfg, g, &x, n_box);
    const double l = loss(x);
    out.history.push_back(l);
    if (l < out.loss) {
      out.loss = l;
      out.x = x;
    }
  }
  return out;
}

SvgdResult svgd_minimize(const LossFn& loss, const GradFn& grad,
                         std::vector<std::vector<double>> init, int n_box,
                         const SvgdConfig& cfg) {
  const int n = static_cast<int>(init.size());
  if (n < 1) throw ConfigError("svgd needs at least one particle");
  const int d = static_cast<int>(init.front().size());
  std::vector<std::vector<double>> x = std::move(init);
  std::vector<AdamState> adam(n, AdamState(d));
  std::vector<std::vector<double>> grads(n);

  for (int step_i = 0; step_i < cfg.adam.steps; ++step_i) {
    // Exact duplicates get a deterministic hair's-width split: the kernel
    // repulsion vanishes at zero distance and could never separate them.
    for (int i = 1; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        if (std::memcmp(x[i].data(), x[j].data(), sizeof(double) * d) != 0)
          continue;
        Rng jig(derive_seed(cfg.seed, 0x5eed, std::uint64_t(step_i),
                            std::uint64_t(i)));
        for (int k = 0; k < d; ++k) x[i][k] += 1e-9 * jig.gaussian();
        break;
      }
    }

    parallel_for(n, [&](int i) { grads[i] = grad(x[i]); });

    // RBF kernel, bandwidth from the median pairwise squared distance.
    double band = 1.0;
    if (n > 1) {
      std::vector<double> d2;
      d2.reserve(std::size_t(n) * (n - 1) / 2);
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          double s = 0.0;
          for (int k = 0; k < d; ++k) {
            const double diff = x[i][k] - x[j][k];
            s += diff * diff;
          }
          d2.push_back(s);
        }
      std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
      const double med = d2[d2.size() / 2];
      band = med / std::log(double(n) + 1.0);
      if (!(band > 1e-12) || !std::isfinite(band)) band = 1.0;
    }

    std::vector<std::vector<double>> phi(n, std::vector<double>(d, 0.0));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = x[i][k] - x[j][k];
          s += diff * diff;
        }
        const double kij = std::exp(-s / band);
        for (int k = 0; k < d; ++k)
          phi[i][k] +=
              kij * (-grads[j][k]) + kij * 2.0 * (x[i][k] - x[j][k]) / band;
      }
      for (int k = 0; k < d; ++k) phi[i][k] /= double(n);
    }

    std::vector<double> g(d);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) g[k] = -phi[i][k];
      adam[i].update(cfg.adam, g, &x[i], n_box);
    }
  }

  SvgdResult out;
  out.losses.resize(n);
  parallel_for(n, [&](int i) { out.losses[i] = loss(x[i]); });
  out.particles = std::move(x);
  out.best = static_cast<int>(
      std::min_element(out.losses.begin(), out.losses.end()) -
      out.losses.begin());
  return out;
}

EstimateResult estimate(const ShootingProblem& problem, FitMethod method,
                        const AdamConfig& adam, int particles,
                        std::uint64_t seed,
                        const std::optional<std::vector<double>>& truth) {
  const LossFn loss = [&](const std::vector<double>& x) {
    return problem.loss(x);
  };
  const GradFn grad = [&](const std::vector<double>& x) {
    return problem.gradient_fd(x, adam.fd_step);
  };
  const int n_box = problem.n_params();

  // Uniform draw over the parameter box, redrawn (seeded) while the drawn
  // dynamics diverge. The posterior is zero there, so restarting from such
  // a point is pure waste and its gradient is undefined.
  const auto feasible_draw = [&](std::uint64_t k) {
    std::vector<double> x = problem.sampled_point(derive_seed(seed, 0xe57, k));
    for (std::uint64_t a = 1; a < 64; ++a) {
      if (std::isfinite(problem.loss(x))) break;
      x = problem.sampled_point(derive_seed(seed, 0xe57, k, a));
    }
    return x;
  };

  EstimateResult out;
  if (method == FitMethod::kAdam) {
    const OptimizeResult r = adam_minimize(loss, grad, feasible_draw(0), n_box,
                                           adam);
    out.x = r.x;
    out.loss = r.loss;
    out.history = r.history;
  } else {
    if (particles < 1) throw ConfigError("svgd needs at least one particle");
    std::vector<std::vector<double>> init(particles);
    for (int k = 0; k < particles; ++k) init[k] = feasible_draw(k);
    SvgdConfig cfg;
    cfg.adam = adam;
    cfg.particles = particles;
    cfg.seed = seed;
    const SvgdResult r = svgd_minimize(loss, grad, std::move(init), n_box, cfg);
    out.x = r.particles[r.best];
    out.loss = r.losses[r.best];
    for (const auto& p : r.particles)
      out.particle_thetas.push_back(problem.physical_params(p));
  }
  out.theta = problem.physical_params(out.x);
  if (truth) out.nmae = normalized_mae(out.theta, *truth, problem.params());
  return out;
}

double normalized_mae(const std::vector<double>& estimate,
                      const std::vector<double>& truth,
                      const ParamSpec& spec) {
  if (estimate.size() != truth.size() ||
      static_cast<int>(estimate.size()) != spec.size())
    throw DimensionMismatch("parameter vectors disagree with the spec size");
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i)
    sum += std::abs(estimate[i] - truth[i]) /
           (spec.entries[i].hi - spec.entries[i].lo);
  return sum / double(estimate.size());
}

}  // namespace artik
