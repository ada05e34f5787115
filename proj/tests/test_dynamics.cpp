#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "artik/dynamics.hpp"
#include "artik/mechanism.hpp"
#include "artik/rng.hpp"
#include "oracles.hpp"

using namespace artik;

namespace {

Mechanism single_pendulum(double m, const Vec3& com, const Vec3& inertia,
                          double damping) {
  Mechanism mech;
  mech.name = "pendulum";
  mech.links = {{"bob", m, com, inertia}};
  MechJoint j;
  j.kind = JointKind::kRevolute;
  j.parent = -1;
  j.child = 0;
  j.axis = Vec3::UnitY();
  j.pivot = Vec3::Zero();
  j.damping = damping;
  mech.joints = {j};
  return mech;
}

Mechanism bare_slider(double m, double damping) {
  Mechanism mech;
  mech.name = "slider";
  mech.links = {{"cart", m, Vec3::Zero(), Vec3(0.01, 0.01, 0.01)}};
  MechJoint j;
  j.kind = JointKind::kPrismatic;
  j.parent = -1;
  j.child = 0;
  j.axis = Vec3::UnitX();
  j.damping = damping;
  j.actuated = true;
  mech.joints = {j};
  return mech;
}

double pose_gap(const Pose& a, const Pose& b) {
  return rotation_angle_between(a, b) + (a.p - b.p).norm();
}

}  // namespace

// ---- forward dynamics against hand-derived equations ----

TEST_CASE("compiled pendulum matches the hand-derived equation of motion") {
  const double m = 0.8, I = 0.004, dx = 0.07, dz = -0.33, b = 0.03;
  const Mechanism mech =
      single_pendulum(m, Vec3(dx, 0, dz), Vec3(I, I, I), b);
  const CompiledMechanism cm(mech);
  Rng rng(11);
  std::vector<double> qdd;
  for (int k = 0; k < 100; ++k) {
    const double q = M_PI * (2.0 * rng.uniform() - 1.0);
    const double qd = 6.0 * (2.0 * rng.uniform() - 1.0);
    const double tau = 5.0 * (2.0 * rng.uniform() - 1.0);
    cm.forward_dynamics({q}, {qd}, {tau}, &qdd);
    const double want =
        oracle::pendulum_qdd(m, I, dx, dz, b, 9.81, q, qd, tau);
    CHECK(std::abs(qdd[0] - want) < 1e-8);
  }
}

TEST_CASE("compiled cartpole matches the hand-derived equations of motion") {
  const Preset pre = preset("cartpole");
  const CompiledMechanism cm(pre.mech);
  const double M = pre.mech.links[0].mass;
  const double m = pre.mech.links[1].mass;
  const double l = -pre.mech.links[1].com.z();
  const double I = pre.mech.links[1].inertia.y();
  const double bc = pre.mech.joints[0].damping;
  const double bp = pre.mech.joints[1].damping;
  Rng rng(12);
  std::vector<double> qdd;
  for (int k = 0; k < 100; ++k) {
    const std::array<double, 2> q = {2.0 * rng.uniform() - 1.0,
                                     M_PI * (2.0 * rng.uniform() - 1.0)};
    const std::array<double, 2> qd = {4.0 * (2.0 * rng.uniform() - 1.0),
                                      6.0 * (2.0 * rng.uniform() - 1.0)};
    const double F = 5.0 * (2.0 * rng.uniform() - 1.0);
    const double tau = 2.0 * (2.0 * rng.uniform() - 1.0);
    cm.forward_dynamics({q[0], q[1]}, {qd[0], qd[1]}, {F, tau}, &qdd);
    const auto want =
        oracle::cartpole_qdd(M, m, l, I, bc, bp, 9.81, q, qd, F, tau);
    CHECK(std::abs(qdd[0] - want[0]) < 1e-8);
    CHECK(std::abs(qdd[1] - want[1]) < 1e-8);
  }
}

TEST_CASE("chained hinges match the hand-derived equations of motion") {
  // The hinge offset puts the backward force-propagation path under test;
  // joints mounted at the parent origin never exercise it.
  const Preset pre = preset("double_pendulum");
  const CompiledMechanism cm(pre.mech);
  const Link& l1 = pre.mech.links[0];
  const Link& l2 = pre.mech.links[1];
  const MechJoint& elbow = pre.mech.joints[1];
  const std::array<double, 2> c1{l1.com.x(), l1.com.z()};
  const std::array<double, 2> p{elbow.pivot.x(), elbow.pivot.z()};
  const std::array<double, 2> u{elbow.ref.p.x() + l2.com.x() - elbow.pivot.x(),
                                elbow.ref.p.z() + l2.com.z() - elbow.pivot.z()};
  const double b1 = pre.mech.joints[0].damping;
  const double b2 = elbow.damping;
  Rng rng(13);
  std::vector<double> qdd;
  for (int k = 0; k < 100; ++k) {
    const std::array<double, 2> q = {M_PI * (2.0 * rng.uniform() - 1.0),
                                     M_PI * (2.0 * rng.uniform() - 1.0)};
    const std::array<double, 2> qd = {6.0 * (2.0 * rng.uniform() - 1.0),
                                      6.0 * (2.0 * rng.uniform() - 1.0)};
    const double t1 = 3.0 * (2.0 * rng.uniform() - 1.0);
    const double t2 = 3.0 * (2.0 * rng.uniform() - 1.0);
    cm.forward_dynamics({q[0], q[1]}, {qd[0], qd[1]}, {t1, t2}, &qdd);
    const auto want = oracle::double_link_qdd(
        l1.mass, c1, l1.inertia.y(), b1, l2.mass, u, p, l2.inertia.y(), b2,
        9.81, q, qd, t1, t2);
    CHECK(std::abs(qdd[0] - want[0]) < 1e-8);
    CHECK(std::abs(qdd[1] - want[1]) < 1e-8);
  }
}

TEST_CASE("hanging pendulum rests at equilibrium") {
  const Mechanism mech =
      single_pendulum(0.5, Vec3(0, 0, -0.4), Vec3(0.002, 0.002, 0.002), 0.01);
  const CompiledMechanism cm(mech);
  std::vector<double> qdd;
  cm.forward_dynamics({0.0}, {0.0}, {0.0}, &qdd);
  CHECK(std::abs(qdd[0]) < 1e-12);
  SimState s{{0.0}, {0.0}};
  step(cm, &s, {0.0}, StepConfig{0.05, 1, 1e6});
  CHECK(s.q[0] == 0.0);
  CHECK(s.qd[0] == 0.0);
}

TEST_CASE("horizontal point-mass pendulum falls at g over length") {
  const double m = 0.3, l = 0.5, I = 1e-8;
  const Mechanism mech =
      single_pendulum(m, Vec3(l, 0, 0), Vec3(I, I, I), 0.0);
  const CompiledMechanism cm(mech);
  std::vector<double> qdd;
  cm.forward_dynamics({0.0}, {0.0}, {0.0}, &qdd);
  CHECK(std::abs(qdd[0] - m * 9.81 * l / (I + m * l * l)) < 1e-10);
  CHECK(std::abs(std::abs(qdd[0]) - 9.81 / l) < 1e-4);
}

// ---- integration ----

TEST_CASE("force-free slide advances position by velocity times dt") {
  const CompiledMechanism cm(bare_slider(1.0, 0.0));
  SimState s{{0.0}, {1.0}};
  step(cm, &s, {0.0}, StepConfig{0.05, 1, 1e6});
  CHECK(s.q[0] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(s.qd[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("substeps chain exactly like explicit smaller steps") {
  const Preset pre = preset("cartpole");
  const CompiledMechanism cm(pre.mech);
  SimState a{{0.1, 0.5}, {0.3, -0.4}};
  SimState b = a;
  step(cm, &a, {1.0, 0.0}, StepConfig{0.04, 4, 1e6});
  for (int k = 0; k < 4; ++k) step(cm, &b, {1.0, 0.0}, StepConfig{0.01, 1, 1e6});
  CHECK(a.q[0] == b.q[0]);
  CHECK(a.q[1] == b.q[1]);
  CHECK(a.qd[0] == b.qd[0]);
  CHECK(a.qd[1] == b.qd[1]);
}

TEST_CASE("undamped energy drifts less than one percent over ten seconds") {
  // Every preset, damping removed. Moderate amplitudes keep the double
  // pendulum out of its chaotic band, where no fixed step conserves energy.
  // The free body flies without gravity: under free fall the one-sided
  // velocity update misprices the potential trade by g^2 dt/2 per unit
  // time even though the path itself is exact, so the tumble is the part
  // with a conserved integer-step energy.
  const std::map<std::string, SimState> starts = {
      {"cartpole", {{0.0, 2.0}, {1.5, 1.0}}},
      {"double_pendulum", {{0.9, 0.4}, {0.0, 0.0}}},
      {"three_link", {{0.5, -0.3, 0.4}, {0.0, 0.0, 0.0}}},
      {"free_body", {{0, 0, 0, 0, 0, 0}, {0.4, 0.15, 2.2, 0.2, 0.1, 0.9}}},
  };
  for (const auto& [name, x0] : starts) {
    CAPTURE(name);
    Preset pre = preset(name);
    for (auto& j : pre.mech.joints) j.damping = 0.0;
    if (name == "free_body") pre.mech.gravity = Vec3::Zero();
    const CompiledMechanism cm(pre.mech);
    SimState s = x0;
    const double e0 = cm.energy(s.q, s.qd);
    REQUIRE(std::abs(e0) > 0.5);
    const StepConfig cfg{1e-3, 1, 1e6};
    const std::vector<double> tau(cm.dof(), 0.0);
    double worst = 0.0;
    for (int k = 0; k < 10000; ++k) {
      step(cm, &s, tau, cfg);
      worst = std::max(worst, std::abs(cm.energy(s.q, s.qd) - e0));
    }
    CHECK(worst < 0.01 * std::abs(e0));
  }
}

TEST_CASE("damped energy decays monotonically at rest input") {
  const Preset pre = preset("double_pendulum");
  const CompiledMechanism cm(pre.mech);
  SimState s{{1.1, -0.4}, {0.0, 0.0}};
  double prev = cm.energy(s.q, s.qd);
  const double scale = std::max(1.0, std::abs(prev));
  const StepConfig cfg{1e-3, 1, 1e6};
  for (int k = 0; k < 5000; ++k) {
    step(cm, &s, {0.0, 0.0}, cfg);
    const double e = cm.energy(s.q, s.qd);
    CHECK(e <= prev + 1e-9 * scale);
    prev = e;
  }
  CHECK(prev < cm.energy({1.1, -0.4}, {0.0, 0.0}));
}

TEST_CASE("halving the step halves the integration error") {
  const Mechanism mech =
      single_pendulum(0.5, Vec3(0, 0, -0.4), Vec3(0.002, 0.002, 0.002), 0.0);
  const CompiledMechanism cm(mech);
  const auto final_q = [&](double dt) {
    SimState s{{0.8}, {0.0}};
    const int n = int(std::lround(1.0 / dt));
    const StepConfig cfg{dt, 1, 1e6};
    for (int k = 0; k < n; ++k) step(cm, &s, {0.0}, cfg);
    return s.q[0];
  };
  const double ref = final_q(1e-5);
  const double e2 = std::abs(final_q(2e-3) - ref);
  const double e1 = std::abs(final_q(1e-3) - ref);
  CHECK(e2 / e1 == doctest::Approx(2.0).epsilon(0.2));
}

// ---- kinematics ----

TEST_CASE("zero coordinates put every link at its mounting pose") {
  Mechanism mech;
  mech.name = "bent";
  mech.links = {{"a", 0.4, Vec3::Zero(), Vec3(0.001, 0.001, 0.001)},
                {"b", 0.2, Vec3::Zero(), Vec3(0.001, 0.001, 0.001)}};
  MechJoint j0;
  j0.kind = JointKind::kRevolute;
  j0.parent = -1;
  j0.child = 0;
  j0.axis = Vec3::UnitY();
  j0.ref = Pose(Vec3(0, 0, 0.4), Vec3(0.1, 0, -0.2));
  MechJoint j1;
  j1.kind = JointKind::kRevolute;
  j1.parent = 0;
  j1.child = 1;
  j1.axis = Vec3::UnitX();
  j1.ref = Pose(Vec3(0.2, 0, 0), Vec3(0, 0, -0.3));
  mech.joints = {j0, j1};
  const CompiledMechanism cm(mech);
  std::vector<Pose> poses;
  cm.link_poses({0.0, 0.0}, &poses);
  CHECK(pose_gap(poses[0], j0.ref) < 1e-12);
  CHECK(pose_gap(poses[1], compose(j0.ref, j1.ref)) < 1e-12);
}

TEST_CASE("quarter turn about an offset vertical axis") {
  Mechanism mech;
  mech.name = "turn";
  mech.links = {{"arm", 0.4, Vec3::Zero(), Vec3(0.001, 0.001, 0.001)}};
  MechJoint j;
  j.kind = JointKind::kRevolute;
  j.parent = -1;
  j.child = 0;
  j.axis = Vec3::UnitZ();
  j.pivot = Vec3(0.2, 0, 0);
  mech.joints = {j};
  const CompiledMechanism cm(mech);
  std::vector<Pose> poses;
  cm.link_poses({M_PI / 2}, &poses);
  CHECK((poses[0].r - Vec3(0, 0, M_PI / 2)).norm() < 1e-12);
  CHECK((poses[0].p - Vec3(0.2, -0.2, 0)).norm() < 1e-12);
}

TEST_CASE("cart shift leaves the pole upright") {
  const Preset pre = preset("cartpole");
  const CompiledMechanism cm(pre.mech);
  std::vector<Pose> poses;
  cm.link_poses({0.3, 0.0}, &poses);
  CHECK((poses[0].p - Vec3(0.3, 0, 0)).norm() < 1e-12);
  CHECK(poses[0].r.norm() < 1e-12);
  CHECK((poses[1].p - Vec3(0.3, 0, 0)).norm() < 1e-12);
  CHECK(poses[1].r.norm() < 1e-12);
}

// ---- rollout ----

TEST_CASE("zero-frame rollout is empty, repeats are identical") {
  const Preset pre = preset("cartpole");
  const CompiledMechanism cm(pre.mech);
  const StepConfig cfg{pre.dt, 1, 1e6};
  CHECK(rollout(cm, pre.x0, 0, cfg).q.empty());
  const Rollout a = rollout(cm, pre.x0, 120, cfg, pre.controls);
  const Rollout b = rollout(cm, pre.x0, 120, cfg, pre.controls);
  CHECK(a.q == b.q);
  CHECK(a.qd == b.qd);
  CHECK(!a.diverged);
  CHECK(a.q.size() == 120);
  CHECK(a.q[0] == pre.x0.q);
}

TEST_CASE("overdamped slide at a coarse step is flagged as divergent") {
  const CompiledMechanism cm(bare_slider(0.1, 100.0));
  const Rollout roll =
      rollout(cm, SimState{{0.0}, {1.0}}, 60, StepConfig{0.05, 1, 1e6});
  CHECK(roll.diverged);
  CHECK(roll.diverged_at > 0);
  CHECK(roll.diverged_at < 15);
  CHECK(int(roll.q.size()) == roll.diverged_at + 1);
}

TEST_CASE("free flight translation follows the discrete ballistic path") {
  const Preset pre = preset("free_body");
  const CompiledMechanism cm(pre.mech);
  const Rollout roll =
      rollout(cm, pre.x0, 100, StepConfig{pre.dt, 1, 1e6});
  REQUIRE(!roll.diverged);
  for (int k = 0; k < 100; k += 9) {
    CHECK(std::abs(roll.q[k][0] - 0.4 * k * pre.dt) < 1e-9);
    CHECK(std::abs(roll.q[k][1] - 0.15 * k * pre.dt) < 1e-9);
    CHECK(std::abs(roll.q[k][2] -
                   oracle::ballistic_z(0.0, 2.2, 9.81, pre.dt, k)) < 1e-9);
  }
}

TEST_CASE("floating coordinate chart round trips") {
  Rng rng(21);
  double q[6], back[6];
  for (int k = 0; k < 50; ++k) {
    for (int i = 0; i < 3; ++i) q[i] = 2.0 * rng.gaussian();
    // Keep the middle rotation well away from the chart's singular pitch.
    q[3] = 2.8 * (rng.uniform() - 0.5);
    q[4] = 2.0 * (rng.uniform() - 0.5);
    q[5] = 2.8 * (rng.uniform() - 0.5);
    const Pose t = pose_from_floating_coords(q);
    floating_coords_from_pose(t, back);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(back[i] - q[i]) < 1e-12);
    const Pose again = pose_from_floating_coords(back);
    CHECK(pose_gap(again, t) < 1e-12);
  }
}

// ---- observation generation ----

TEST_CASE("noiseless observations reproduce the simulated poses") {
  const Preset pre = preset("cartpole");
  const CompiledMechanism cm(pre.mech);
  const Rollout roll =
      rollout(cm, pre.x0, pre.frames, StepConfig{pre.dt, 1, 1e6},
              pre.controls);
  const ObservationSet obs = generate_observations(
      pre.mech, pre.x0, pre.frames, pre.dt, pre.controls, ObservationNoise{});
  REQUIRE(obs.n_bodies() == 2);
  CHECK(obs.bodies[0].name == "cart");
  CHECK(obs.bodies[1].name == "pole");
  CHECK(obs.dt == pre.dt);
  CHECK(obs.frames() == pre.frames);
  std::vector<Pose> poses;
  for (int t = 0; t < pre.frames; t += 17) {
    cm.link_poses(roll.q[t], &poses);
    for (int b = 0; b < 2; ++b)
      CHECK(pose_gap(obs.bodies[b].poses[t], poses[b]) < 1e-12);
  }
}

TEST_CASE("noise realization is seed-deterministic") {
  const Preset pre = preset("cartpole");
  ObservationNoise n;
  n.sigma_p = 0.005;
  n.sigma_r = 0.01;
  n.seed = 7;
  const ObservationSet a = generate_observations(pre.mech, pre.x0, pre.frames,
                                                 pre.dt, pre.controls, n);
  const ObservationSet b = generate_observations(pre.mech, pre.x0, pre.frames,
                                                 pre.dt, pre.controls, n);
  n.seed = 8;
  const ObservationSet c = generate_observations(pre.mech, pre.x0, pre.frames,
                                                 pre.dt, pre.controls, n);
  bool same_ab = true, same_ac = true;
  for (int t = 0; t < pre.frames; ++t) {
    same_ab = same_ab &&
              a.bodies[0].poses[t].p == b.bodies[0].poses[t].p &&
              a.bodies[0].poses[t].r == b.bodies[0].poses[t].r;
    same_ac = same_ac && a.bodies[0].poses[t].p == c.bodies[0].poses[t].p;
  }
  CHECK(same_ab);
  CHECK(!same_ac);
}

TEST_CASE("noise magnitude lands in the expected band") {
  const Preset pre = preset("cartpole");
  ObservationNoise n;
  n.sigma_p = 0.005;
  n.sigma_r = 0.01;
  n.seed = 3;
  const ObservationSet clean = generate_observations(
      pre.mech, pre.x0, pre.frames, pre.dt, pre.controls, ObservationNoise{});
  const ObservationSet noisy = generate_observations(
      pre.mech, pre.x0, pre.frames, pre.dt, pre.controls, n);
  double mae_p = 0.0, mae_r = 0.0;
  int cnt = 0;
  for (int b = 0; b < 2; ++b)
    for (int t = 0; t < pre.frames; ++t) {
      const Vec3 dp =
          noisy.bodies[b].poses[t].p - clean.bodies[b].poses[t].p;
      const Vec3 dr =
          noisy.bodies[b].poses[t].r - clean.bodies[b].poses[t].r;
      mae_p += dp.cwiseAbs().sum();
      mae_r += dr.cwiseAbs().sum();
      cnt += 3;
    }
  mae_p /= cnt;
  mae_r /= cnt;
  CHECK(mae_p > 0.003);
  CHECK(mae_p < 0.008);
  CHECK(mae_r > 0.003);
  CHECK(mae_r < 0.009);
}

TEST_CASE("states can be read back from a noiseless recording") {
  const Preset pre = preset("cartpole");
  const CompiledMechanism cm(pre.mech);
  const Rollout roll = rollout(cm, pre.x0, pre.frames,
                               StepConfig{pre.dt, 1, 1e6}, pre.controls);
  const ObservationSet obs = generate_observations(
      pre.mech, pre.x0, pre.frames, pre.dt, pre.controls, ObservationNoise{});
  const std::vector<SimState> states = states_from_observations(pre.mech, obs);
  REQUIRE(states.size() == std::size_t(pre.frames));
  double max_q = 0.0, max_qd = 0.0;
  for (int t = 0; t < pre.frames; ++t)
    for (int i = 0; i < 2; ++i) {
      max_q = std::max(max_q, std::abs(states[t].q[i] - roll.q[t][i]));
      max_qd = std::max(max_qd, std::abs(states[t].qd[i] - roll.qd[t][i]));
    }
  CHECK(max_q < 1e-9);
  // Velocities come from pose differences, first-order accurate in dt.
  CHECK(max_qd < 0.5);
}

// ---- presets ----

TEST_CASE("cartpole preset: two driven coordinates, four tunable parameters") {
  const Preset pre = preset("cartpole");
  CHECK(pre.mech.dof() == 2);
  CHECK(pre.mech.joints[0].kind == JointKind::kPrismatic);
  CHECK(pre.mech.joints[1].kind == JointKind::kRevolute);
  CHECK(pre.params.entries.size() == 4);
  const CompiledMechanism cm(pre.mech);
  CHECK(cm.actuated_coords() == std::vector<int>{0});
  CHECK(pre.controls.size() == std::size_t(pre.frames - 1));
}

TEST_CASE("preset overrides regenerate the excitation to match") {
  const Preset pre = preset("cartpole", 300, 0.02);
  CHECK(pre.frames == 300);
  CHECK(pre.dt == 0.02);
  CHECK(pre.controls.size() == 299);
}

TEST_CASE("free body preset floats with six coordinates") {
  const Preset pre = preset("free_body");
  CHECK(pre.mech.dof() == 6);
  CHECK(pre.mech.joints[0].kind == JointKind::kFloating);
}

// Natural frequency of one link swung alone about its own hinge, measured
// by linearizing the restoring acceleration at the hanging equilibrium.
static double isolated_link_frequency(const Link& link) {
  Mechanism m;
  m.name = "lone";
  m.links = {link};
  MechJoint j;
  j.kind = JointKind::kRevolute;
  j.parent = -1;
  j.child = 0;
  j.axis = Vec3::UnitY();
  m.joints = {j};
  const CompiledMechanism cm(m);

  double best_q = 0.0, best_e = cm.energy({0.0}, {0.0});
  for (int k = 1; k < 256; ++k) {
    const double q = -M_PI + 2.0 * M_PI * k / 256.0;
    const double e = cm.energy({q}, {0.0});
    if (e < best_e) {
      best_e = e;
      best_q = q;
    }
  }
  std::vector<double> qdd;
  for (int it = 0; it < 60; ++it) {
    cm.forward_dynamics({best_q}, {0.0}, {0.0}, &qdd);
    const double f = qdd[0];
    cm.forward_dynamics({best_q + 1e-6}, {0.0}, {0.0}, &qdd);
    const double slope = (qdd[0] - f) / 1e-6;
    best_q -= f / slope;
  }
  cm.forward_dynamics({best_q + 1e-5}, {0.0}, {0.0}, &qdd);
  const double up = qdd[0];
  cm.forward_dynamics({best_q - 1e-5}, {0.0}, {0.0}, &qdd);
  return std::sqrt(-(up - qdd[0]) / 2e-5);
}

TEST_CASE("double pendulum links ring near a two-to-one frequency ratio") {
  const Preset pre = preset("double_pendulum");
  const double w1 = isolated_link_frequency(pre.mech.links[0]);
  const double w2 = isolated_link_frequency(pre.mech.links[1]);
  // Closed form for a y-axis hinge through the frame origin.
  const auto expected = [](const Link& l) {
    const double d = std::hypot(l.com.x(), l.com.z());
    return std::sqrt(l.mass * 9.81 * d / (l.inertia.y() + l.mass * d * d));
  };
  CHECK(w1 == doctest::Approx(expected(pre.mech.links[0])).epsilon(1e-6));
  CHECK(w2 == doctest::Approx(expected(pre.mech.links[1])).epsilon(1e-6));
  const double ratio = std::max(w1, w2) / std::min(w1, w2);
  CHECK(ratio > 1.9);
  CHECK(ratio < 2.1);
}

TEST_CASE("double pendulum is sensitive to its start at high energy") {
  // Undamped: with friction both runs spiral into the same rest point and
  // the early divergence is erased by the time the horizon ends.
  Preset pre = preset("double_pendulum");
  for (auto& j : pre.mech.joints) j.damping = 0.0;
  const CompiledMechanism cm(pre.mech);
  const StepConfig cfg{1e-3, 1, 1e6};
  SimState a{{2.9, 0.1}, {0.0, 0.0}};
  SimState b = a;
  b.q[0] += 1e-8;
  for (int k = 0; k < 10000; ++k) {
    step(cm, &a, {0.0, 0.0}, cfg);
    step(cm, &b, {0.0, 0.0}, cfg);
  }
  const double sep = std::abs(a.q[0] - b.q[0]) + std::abs(a.q[1] - b.q[1]);
  CHECK(sep > 1e-3);
}

TEST_CASE("parameter paths read and write the mechanism fields") {
  const Preset pre = preset("cartpole");
  Mechanism m = pre.mech;
  const std::vector<double> theta = {1.7, 0.4, 0.009, 0.05};
  pre.params.apply(&m, theta);
  CHECK(m.links[0].mass == 1.7);
  CHECK(m.links[1].mass == 0.4);
  CHECK(m.links[1].inertia.y() == 0.009);
  CHECK(m.joints[1].damping == 0.05);
  CHECK(pre.params.get(m) == theta);
  const std::vector<double> z = pre.params.to_normalized(theta);
  for (double v : z) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  const std::vector<double> back = pre.params.to_physical(z);
  for (std::size_t i = 0; i < back.size(); ++i)
    CHECK(back[i] == doctest::Approx(theta[i]).epsilon(1e-12));
}
