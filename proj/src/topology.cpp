#include "artik/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "artik/errors.hpp"
#include "artik/parallel.hpp"
#include "artik/rng.hpp"

namespace artik {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative pose sequence of body j expressed in body i's frame.
std::vector<Pose> relative_sequence(const ObservationSet& obs, int i, int j) {
  const auto& a = obs.bodies[i].poses;
  const auto& b = obs.bodies[j].poses;
  std::vector<Pose> rel(a.size());
  for (std::size_t t = 0; t < a.size(); ++t)
    rel[t] = relative_transform(a[t], b[t]);
  return rel;
}

// Best single-joint fit across the three candidate types, each drawing from
// its own seed stream so parallel evaluation order cannot matter.
std::optional<JointFitResult> best_fit(const std::vector<Pose>& seq,
                                       const RansacConfig& base, int i, int j) {
  std::optional<JointFitResult> best;
  const FitType types[] = {FitType::kRevolute, FitType::kPrismatic,
                           FitType::kStatic};
  for (int t = 0; t < 3; ++t) {
    RansacConfig cfg = base;
    cfg.seed = derive_seed(base.seed, std::uint64_t(i), std::uint64_t(j),
                           std::uint64_t(t));
    auto r = ransac_fit(seq, types[t], cfg);
    if (r && (!best || r->cost < best->cost)) best = std::move(r);
  }
  return best;
}

}  // namespace

CostMatrix build_cost_matrix(const ObservationSet& obs,
                             const TopologyConfig& cfg) {
  validate(obs);
  const int n = obs.n_bodies();
  CostMatrix C;
  C.n = n;
  C.cost.assign(std::size_t(n) * n, kInf);
  C.fit.assign(std::size_t(n) * n, std::nullopt);

  // Task list: one entry per unordered body pair, plus the diagonal world
  // attachments. The matrix cost stays +inf on the diagonal; the fit slot
  // (i, i) carries the world-joint candidate for root selection.
  struct Task {
    int i, j;
  };
  std::vector<Task> tasks;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) tasks.push_back({i, j});

  const auto run_task = [&](std::size_t k) {
    const auto [i, j] = tasks[k];
    const std::vector<Pose> seq =
        i == j ? obs.bodies[i].poses : relative_sequence(obs, i, j);
    auto fit = best_fit(seq, cfg.ransac, i, j);
    if (fit && i != j) {
      C.cost[std::size_t(i) * n + j] = fit->cost;
      C.cost[std::size_t(j) * n + i] = fit->cost;
    }
    C.fit[std::size_t(i) * n + j] = std::move(fit);
  };
  if (cfg.parallel) {
    parallel_for(tasks.size(), run_task);
  } else {
    for (std::size_t k = 0; k < tasks.size(); ++k) run_task(k);
  }
  return C;
}

std::vector<TreeEdge> minimum_spanning_forest(const CostMatrix& C) {
  const int n = C.n;
  std::vector<TreeEdge> out;
  std::vector<char> in_tree(n, 0);
  for (int start = 0; start < n; ++start) {
    if (in_tree[start]) continue;
    in_tree[start] = 1;
    std::vector<int> members{start};
    // Prim's algorithm over this component; the candidate scan is ordered
    // so equal costs resolve to the lexicographically smallest (i, j).
    while (true) {
      double best_cost = kInf;
      int best_i = -1, best_j = -1, best_outside = -1;
      for (int a : members) {
        for (int b = 0; b < n; ++b) {
          if (in_tree[b]) continue;
          const double c = C.at(a, b);
          if (c == kInf) continue;
          const int i = std::min(a, b), j = std::max(a, b);
          if (c < best_cost ||
              (c == best_cost &&
               (i < best_i || (i == best_i && j < best_j)))) {
            best_cost = c;
            best_i = i;
            best_j = j;
            best_outside = b;
          }
        }
      }
      if (best_outside < 0) break;
      in_tree[best_outside] = 1;
      members.push_back(best_outside);
      out.push_back({best_i, best_j, best_cost});
    }
    std::sort(members.begin(), members.end());
  }
  std::sort(out.begin(), out.end(), [](const TreeEdge& a, const TreeEdge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return out;
}

namespace {

std::vector<std::vector<int>> adjacency(int n,
                                        const std::vector<TreeEdge>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (const TreeEdge& e : edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());
  return adj;
}

}  // namespace

WorldModel infer_articulation(const ObservationSet& obs,
                              const TopologyConfig& cfg) {
  const CostMatrix C = build_cost_matrix(obs, cfg);
  const std::vector<TreeEdge> edges = minimum_spanning_forest(C);
  const int n = C.n;
  const auto adj = adjacency(n, edges);

  WorldModel wm;
  wm.dt = obs.dt;
  wm.frames = obs.frames();
  for (const auto& b : obs.bodies) wm.body_names.push_back(b.name);

  // Component extraction in order of smallest member id.
  std::vector<int> comp(n, -1);
  int n_comp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<int> bfs;
    bfs.push(s);
    comp[s] = n_comp;
    while (!bfs.empty()) {
      const int u = bfs.front();
      bfs.pop();
      for (int v : adj[u])
        if (comp[v] < 0) {
          comp[v] = n_comp;
          bfs.push(v);
        }
    }
    ++n_comp;
  }

  for (int c = 0; c < n_comp; ++c) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (comp[i] == c) members.push_back(i);

    KinematicTree tree;
    // Root: cheapest world attachment, ties to the lowest id; a component
    // with no attachment candidate becomes a floating base.
    double best_attach = kInf;
    int root = members.front();
    for (int i : members) {
      const auto& fit = C.fit_at(i, i);
      if (fit && fit->cost < best_attach) {
        best_attach = fit->cost;
        root = i;
      }
    }
    tree.root = root;
    if (best_attach < kInf) {
      tree.base = BaseMode::kFixed;
      const auto& fit = *C.fit_at(root, root);
      tree.root_joint = fit.model;
      tree.root_q = fit.q;
    } else {
      tree.base = BaseMode::kFloating;
      tree.root_joint = FreeJoint{};
      tree.root_poses = obs.bodies[root].poses;
    }

    // Orient edges away from the root. Models were fitted with the lower id
    // as the parent frame; traversals in the other direction invert the
    // model analytically and re-extract q per frame.
    std::queue<int> bfs;
    bfs.push(root);
    std::vector<char> seen(n, 0);
    seen[root] = 1;
    while (!bfs.empty()) {
      const int u = bfs.front();
      bfs.pop();
      for (int v : adj[u]) {
        if (seen[v]) continue;
        seen[v] = 1;
        bfs.push(v);
        const int lo = std::min(u, v), hi = std::max(u, v);
        const JointFitResult& fit = *C.fit_at(lo, hi);
        WorldJoint wj;
        wj.parent = u;
        wj.child = v;
        wj.cost = fit.cost;
        wj.inlier_count = fit.inlier_count;
        wj.model = u == lo ? fit.model : invert_joint_model(fit.model);
        const std::vector<Pose> rel = relative_sequence(obs, u, v);
        wj.q.resize(rel.size());
        for (std::size_t t = 0; t < rel.size(); ++t)
          wj.q[t] =
              project_to_joint(wj.model, rel[t], cfg.ransac.rotation_weight).q;
        tree.joints.push_back(std::move(wj));
      }
    }
    wm.trees.push_back(std::move(tree));
  }
  return wm;
}

std::vector<Pose> model_world_poses(const WorldModel& wm, int frame) {
  std::vector<Pose> out(wm.body_names.size());
  for (const KinematicTree& tree : wm.trees) {
    out[tree.root] = tree.base == BaseMode::kFixed
                         ? joint_model_pose(tree.root_joint,
                                            tree.root_q[std::size_t(frame)])
                         : tree.root_poses[std::size_t(frame)];
    for (const WorldJoint& j : tree.joints)  // parents precede children
      out[j.child] = compose(
          out[j.parent], joint_model_pose(j.model, j.q[std::size_t(frame)]));
  }
  return out;
}

double reconstruction_error(const WorldModel& wm, const ObservationSet& obs,
                            double rotation_weight) {
  if (static_cast<int>(obs.n_bodies()) !=
      static_cast<int>(wm.body_names.size()))
    throw DimensionMismatch("world model and observations disagree on bodies");
  double sum = 0.0;
  const int T = obs.frames();
  for (int t = 0; t < T; ++t) {
    const std::vector<Pose> model = model_world_poses(wm, t);
    for (std::size_t b = 0; b < model.size(); ++b)
      sum += pose_residual(model[b], obs.bodies[b].poses[t], rotation_weight);
  }
  return sum / double(T * obs.n_bodies());
}

std::string tree_summary(const WorldModel& wm) {
  std::string out;
  for (const KinematicTree& tree : wm.trees) {
    // children[u] in insertion (BFS) order
    std::vector<std::vector<std::size_t>> children(wm.body_names.size());
    for (std::size_t k = 0; k < tree.joints.size(); ++k)
      children[tree.joints[k].parent].push_back(k);

    const char* base_name = tree.base == BaseMode::kFixed
                                ? joint_type_name(tree.root_joint)
                                : "free";
    // Each chain renders as one line; branches open a new line per subtree.
    std::vector<std::pair<std::string, int>> stack;  // (line prefix, body)
    stack.emplace_back(
        std::string("world -[") + base_name + "]-> ", tree.root);
    while (!stack.empty()) {
      auto [line, u] = stack.back();
      stack.pop_back();
      line += wm.body_names[u];
      while (children[u].size() == 1) {
        const WorldJoint& j = tree.joints[children[u].front()];
        line += std::string(" -[") + joint_type_name(j.model) + "]-> " +
                wm.body_names[j.child];
        u = j.child;
      }
      out += line + "\n";
      for (auto it = children[u].rbegin(); it != children[u].rend(); ++it) {
        const WorldJoint& j = tree.joints[*it];
        stack.emplace_back(wm.body_names[u] + " -[" +
                               joint_type_name(j.model) + "]-> ",
                           j.child);
      }
    }
  }
  return out;
}

}  // namespace artik
