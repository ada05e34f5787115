#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "artik/pose.hpp"

namespace artik {

// World-frame pose track of one rigid body. All bodies of a recording share
// the same frame count and sampling interval.
struct BodyTrajectory {
  int body_id = 0;
  std::string name;
  double dt = 0.0;
  std::vector<Pose> poses;

  int frames() const { return static_cast<int>(poses.size()); }
};

// A multi-body recording: the input to articulation inference and parameter
// estimation, and the output of the observation generator.
struct ObservationSet {
  double dt = 0.0;
  std::vector<BodyTrajectory> bodies;
  std::optional<std::uint64_t> seed;
  std::string scene;

  int frames() const { return bodies.empty() ? 0 : bodies.front().frames(); }
  int n_bodies() const { return static_cast<int>(bodies.size()); }
};

// Throws ParseError unless: dt > 0, at least one body, at least two frames,
// all tracks equally long, ids unique and contiguous from 0.
void validate(const ObservationSet& obs);

}  // namespace artik
