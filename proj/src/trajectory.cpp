#include "artik/trajectory.hpp"

#include <algorithm>

#include "artik/errors.hpp"

namespace artik {

void validate(const ObservationSet& obs) {
  if (!(obs.dt > 0.0)) throw ParseError("trajectory dt must be positive");
  if (obs.bodies.empty()) throw ParseError("trajectory contains no bodies");
  const int frames = obs.bodies.front().frames();
  if (frames < 2) throw ParseError("trajectory needs at least 2 frames");
  std::vector<int> ids;
  for (const auto& b : obs.bodies) {
    if (b.frames() != frames)
      throw ParseError("body " + std::to_string(b.body_id) +
                       " has mismatched frame count");
    ids.push_back(b.body_id);
  }
  std::sort(ids.begin(), ids.end());
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
    if (ids[i] != i)
      throw ParseError("body ids must be unique and contiguous from 0");
  }
}

}  // namespace artik
