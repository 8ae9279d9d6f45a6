#include "clusterq/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace clusterq {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

bool within_bounds(const Rect& r, double w, double h) {
  return r.valid() && r.x0 >= 0.0 && r.y0 >= 0.0 && r.x1 <= w && r.y1 <= h;
}

int bin_of(double v, int bins) {
  const int b = static_cast<int>(std::floor(v));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

std::string_view action_name(Action a) {
  switch (a) {
    case Action::N: return "N";
    case Action::NE: return "NE";
    case Action::E: return "E";
    case Action::SE: return "SE";
    case Action::S: return "S";
    case Action::SW: return "SW";
    case Action::W: return "W";
    case Action::NW: return "NW";
    case Action::Hold: return "HOLD";
  }
  return "?";
}

Vec2 direction_of(Action a) {
  switch (a) {
    case Action::N: return {0.0, 1.0};
    case Action::NE: return {kInvSqrt2, kInvSqrt2};
    case Action::E: return {1.0, 0.0};
    case Action::SE: return {kInvSqrt2, -kInvSqrt2};
    case Action::S: return {0.0, -1.0};
    case Action::SW: return {-kInvSqrt2, -kInvSqrt2};
    case Action::W: return {-1.0, 0.0};
    case Action::NW: return {-kInvSqrt2, kInvSqrt2};
    case Action::Hold: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

double heading_of(Action a) {
  constexpr double q = std::numbers::pi / 4.0;
  switch (a) {
    case Action::E: return 0.0;
    case Action::NE: return q;
    case Action::N: return 2 * q;
    case Action::NW: return 3 * q;
    case Action::W: return 4 * q;
    case Action::SW: return -3 * q;
    case Action::S: return -2 * q;
    case Action::SE: return -q;
    case Action::Hold: return 0.0;
  }
  return 0.0;
}

int WorldMap::x_bins() const { return static_cast<int>(std::ceil(width)); }
int WorldMap::y_bins() const { return static_cast<int>(std::ceil(height)); }

bool WorldMap::in_obstacle(Vec2 p) const {
  return std::any_of(obstacles.begin(), obstacles.end(),
                     [&](const Rect& r) { return r.contains(p); });
}

bool WorldMap::in_target(Vec2 p) const { return norm(p - target_center) <= target_radius; }

void WorldMap::validate() const {
  if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("map: width/height must be positive");
  if (!(target_radius > 0.0)) throw std::invalid_argument("map: target_radius must be positive");
  if (!bounds().contains(target_center)) throw std::invalid_argument("map: target_center outside bounds");
  for (const auto& r : obstacles)
    if (!within_bounds(r, width, height)) throw std::invalid_argument("map: obstacle outside bounds");
  if (!within_bounds(light_region, width, height)) throw std::invalid_argument("map: light_region outside bounds");
  if (!within_bounds(rough_region, width, height)) throw std::invalid_argument("map: rough_region outside bounds");
  for (const auto& r : extra_regions)
    if (!within_bounds(r, width, height)) throw std::invalid_argument("map: extra region outside bounds");
}

WorldMap canonical_map() {
  WorldMap m;
  m.width = 30.0;
  m.height = 30.0;
  // Pocket around the target opens to the south-west; starts behind its
  // walls must leave the target to get round them.
  m.obstacles = {
      {20.0, 27.0, 30.0, 28.0},  // north wall
      {27.0, 18.0, 28.0, 28.0},  // east wall
      {1.0, 27.0, 3.0, 28.0},    // block at the edge of the rough patch
  };
  m.light_region = {25.0, 7.0, 30.0, 14.0};
  m.rough_region = {2.0, 22.0, 9.0, 29.0};
  m.target_center = {23.0, 22.0};
  m.target_radius = 3.0;
  return m;
}

StepResult step(const AgentState& state, Action action, const WorldMap& map) {
  if (action == Action::Hold) return {state, false};
  AgentState next = state;
  next.heading = heading_of(action);
  const Vec2 from = state.position();
  Vec2 to = from + kStepLength * direction_of(action);
  to.x = std::clamp(to.x, 0.0, map.width);
  to.y = std::clamp(to.y, 0.0, map.height);
  for (const auto& ob : map.obstacles) {
    if (segment_intersects(ob, from, to)) return {next, true};
  }
  next.x = to.x;
  next.y = to.y;
  return {next, false};
}

SensorReading sense(const AgentState& state, const WorldMap& map, Rng* rng, double noise_std) {
  SensorReading out;
  const Vec2 origin = state.position();
  constexpr double offset = kSensorOffsetDeg * std::numbers::pi / 180.0;
  const double angles[3] = {state.heading - offset, state.heading, state.heading + offset};
  for (int k = 0; k < 3; ++k) {
    const Vec2 dir{std::cos(angles[k]), std::sin(angles[k])};
    double best = kNoEcho;
    for (const auto& ob : map.obstacles) {
      if (auto d = ray_distance(ob, origin, dir, kSensorRange)) best = std::min(best, *d);
    }
    out.range[k] = best;
  }
  out.light = map.light_region.contains(origin) ? 1.0 : 0.0;
  out.roughness = map.rough_region.contains(origin) ? 1.0 : 0.0;
  out.in_target = map.in_target(origin) ? 1.0 : 0.0;
  out.extra.reserve(map.extra_regions.size());
  for (const auto& r : map.extra_regions) out.extra.push_back(r.contains(origin) ? 1.0 : 0.0);

  if (rng != nullptr && noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, noise_std);
    for (auto& d : out.range) {
      if (std::isfinite(d)) d += noise(*rng);
    }
    out.light += noise(*rng);
    out.roughness += noise(*rng);
    out.in_target += noise(*rng);
    for (auto& e : out.extra) e += noise(*rng);
  }
  return out;
}

std::vector<int> FeatureVector::active() const {
  std::vector<int> idx;
  idx.reserve(env.size() + 2);
  const int ed = static_cast<int>(env.size());
  for (int j = 0; j < ed; ++j)
    if (env[j]) idx.push_back(j);
  idx.push_back(ed + x_bin);
  idx.push_back(ed + x_bins + y_bin);
  return idx;
}

std::vector<std::uint8_t> FeatureVector::dense() const {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(dim()), 0);
  for (int i : active()) out[static_cast<std::size_t>(i)] = 1;
  return out;
}

FeatureVector extract_features(const SensorReading& reading, const AgentState& state,
                               const WorldMap& map) {
  FeatureVector f;
  f.x_bins = map.x_bins();
  f.y_bins = map.y_bins();
  f.env.assign(static_cast<std::size_t>(map.env_dim()), 0);
  const bool echo = std::any_of(reading.range.begin(), reading.range.end(),
                                [](double d) { return std::isfinite(d) && d <= kSensorRange; });
  f.env[kObstacle] = echo ? 1 : 0;
  f.env[kLight] = reading.light >= kBinaryThreshold ? 1 : 0;
  f.env[kRough] = reading.roughness >= kBinaryThreshold ? 1 : 0;
  f.env[kTarget] = reading.in_target >= kBinaryThreshold ? 1 : 0;
  for (std::size_t k = 0; k < reading.extra.size() && kBaseEnvChannels + k < f.env.size(); ++k)
    f.env[kBaseEnvChannels + k] = reading.extra[k] >= kBinaryThreshold ? 1 : 0;
  f.x_bin = bin_of(state.x, f.x_bins);
  f.y_bin = bin_of(state.y, f.y_bins);
  return f;
}

std::vector<std::uint8_t> noiseless_env(const AgentState& state, const WorldMap& map) {
  return extract_features(sense(state, map, nullptr), state, map).env;
}

}  // namespace clusterq
