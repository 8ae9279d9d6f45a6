#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "clusterq/geometry.hpp"

namespace clusterq {

using Rng = std::mt19937_64;

// Kinematics and sensing constants of the simulated agent.
inline constexpr double kSpeed = 8.0;        // units / s
inline constexpr double kTimeStep = 0.2;     // s
inline constexpr double kStepLength = kSpeed * kTimeStep;
inline constexpr double kSensorRange = 1.0;
inline constexpr double kSensorOffsetDeg = 72.0;
inline constexpr double kSensorNoiseStd = 0.05;
inline constexpr double kBinaryThreshold = 0.5;
inline constexpr double kNoEcho = std::numeric_limits<double>::infinity();

/// Absolute compass moves plus hold. y grows towards north.
enum class Action : std::uint8_t { N, NE, E, SE, S, SW, W, NW, Hold };
inline constexpr int kNumActions = 9;

inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::N, Action::NE, Action::E, Action::SE, Action::S,
    Action::SW, Action::W, Action::NW, Action::Hold};

std::string_view action_name(Action a);
inline int index_of(Action a) { return static_cast<int>(a); }
inline Action action_at(int i) { return static_cast<Action>(i); }

/// Unit direction of a move; zero for Hold.
Vec2 direction_of(Action a);

/// Heading angle (radians, counter-clockwise from east) of a move.
double heading_of(Action a);

/// Environment indices into F_e.
enum EnvChannel : int { kObstacle = 0, kLight = 1, kRough = 2, kTarget = 3 };
inline constexpr int kBaseEnvChannels = 4;

struct WorldMap {
  double width = 30.0;
  double height = 30.0;
  std::vector<Rect> obstacles;
  Rect light_region;
  Rect rough_region;
  Vec2 target_center;
  double target_radius = 1.0;
  /// Additional binary region channels appended after the base four.
  std::vector<Rect> extra_regions;

  int env_dim() const { return kBaseEnvChannels + static_cast<int>(extra_regions.size()); }
  int x_bins() const;
  int y_bins() const;
  int feature_dim() const { return env_dim() + x_bins() + y_bins(); }

  Rect bounds() const { return {0.0, 0.0, width, height}; }
  bool in_obstacle(Vec2 p) const;
  bool in_target(Vec2 p) const;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

/// Default layout: target in a pocket near the top-right corner, light on the
/// right-middle edge, rough patch in the top-left.
WorldMap canonical_map();

struct AgentState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct StepResult {
  AgentState state;
  bool bumped = false;
};

StepResult step(const AgentState& state, Action action, const WorldMap& map);

struct SensorReading {
  std::array<double, 3> range{kNoEcho, kNoEcho, kNoEcho};  // heading-72, heading, heading+72
  double light = 0.0;
  double roughness = 0.0;
  double in_target = 0.0;
  std::vector<double> extra;
};

/// Casts the range rays and samples the region channels. `rng == nullptr`
/// disables noise.
SensorReading sense(const AgentState& state, const WorldMap& map, Rng* rng,
                    double noise_std = kSensorNoiseStd);

/// Binary feature vector F = F_e ++ F_a.
struct FeatureVector {
  std::vector<std::uint8_t> env;
  int x_bin = 0;
  int y_bin = 0;
  int x_bins = 30;
  int y_bins = 30;

  int dim() const { return static_cast<int>(env.size()) + x_bins + y_bins; }
  /// Indices of the 1-valued elements in the full vector.
  std::vector<int> active() const;
  std::vector<std::uint8_t> dense() const;
  std::vector<double> env_as_double() const { return {env.begin(), env.end()}; }
};

FeatureVector extract_features(const SensorReading& reading, const AgentState& state,
                               const WorldMap& map);

/// Noiseless F_e at a pose.
std::vector<std::uint8_t> noiseless_env(const AgentState& state, const WorldMap& map);

}  // namespace clusterq
