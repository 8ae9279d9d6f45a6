#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "clusterq/world.hpp"

using namespace clusterq;

namespace {

WorldMap empty_map() {
  WorldMap m;
  m.light_region = {0, 0, 1, 1};
  m.rough_region = {0, 29, 1, 30};
  m.target_center = {29, 29};
  m.target_radius = 0.5;
  return m;
}

}  // namespace

TEST_CASE("step: hold, straight and clamped moves") {
  const WorldMap m = empty_map();
  auto r = step({15, 15, 0}, Action::Hold, m);
  CHECK(r.state == AgentState{15, 15, 0});
  CHECK_FALSE(r.bumped);

  r = step({15, 15, 0}, Action::E, m);
  CHECK(r.state.x == doctest::Approx(16.6));
  CHECK(r.state.y == doctest::Approx(15.0));
  CHECK_FALSE(r.bumped);

  r = step({0.5, 15, 0}, Action::W, m);
  CHECK(r.state.x == 0.0);
  CHECK(r.state.y == 15.0);
  CHECK_FALSE(r.bumped);
}

TEST_CASE("step: diagonal moves cover 1.6 units along the diagonal") {
  const WorldMap m = empty_map();
  const auto r = step({10, 10, 0}, Action::NE, m);
  CHECK(std::hypot(r.state.x - 10, r.state.y - 10) == doctest::Approx(1.6));
  CHECK(r.state.x - 10 == doctest::Approx(1.6 / std::sqrt(2.0)));
  CHECK(r.state.heading == doctest::Approx(std::atan2(1.0, 1.0)));
}

TEST_CASE("step: blocked move keeps position and flags a bump") {
  WorldMap m = empty_map();
  m.obstacles = {{16, 10, 17, 20}};
  const auto r = step({15, 15, 0}, Action::E, m);
  CHECK(r.bumped);
  CHECK(r.state.x == 15.0);
  CHECK(r.state.y == 15.0);
}

TEST_CASE("sense: empty surroundings, membership and a wall ahead") {
  WorldMap m = empty_map();
  auto s = sense({15, 15, 0}, m, nullptr);
  for (double d : s.range) CHECK(std::isinf(d));
  CHECK(s.light == 0.0);
  CHECK(s.roughness == 0.0);
  CHECK(s.in_target == 0.0);

  m.light_region = {10, 10, 20, 20};
  CHECK(sense({15, 15, 0}, m, nullptr).light == 1.0);

  // Wall face at x = 15.4, agent facing east: centre ray hits at 0.4. The
  // side rays at +-72 deg would need 0.4 / cos(72 deg) = 1.29 > 1 units.
  m.obstacles = {{15.4, 0, 16, 30}};
  s = sense({15, 15, 0}, m, nullptr);
  CHECK(s.range[1] == doctest::Approx(0.4));
  CHECK(std::isinf(s.range[0]));
  CHECK(std::isinf(s.range[2]));

  // A wall 0.3 units away reaches the side rays: 0.3 / cos(72 deg).
  m.obstacles = {{15.3, 0, 16, 30}};
  s = sense({15, 15, 0}, m, nullptr);
  const double side = 0.3 / std::cos(72.0 * M_PI / 180.0);
  CHECK(s.range[0] == doctest::Approx(side));
  CHECK(s.range[2] == doctest::Approx(side));
}

TEST_CASE("extract_features: thresholding and bins") {
  const WorldMap m = empty_map();
  SensorReading r;
  r.light = 0.02;
  r.roughness = 0.01;
  r.in_target = 0.03;
  auto f = extract_features(r, {3.7, 28.2, 0}, m);
  CHECK(f.env == std::vector<std::uint8_t>{0, 0, 0, 0});
  CHECK(f.x_bin == 3);
  CHECK(f.y_bin == 28);
  CHECK(f.dim() == 64);
  const auto d = f.dense();
  CHECK(d[4 + 3] == 1);
  CHECK(d[4 + 30 + 28] == 1);

  r.range[1] = 0.4;
  CHECK(extract_features(r, {3.7, 28.2, 0}, m).env[kObstacle] == 1);
  r.light = 0.97;
  CHECK(extract_features(r, {3.7, 28.2, 0}, m).env[kLight] == 1);
}

TEST_CASE("extract_features: position 30 falls in the last bin") {
  const WorldMap m = empty_map();
  const auto f = extract_features(SensorReading{}, {30.0, 30.0, 0}, m);
  CHECK(f.x_bin == 29);
  CHECK(f.y_bin == 29);
}

TEST_CASE("random walk: one-hot bins, never inside an obstacle, noiseless sensing is pure") {
  const WorldMap m = canonical_map();
  Rng rng(7);
  std::uniform_int_distribution<int> act(0, kNumActions - 1);
  AgentState s{5, 5, 0};
  for (int t = 0; t < 20000; ++t) {
    s = step(s, action_at(act(rng)), m).state;
    for (const auto& ob : m.obstacles) REQUIRE_FALSE(ob.strictly_contains(s.position()));
    const auto f = extract_features(sense(s, m, &rng), s, m);
    const auto d = f.dense();
    int xs = 0, ys = 0;
    for (int i = 0; i < 30; ++i) {
      xs += d[static_cast<std::size_t>(4 + i)];
      ys += d[static_cast<std::size_t>(34 + i)];
    }
    REQUIRE(xs == 1);
    REQUIRE(ys == 1);
    if (t % 500 == 0) REQUIRE(noiseless_env(s, m) == noiseless_env(s, m));
  }
}

TEST_CASE("sensor noise has standard deviation 0.05") {
  WorldMap m = empty_map();
  m.light_region = {10, 10, 20, 20};
  m.obstacles = {{15.5, 0, 16, 30}};
  Rng rng(3);
  const int n = 100000;
  double s_light = 0, ss_light = 0, s_rough = 0, ss_rough = 0, s_range = 0, ss_range = 0;
  for (int i = 0; i < n; ++i) {
    const auto r = sense({15, 15, 0}, m, &rng);
    s_light += r.light;
    ss_light += r.light * r.light;
    s_rough += r.roughness;
    ss_rough += r.roughness * r.roughness;
    s_range += r.range[1];
    ss_range += r.range[1] * r.range[1];
  }
  auto sd = [n](double s, double ss) { return std::sqrt((ss - s * s / n) / (n - 1)); };
  CHECK(sd(s_light, ss_light) == doctest::Approx(0.05).epsilon(0.1));
  CHECK(sd(s_rough, ss_rough) == doctest::Approx(0.05).epsilon(0.1));
  CHECK(sd(s_range, ss_range) == doctest::Approx(0.05).epsilon(0.1));
  CHECK(s_light / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("canonical map is valid and keeps regions inside bounds") {
  const WorldMap m = canonical_map();
  CHECK_NOTHROW(m.validate());
  CHECK(m.env_dim() == 4);
  CHECK(m.feature_dim() == 64);
  WorldMap bad = m;
  bad.obstacles.push_back({25, 25, 31, 26});
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = m;
  bad.target_radius = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
