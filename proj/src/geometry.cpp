#include "clusterq/geometry.hpp"

#include <algorithm>

namespace clusterq {

std::optional<std::pair<double, double>> clip_ray(const Rect& r, Vec2 origin, Vec2 dir,
                                                  double t_max) {
  double t0 = 0.0;
  double t1 = t_max;
  const double p[4] = {-dir.x, dir.x, -dir.y, dir.y};
  const double q[4] = {origin.x - r.x0, r.x1 - origin.x, origin.y - r.y0, r.y1 - origin.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0) {
      t0 = std::max(t0, t);
    } else {
      t1 = std::min(t1, t);
    }
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

bool segment_intersects(const Rect& r, Vec2 a, Vec2 b) {
  return clip_ray(r, a, b - a, 1.0).has_value();
}

std::optional<double> ray_distance(const Rect& r, Vec2 origin, Vec2 dir, double max_range) {
  auto hit = clip_ray(r, origin, dir, max_range);
  if (!hit) return std::nullopt;
  return hit->first;
}

}  // namespace clusterq
