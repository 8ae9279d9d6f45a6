#pragma once

#include <cmath>
#include <optional>

namespace clusterq {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  bool valid() const { return x0 <= x1 && y0 <= y1; }
  bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool strictly_contains(Vec2 p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Parameter interval [t_enter, t_exit] of `origin + t * dir`, t in [0, t_max],
/// that lies inside the closed rectangle (Liang-Barsky clipping).
std::optional<std::pair<double, double>> clip_ray(const Rect& r, Vec2 origin, Vec2 dir,
                                                  double t_max);

/// True if the closed segment a-b touches the closed rectangle.
bool segment_intersects(const Rect& r, Vec2 a, Vec2 b);

/// Distance along the unit direction `dir` from `origin` to the first point of
/// `r`, if that point lies within `max_range`.
std::optional<double> ray_distance(const Rect& r, Vec2 origin, Vec2 dir, double max_range);

}  // namespace clusterq
