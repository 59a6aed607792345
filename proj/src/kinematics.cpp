#include "uavnfv/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uavnfv {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double horizontal_distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

namespace {

constexpr double kRimTolerance = 1e-9;

// Smallest s in [0, 1) at which p + s*d enters the disc of radius r around q,
// or 1 if it never does. Starting inside the disc never blocks; starting on its
// rim (where an earlier block leaves a UAV, up to rounding) does when moving in.
double entry_fraction(const Vec3& p, const Move& d, const Vec3& q, double r) {
  const double ox = p.x - q.x, oy = p.y - q.y;
  const double a = d[0] * d[0] + d[1] * d[1];
  const double b = 2.0 * (ox * d[0] + oy * d[1]);
  const double c = ox * ox + oy * oy - r * r;
  if (a == 0.0 || c < -kRimTolerance * r * r || b >= 0.0) return 1.0;
  const double disc = b * b - 4.0 * a * c;
  if (disc <= 0.0) return 1.0;
  const double s = (-b - std::sqrt(disc)) / (2.0 * a);
  return s < 1.0 ? std::max(s, 0.0) : 1.0;
}

double reflect(double v, double side) {
  if (v < 0.0) v = -v;
  if (v > side) v = 2.0 * side - v;
  return std::clamp(v, 0.0, side);
}

}  // namespace

MoveOutcome apply_uav_moves(const std::vector<Vec3>& poses, const std::vector<Move>& deltas,
                            const ScenarioConfig& cfg) {
  const std::size_t n = poses.size();
  MoveOutcome out;
  out.poses = poses;
  out.clamped.assign(n, false);
  out.travelled.assign(n, 0.0);
  const double reach = cfg.max_step();
  const double dmin = cfg.min_uav_separation;
  std::vector<std::vector<bool>> hit(n, std::vector<bool>(n, false));

  for (std::size_t u = 0; u < n; ++u) {
    Move d = deltas[u];
    const double norm = std::hypot(d[0], d[1]);
    if (norm > reach) {
      d[0] *= reach / norm;
      d[1] *= reach / norm;
      out.clamped[u] = true;
    }
    const Vec3 p = out.poses[u];
    d[0] = std::clamp(p.x + d[0], 0.0, cfg.area_side) - p.x;
    d[1] = std::clamp(p.y + d[1], 0.0, cfg.area_side) - p.y;

    double s = 1.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (v == u) continue;
      const double sv = entry_fraction(p, d, out.poses[v], dmin);
      if (sv < 1.0) {
        hit[std::min(u, v)][std::max(u, v)] = true;
        s = std::min(s, sv);
      }
    }
    if (s < 1.0 && cfg.hard_separation) s = 0.0;
    out.poses[u].x = p.x + s * d[0];
    out.poses[u].y = p.y + s * d[1];
    out.travelled[u] = s * std::hypot(d[0], d[1]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (hit[i][j] || horizontal_distance(out.poses[i], out.poses[j]) < dmin)
        out.violations.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return out;
}

std::vector<Vec3> step_users(const std::vector<Vec3>& poses, const ScenarioConfig& cfg,
                             Rng& rng) {
  std::vector<Vec3> out = poses;
  for (auto& q : out) {
    const double speed = rng.uniform(0.0, cfg.user_speed_max);
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double step = speed * cfg.slot_duration;
    q.x = reflect(q.x + step * std::cos(heading), cfg.area_side);
    q.y = reflect(q.y + step * std::sin(heading), cfg.area_side);
  }
  return out;
}

std::vector<Vec3> initial_uav_poses(const ScenarioConfig& cfg) {
  const int n = cfg.num_uavs;
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  std::vector<Vec3> out;
  for (int u = 0; u < n; ++u) {
    const int r = u / cols, c = u % cols;
    out.push_back({cfg.area_side * (c + 0.5) / cols, cfg.area_side * (r + 0.5) / rows,
                   cfg.uav_altitude});
  }
  return out;
}

std::vector<Vec3> initial_user_poses(const ScenarioConfig& cfg, Rng& rng) {
  std::vector<Vec3> out;
  for (int k = 0; k < cfg.num_users; ++k)
    out.push_back({rng.uniform(0.0, cfg.area_side), rng.uniform(0.0, cfg.area_side), 0.0});
  return out;
}

}  // namespace uavnfv
