#pragma once

#include <array>
#include <utility>
#include <vector>

#include "uavnfv/config.hpp"
#include "uavnfv/rng.hpp"

namespace uavnfv {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  bool operator==(const Vec3&) const = default;
};

double distance(const Vec3& a, const Vec3& b);
double horizontal_distance(const Vec3& a, const Vec3& b);

using Move = std::array<double, 2>;  // (dx, dy) in metres

struct MoveOutcome {
  std::vector<Vec3> poses;
  std::vector<bool> clamped;                      // requested norm exceeded W_max * slot
  std::vector<double> travelled;                  // metres actually flown
  std::vector<std::pair<int, int>> violations;    // pairs whose move hit D_min, i < j
};

// Moves UAVs one after another. Each step is clamped to the per-slot reach and to
// the area, then cut short where it would enter another UAV's D_min disc.
MoveOutcome apply_uav_moves(const std::vector<Vec3>& poses, const std::vector<Move>& deltas,
                            const ScenarioConfig& cfg);

// Random walk with speed ~ U[0, V_max] and heading ~ U[0, 2pi), reflected at the edges.
std::vector<Vec3> step_users(const std::vector<Vec3>& poses, const ScenarioConfig& cfg, Rng& rng);

// UAVs on a centred grid at the configured altitude.
std::vector<Vec3> initial_uav_poses(const ScenarioConfig& cfg);
std::vector<Vec3> initial_user_poses(const ScenarioConfig& cfg, Rng& rng);

}  // namespace uavnfv
