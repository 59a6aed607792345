#pragma once

#include <vector>

#include "uavnfv/config.hpp"
#include "uavnfv/kinematics.hpp"

namespace uavnfv {

inline constexpr double kSpeedOfLight = 3.0e8;  // m/s

// (4 pi f d / c)^-kappa, times `factor` (xi for the NLoS branch). Throws on d <= 0.
double fspl_gain(double d, double freq, double kappa, double factor = 1.0);

// Elevation-angle LoS probability; horizontal distance 0 means 90 degrees.
double los_probability(double altitude, double horizontal, double beta1, double beta2);

double expected_gain(double p_los, double gain_los, double gain_nlos);

// UAV-UAV links are LoS only.
double uav_uav_gain(double d, double freq, double kappa);

struct LinkGain {
  double gain = 0.0;
  double p_los = 1.0;
};

LinkGain ground_link(const Vec3& uav, const Vec3& user, const ScenarioConfig& cfg);

// Per-slot gains. The air-ground gain is used for both directions and every
// subcarrier, since all subcarriers share the carrier frequency.
struct GainTable {
  int num_uavs = 0;
  int num_users = 0;
  std::vector<double> ground;  // [u * K + k]
  std::vector<double> air;     // [u * U + v], 0 on the diagonal

  double g(int u, int k) const { return ground[static_cast<std::size_t>(u * num_users + k)]; }
  double h(int u, int v) const { return air[static_cast<std::size_t>(u * num_uavs + v)]; }
};

GainTable compute_gains(const std::vector<Vec3>& uavs, const std::vector<Vec3>& users,
                        const ScenarioConfig& cfg);

}  // namespace uavnfv
