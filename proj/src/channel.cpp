#include "uavnfv/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace uavnfv {

double fspl_gain(double d, double freq, double kappa, double factor) {
  if (!(d > 0.0)) throw std::invalid_argument("fspl_gain: distance must be positive");
  if (!(freq > 0.0)) throw std::invalid_argument("fspl_gain: frequency must be positive");
  return factor * std::pow(d * 4.0 * std::numbers::pi * freq / kSpeedOfLight, -kappa);
}

double los_probability(double altitude, double horizontal, double beta1, double beta2) {
  const double theta = horizontal > 0.0
                           ? 180.0 / std::numbers::pi * std::atan(altitude / horizontal)
                           : 90.0;
  return 1.0 / (1.0 + beta1 * std::exp(-beta2 * (theta - beta1)));
}

double expected_gain(double p_los, double gain_los, double gain_nlos) {
  return p_los * gain_los + (1.0 - p_los) * gain_nlos;
}

double uav_uav_gain(double d, double freq, double kappa) { return fspl_gain(d, freq, kappa); }

LinkGain ground_link(const Vec3& uav, const Vec3& user, const ScenarioConfig& cfg) {
  const double d = distance(uav, user);
  const double los = fspl_gain(d, cfg.carrier_freq, cfg.pathloss_exp);
  const double p =
      los_probability(uav.z - user.z, horizontal_distance(uav, user), cfg.env_beta1, cfg.env_beta2);
  return {expected_gain(p, los, cfg.nlos_extra_loss * los), p};
}

GainTable compute_gains(const std::vector<Vec3>& uavs, const std::vector<Vec3>& users,
                        const ScenarioConfig& cfg) {
  GainTable t;
  t.num_uavs = static_cast<int>(uavs.size());
  t.num_users = static_cast<int>(users.size());
  t.ground.reserve(uavs.size() * users.size());
  for (const auto& u : uavs)
    for (const auto& k : users) t.ground.push_back(ground_link(u, k, cfg).gain);
  t.air.assign(uavs.size() * uavs.size(), 0.0);
  for (std::size_t u = 0; u < uavs.size(); ++u)
    for (std::size_t v = 0; v < uavs.size(); ++v)
      if (u != v) {
        // Coincident UAVs only occur under soft separation; floor the distance at 1 m.
        const double d = std::max(distance(uavs[u], uavs[v]), 1.0);
        t.air[u * uavs.size() + v] = uav_uav_gain(d, cfg.carrier_freq, cfg.pathloss_exp);
      }
  return t;
}

}  // namespace uavnfv
