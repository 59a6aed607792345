#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "uavnfv/config.hpp"

namespace testing {

inline uavnfv::ScenarioConfig tiny_config(int uavs = 2, int users = 4) {
  uavnfv::ScenarioConfig c;
  c.num_uavs = uavs;
  c.num_users = users;
  c.area_side = 200.0;
  c.num_sc_backhaul = 2;
  c.num_sc_dl = 2;
  c.num_sc_ul = 2;
  c.num_service_slots = 4;
  c.slots_per_episode = 12;
  c.catalog.chain_length_max = 2;
  c.catalog.bit_rate_min = 50e3;
  c.catalog.bit_rate_max = 200e3;
  c.agent.hidden_layers = {16, 16};
  c.agent.batch_size = 8;
  c.agent.buffer_capacity = 1000;
  c.agent.episodes = 3;
  return c;
}

// Relative agreement; equal infinities and exact zeros count as a match.
inline bool rel_close(double a, double b, double tol) {
  if (a == b) return true;
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("uavnfv_test_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(UAVNFV_SOURCE_DIR) / rel;
}

}  // namespace testing
