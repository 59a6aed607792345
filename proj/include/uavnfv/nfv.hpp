#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "uavnfv/config.hpp"
#include "uavnfv/kinematics.hpp"
#include "uavnfv/scenario.hpp"

namespace uavnfv {

inline constexpr double kInfiniteDelay = std::numeric_limits<double>::infinity();
inline constexpr int kRelayEdge = -1;  // edge label for pure forwarding

struct Node {
  enum Kind : std::uint8_t { User, Uav } kind = Uav;
  int idx = 0;
  bool operator==(const Node&) const = default;
  static Node user(int k) { return {User, k}; }
  static Node uav(int u) { return {Uav, u}; }
};

// chi^{f_ij}_{un} when function >= 0 (traffic leaves u after running function
// `function` there), Y^{O_i}_{un} when function == kRelayEdge.
struct Edge {
  Node from;
  Node to;
  int function = kRelayEdge;
  bool operator==(const Edge&) const = default;
};

// Placement of one service: x^{f_ij}_u and the labelled route.
struct Placement {
  int num_uavs = 0;
  std::vector<std::vector<std::uint8_t>> x;  // [function][uav]
  std::vector<Edge> edges;

  Placement() = default;
  Placement(int chain_length, int uavs);

  int host(int j) const;                // -1 unless exactly one host
  std::vector<int> hosts() const;
  std::vector<std::uint8_t> relays() const;  // y_u, derived from Y out-edges
  bool hosts_any(int u) const;
};

struct Violation {
  std::string constraint;  // "C10", "21b", "21c", "C11", "route", "node"
  int function = -1;
  int uav = -1;
  std::string detail;
};

std::vector<Violation> validate_placement(const Placement& pl, const Service& s);

// Hop between consecutive waypoints: direct when the pair has backhaul capacity,
// otherwise through `relay` if it connects both ends, otherwise direct anyway
// (the transmission delay then comes out infinite).
Placement build_placement(const Service& s, const std::vector<int>& hosts, int ingress,
                          int egress, int relay, const std::vector<double>& capacity,
                          int num_uavs);

// Per-function processing delay b c_o / C_u at the hosting UAV.
std::vector<double> processing_delay(const Placement& pl, const Service& s,
                                     const ScenarioConfig& cfg);
// Per-edge propagation delay; access edges and edges out of non-active nodes are 0.
std::vector<double> propagation_delay(const Placement& pl, const std::vector<Vec3>& uavs);
// Per-edge transmission delay b / w_uu'; infinite on an active hop without capacity.
std::vector<double> transmission_delay(const Placement& pl, const Service& s,
                                       const std::vector<double>& capacity);

struct Migration {
  int function = 0;
  int from = 0;
  int to = 0;
};

// m^{f_ij}_{u u'} = x_{u}(t-1) x_{u'}(t), listed for u != u'.
std::vector<Migration> migrations_between(const Placement& prev, const Placement& now);
// Full product tensor [function][from][to], including from == to.
std::vector<std::vector<std::vector<std::uint8_t>>> migration_tensor(const Placement& prev,
                                                                     const Placement& now);

double migration_payload(const Service& s, const ScenarioConfig& cfg);
std::vector<double> migration_delay(const std::vector<Migration>& mg, const Service& s,
                                    const std::vector<double>& capacity, int num_uavs,
                                    const ScenarioConfig& cfg);

// Verifies the product relation and that each migration has a direct link.
std::vector<Violation> check_migration(const std::vector<Migration>& mg, const Placement& prev,
                                       const Placement& now, const std::vector<double>& capacity);

struct DelayBreakdown {
  double pr = 0.0, pd = 0.0, td = 0.0, mg = 0.0;
  double total() const { return pr + pd + td + mg; }
};

DelayBreakdown service_delay(const Placement& pl, const Service& s, const std::vector<Vec3>& uavs,
                             const std::vector<double>& capacity,
                             const std::vector<Migration>& mg, const ScenarioConfig& cfg);

struct DelayVerdict {
  bool ok = true;
  std::string reason;
};

DelayVerdict check_service_delay(const DelayBreakdown& d, const Service& s, bool migrating,
                                 double slot_duration);

struct CapacityReport {
  std::vector<double> cpu_load;        // cycles/s per UAV
  std::vector<double> cpu_overshoot;
  std::vector<double> link_load;       // bit/s per ordered pair [u * U + v]
  std::vector<double> link_overshoot;
  bool ok() const;
};

CapacityReport check_capacities(const std::vector<const Placement*>& pls,
                                const std::vector<const Service*>& services,
                                const std::vector<double>& capacity, const ScenarioConfig& cfg);

}  // namespace uavnfv
