#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavnfv/channel.hpp"
#include "uavnfv/config.hpp"

namespace uavnfv {

// Boolean assignments and powers for one slot. Flat arrays indexed by the helpers.
struct RadioAllocation {
  int U = 0, K = 0, L = 0, E = 0, V = 0;
  std::vector<std::uint8_t> dl_assoc;  // g^l_uk
  std::vector<double> dl_power;        // p^l_uk
  std::vector<std::uint8_t> ul_assoc;  // g~^e_ku
  std::vector<double> ul_power;        // p~^e_ku
  std::vector<std::uint8_t> bh_assign; // sigma^v_uu'
  std::vector<double> bh_power;        // p^v_uu'

  RadioAllocation() = default;
  RadioAllocation(int uavs, int users, int dl_sc, int ul_sc, int bh_sc);
  explicit RadioAllocation(const ScenarioConfig& cfg)
      : RadioAllocation(cfg.num_uavs, cfg.num_users, cfg.num_sc_dl, cfg.num_sc_ul,
                        cfg.num_sc_backhaul) {}

  std::size_t dl(int u, int k, int l) const { return static_cast<std::size_t>((u * K + k) * L + l); }
  std::size_t ul(int u, int k, int e) const { return static_cast<std::size_t>((u * K + k) * E + e); }
  std::size_t bh(int u, int v, int s) const { return static_cast<std::size_t>((u * U + v) * V + s); }
};

struct SicCheck {
  int uav = 0;
  int subcarrier = 0;
  int stronger = 0;  // receiver that must decode the weaker user's message
  int weaker = 0;
  double sinr_at_stronger = 0.0;
  double sinr_at_weaker = 0.0;
  bool ok = true;
};

struct RateReport {
  std::vector<double> dl_sinr, dl_rate;  // same layout as dl_assoc
  std::vector<double> ul_sinr, ul_rate;  // same layout as ul_assoc
  std::vector<double> bh_rate;           // same layout as bh_assign
  std::vector<double> bh_total;          // [u * U + v]
  std::vector<double> user_dl_rate;      // per user, summed over UAVs and subcarriers
  std::vector<double> user_ul_rate;
  std::vector<SicCheck> sic;
  int sic_failures = 0;

  double link_capacity(int u, int v, int U) const {
    return bh_total[static_cast<std::size_t>(u * U + v)];
  }
};

struct PowerCheck {
  std::vector<double> uav_overshoot;       // DL budget, per UAV
  std::vector<double> user_overshoot;      // UL budget, per user
  std::vector<double> backhaul_overshoot;  // backhaul budget, per UAV
  bool ok() const;
};

double cinr(int u, int k, const GainTable& gains, double noise);

// Users of UAV u on DL subcarrier l, strongest CINR first, ties by user id.
std::vector<int> cinr_order(int u, int l, const GainTable& gains, const RadioAllocation& a,
                            const ScenarioConfig& cfg);
// Users of UAV u on UL subcarrier e, strongest received gain first, ties by user id.
std::vector<int> gain_order(int u, int e, const GainTable& gains, const RadioAllocation& a);

// Fills the DL part of `out`. Throws std::invalid_argument naming the user if C4 fails.
void dl_sinr_rates(const RadioAllocation& a, const GainTable& gains, const ScenarioConfig& cfg,
                   RateReport& out);
void ul_sinr_rates(const RadioAllocation& a, const GainTable& gains, const ScenarioConfig& cfg,
                   RateReport& out);
void backhaul_rates(const RadioAllocation& a, const GainTable& gains, const ScenarioConfig& cfg,
                    RateReport& out);
std::vector<SicCheck> check_sic(const RadioAllocation& a, const GainTable& gains,
                                const ScenarioConfig& cfg);

RateReport evaluate_radio(const RadioAllocation& a, const GainTable& gains,
                          const ScenarioConfig& cfg);

PowerCheck check_power_budgets(const RadioAllocation& a, const ScenarioConfig& cfg);

// Users served by more than one UAV (C4 for DL, C7 for UL).
std::vector<int> c4_violations(const RadioAllocation& a);
std::vector<int> c7_violations(const RadioAllocation& a);
// Backhaul subcarriers used by more than one ordered pair; under strict reading,
// any allocation with more than one assignment in total reports every used subcarrier.
std::vector<int> c9_violations(const RadioAllocation& a, bool strict);
// Positive power without the matching assignment bit.
int orphan_power_count(const RadioAllocation& a);

}  // namespace uavnfv
