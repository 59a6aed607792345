#pragma once

#include <string>
#include <vector>

#include "uavnfv/config.hpp"

namespace uavnfv {

struct SlotMetrics {
  int slot = 0;
  double sum_rate_dl = 0.0;   // bit/s
  double sum_rate_ul = 0.0;
  double tx_power = 0.0;      // W, DL + UL transmit power
  double op_power = 0.0;      // W, P_cr
  double ee = 0.0;            // bit/J
  double delay_pr = 0.0;      // s, summed over served services
  double delay_pd = 0.0;
  double delay_td = 0.0;
  double delay_mg = 0.0;
  double delay_total = 0.0;
  double reward = 0.0;
  int rejects = 0;
  int violations = 0;
  int requests = 0;           // new requests considered this slot
  int services = 0;           // services evaluated this slot
  double mean_delay = 0.0;    // per evaluated service, each capped at the slot length
};

struct EpisodeKpis {
  double rrr = 0.0;
  double avg_delay = 0.0;
  double avg_ee = 0.0;
  double avg_reward = 0.0;
  int requests = 0;
  int rejects = 0;
};

// P_cr = sum_u P_d * travelled_u + U * P_c * slot.
double operation_power(const std::vector<double>& travelled, const ScenarioConfig& cfg);

double energy_efficiency(double sum_rate, double tx_power, double op_power);

// w_ee * ee / ee_ref - w_delay * delay / delay_ref - penalty * violations.
double reward(double ee, double delay, int violations, const ScenarioConfig& cfg);

EpisodeKpis episode_kpis(const std::vector<SlotMetrics>& slots);

std::string metrics_csv_header();
std::string metrics_csv_row(int episode, const SlotMetrics& m);

// Shortest decimal form that reads back to the same double.
std::string fmt_double(double v);

}  // namespace uavnfv
