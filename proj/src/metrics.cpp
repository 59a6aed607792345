#include "uavnfv/metrics.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace uavnfv {

double operation_power(const std::vector<double>& travelled, const ScenarioConfig& cfg) {
  double moving = 0.0;
  for (double d : travelled) moving += cfg.move_power * d;
  return moving + static_cast<double>(cfg.num_uavs) * cfg.static_power * cfg.slot_duration;
}

double energy_efficiency(double sum_rate, double tx_power, double op_power) {
  const double denom = tx_power + op_power;
  if (sum_rate == 0.0) return 0.0;
  return sum_rate / denom;
}

double reward(double ee, double delay, int violations, const ScenarioConfig& cfg) {
  return cfg.weight_ee * ee / cfg.effective_ee_ref() -
         cfg.weight_delay * delay / cfg.effective_delay_ref() -
         cfg.violation_penalty * violations;
}

EpisodeKpis episode_kpis(const std::vector<SlotMetrics>& slots) {
  EpisodeKpis k;
  double delay_sum = 0.0;
  int delay_slots = 0;
  for (const auto& m : slots) {
    k.requests += m.requests;
    k.rejects += m.rejects;
    k.avg_ee += m.ee;
    k.avg_reward += m.reward;
    if (m.services > 0) {
      delay_sum += m.mean_delay;
      ++delay_slots;
    }
  }
  if (!slots.empty()) {
    k.avg_ee /= static_cast<double>(slots.size());
    k.avg_reward /= static_cast<double>(slots.size());
  }
  k.avg_delay = delay_slots > 0 ? delay_sum / delay_slots : 0.0;
  k.rrr = k.requests > 0 ? static_cast<double>(k.rejects) / k.requests : 0.0;
  return k;
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string metrics_csv_header() {
  return "episode,slot,sum_rate_dl,sum_rate_ul,tx_power,op_power,ee,delay_pr,delay_pd,delay_td,"
         "delay_mg,delay_total,reward,rejects,violations,requests,services,mean_delay";
}

std::string metrics_csv_row(int episode, const SlotMetrics& m) {
  std::ostringstream os;
  os << episode << ',' << m.slot << ',' << fmt_double(m.sum_rate_dl) << ','
     << fmt_double(m.sum_rate_ul) << ',' << fmt_double(m.tx_power) << ','
     << fmt_double(m.op_power) << ',' << fmt_double(m.ee) << ',' << fmt_double(m.delay_pr) << ','
     << fmt_double(m.delay_pd) << ',' << fmt_double(m.delay_td) << ',' << fmt_double(m.delay_mg)
     << ',' << fmt_double(m.delay_total) << ',' << fmt_double(m.reward) << ',' << m.rejects << ','
     << m.violations << ',' << m.requests << ',' << m.services << ',' << fmt_double(m.mean_delay);
  return os.str();
}

}  // namespace uavnfv
