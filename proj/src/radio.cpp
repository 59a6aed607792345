#include "uavnfv/radio.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uavnfv {

RadioAllocation::RadioAllocation(int uavs, int users, int dl_sc, int ul_sc, int bh_sc)
    : U(uavs), K(users), L(dl_sc), E(ul_sc), V(bh_sc) {
  const auto n_dl = static_cast<std::size_t>(U * K * L);
  const auto n_ul = static_cast<std::size_t>(U * K * E);
  const auto n_bh = static_cast<std::size_t>(U * U * V);
  dl_assoc.assign(n_dl, 0);
  dl_power.assign(n_dl, 0.0);
  ul_assoc.assign(n_ul, 0);
  ul_power.assign(n_ul, 0.0);
  bh_assign.assign(n_bh, 0);
  bh_power.assign(n_bh, 0.0);
}

bool PowerCheck::ok() const {
  auto clean = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x <= 0.0; });
  };
  return clean(uav_overshoot) && clean(user_overshoot) && clean(backhaul_overshoot);
}

double cinr(int u, int k, const GainTable& gains, double noise) {
  double other = 0.0;
  for (int v = 0; v < gains.num_uavs; ++v)
    if (v != u) other += gains.g(v, k);
  return gains.g(u, k) / (other + noise);
}

std::vector<int> cinr_order(int u, int l, const GainTable& gains, const RadioAllocation& a,
                            const ScenarioConfig& cfg) {
  const double noise = cfg.sc_bw_dl() * cfg.noise_psd;
  std::vector<std::pair<double, int>> keyed;
  for (int k = 0; k < a.K; ++k)
    if (a.dl_assoc[a.dl(u, k, l)]) keyed.emplace_back(cinr(u, k, gains, noise), k);
  std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  std::vector<int> out;
  for (const auto& [c, k] : keyed) out.push_back(k);
  return out;
}

std::vector<int> gain_order(int u, int e, const GainTable& gains, const RadioAllocation& a) {
  std::vector<std::pair<double, int>> keyed;
  for (int k = 0; k < a.K; ++k)
    if (a.ul_assoc[a.ul(u, k, e)]) keyed.emplace_back(gains.g(u, k), k);
  std::sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  std::vector<int> out;
  for (const auto& [g, k] : keyed) out.push_back(k);
  return out;
}

std::vector<int> c4_violations(const RadioAllocation& a) {
  std::vector<int> bad;
  for (int k = 0; k < a.K; ++k) {
    int serving = 0;
    for (int u = 0; u < a.U; ++u) {
      bool any = false;
      for (int l = 0; l < a.L; ++l) any = any || a.dl_assoc[a.dl(u, k, l)];
      serving += any;
    }
    if (serving > 1) bad.push_back(k);
  }
  return bad;
}

std::vector<int> c7_violations(const RadioAllocation& a) {
  std::vector<int> bad;
  for (int k = 0; k < a.K; ++k) {
    int serving = 0;
    for (int u = 0; u < a.U; ++u) {
      bool any = false;
      for (int e = 0; e < a.E; ++e) any = any || a.ul_assoc[a.ul(u, k, e)];
      serving += any;
    }
    if (serving > 1) bad.push_back(k);
  }
  return bad;
}

std::vector<int> c9_violations(const RadioAllocation& a, bool strict) {
  std::vector<int> per_sc(static_cast<std::size_t>(a.V), 0);
  int total = 0;
  for (int u = 0; u < a.U; ++u)
    for (int v = 0; v < a.U; ++v)
      for (int s = 0; s < a.V; ++s)
        if (a.bh_assign[a.bh(u, v, s)]) {
          ++per_sc[static_cast<std::size_t>(s)];
          ++total;
        }
  std::vector<int> bad;
  for (int s = 0; s < a.V; ++s) {
    const int n = per_sc[static_cast<std::size_t>(s)];
    if (n > 1 || (strict && total > 1 && n > 0)) bad.push_back(s);
  }
  return bad;
}

int orphan_power_count(const RadioAllocation& a) {
  int n = 0;
  for (std::size_t i = 0; i < a.dl_power.size(); ++i) n += a.dl_power[i] > 0.0 && !a.dl_assoc[i];
  for (std::size_t i = 0; i < a.ul_power.size(); ++i) n += a.ul_power[i] > 0.0 && !a.ul_assoc[i];
  for (std::size_t i = 0; i < a.bh_power.size(); ++i)
    n += a.bh_power[i] > 0.0 && !a.bh_assign[i];
  return n;
}

namespace {

void ensure_sized(const RadioAllocation& a, RateReport& out) {
  out.dl_sinr.assign(a.dl_assoc.size(), 0.0);
  out.dl_rate.assign(a.dl_assoc.size(), 0.0);
  out.user_dl_rate.assign(static_cast<std::size_t>(a.K), 0.0);
}

// Total power UAV u radiates on DL subcarrier l.
double dl_radiated(const RadioAllocation& a, int u, int l) {
  double p = 0.0;
  for (int k = 0; k < a.K; ++k)
    if (a.dl_assoc[a.dl(u, k, l)]) p += a.dl_power[a.dl(u, k, l)];
  return p;
}

// Interference at user k from every UAV other than u on DL subcarrier l.
double dl_inter(const RadioAllocation& a, const GainTable& gains, int u, int k, int l) {
  double i = 0.0;
  for (int v = 0; v < a.U; ++v)
    if (v != u) i += gains.g(v, k) * dl_radiated(a, v, l);
  return i;
}

}  // namespace

void dl_sinr_rates(const RadioAllocation& a, const GainTable& gains, const ScenarioConfig& cfg,
                   RateReport& out) {
  if (auto bad = c4_violations(a); !bad.empty())
    throw std::invalid_argument("C4 violated: user " + std::to_string(bad.front()) +
                                " associated with several UAVs in the downlink");
  ensure_sized(a, out);
  const double b1 = cfg.sc_bw_dl();
  const double noise = b1 * cfg.noise_psd;
  for (int u = 0; u < a.U; ++u)
    for (int l = 0; l < a.L; ++l) {
      const auto order = cinr_order(u, l, gains, a, cfg);
      double stronger_power = 0.0;
      for (int k : order) {
        const std::size_t idx = a.dl(u, k, l);
        const double h = gains.g(u, k);
        const double sinr = h * a.dl_power[idx] /
                            (h * stronger_power + dl_inter(a, gains, u, k, l) + noise);
        out.dl_sinr[idx] = sinr;
        out.dl_rate[idx] = b1 * std::log2(1.0 + sinr);
        out.user_dl_rate[static_cast<std::size_t>(k)] += out.dl_rate[idx];
        stronger_power += a.dl_power[idx];
      }
    }
}

std::vector<SicCheck> check_sic(const RadioAllocation& a, const GainTable& gains,
                                const ScenarioConfig& cfg) {
  std::vector<SicCheck> out;
  const double noise = cfg.sc_bw_dl() * cfg.noise_psd;
  for (int u = 0; u < a.U; ++u)
    for (int l = 0; l < a.L; ++l) {
      const auto order = cinr_order(u, l, gains, a, cfg);
      for (std::size_t w = 1; w < order.size(); ++w) {
        const int k = order[w];
        const double pk = a.dl_power[a.dl(u, k, l)];
        double ahead = 0.0;  // stronger users are still interference while decoding k
        for (std::size_t s = 0; s < w; ++s) ahead += a.dl_power[a.dl(u, order[s], l)];
        const double hk = gains.g(u, k);
        const double own = hk * pk / (hk * ahead + dl_inter(a, gains, u, k, l) + noise);
        for (std::size_t s = 0; s < w; ++s) {
          const int i = order[s];
          const double hi = gains.g(u, i);
          const double at_i = hi * pk / (hi * ahead + dl_inter(a, gains, u, i, l) + noise);
          out.push_back({u, l, i, k, at_i, own, at_i >= own});
        }
      }
    }
  return out;
}

void ul_sinr_rates(const RadioAllocation& a, const GainTable& gains, const ScenarioConfig& cfg,
                   RateReport& out) {
  if (auto bad = c7_violations(a); !bad.empty())
    throw std::invalid_argument("C7 violated: user " + std::to_string(bad.front()) +
                                " associated with several UAVs in the uplink");
  out.ul_sinr.assign(a.ul_assoc.size(), 0.0);
  out.ul_rate.assign(a.ul_assoc.size(), 0.0);
  out.user_ul_rate.assign(static_cast<std::size_t>(a.K), 0.0);
  const double b1 = cfg.sc_bw_ul();
  const double noise = b1 * cfg.noise_psd;
  for (int u = 0; u < a.U; ++u)
    for (int e = 0; e < a.E; ++e) {
      double inter = 0.0;
      for (int v = 0; v < a.U; ++v) {
        if (v == u) continue;
        for (int k = 0; k < a.K; ++k)
          if (a.ul_assoc[a.ul(v, k, e)]) inter += gains.g(u, k) * a.ul_power[a.ul(v, k, e)];
      }
      const auto order = gain_order(u, e, gains, a);
      for (std::size_t pos = 0; pos < order.size(); ++pos) {
        const int k = order[pos];
        double residual = 0.0;  // weaker users not yet cancelled
        for (std::size_t w = pos + 1; w < order.size(); ++w)
          residual += gains.g(u, order[w]) * a.ul_power[a.ul(u, order[w], e)];
        const std::size_t idx = a.ul(u, k, e);
        const double sinr = gains.g(u, k) * a.ul_power[idx] / (residual + inter + noise);
        out.ul_sinr[idx] = sinr;
        out.ul_rate[idx] = b1 * std::log2(1.0 + sinr);
        out.user_ul_rate[static_cast<std::size_t>(k)] += out.ul_rate[idx];
      }
    }
}

void backhaul_rates(const RadioAllocation& a, const GainTable& gains, const ScenarioConfig& cfg,
                    RateReport& out) {
  if (auto bad = c9_violations(a, cfg.strict_c9); !bad.empty())
    throw std::invalid_argument("C9 violated on backhaul subcarrier " +
                                std::to_string(bad.front()));
  const double b1 = cfg.sc_bw_backhaul();
  const double noise = b1 * cfg.noise_psd;
  out.bh_rate.assign(a.bh_assign.size(), 0.0);
  out.bh_total.assign(static_cast<std::size_t>(a.U * a.U), 0.0);
  for (int u = 0; u < a.U; ++u)
    for (int v = 0; v < a.U; ++v)
      for (int s = 0; s < a.V; ++s) {
        const std::size_t idx = a.bh(u, v, s);
        if (!a.bh_assign[idx] || u == v) continue;
        out.bh_rate[idx] = b1 * std::log2(1.0 + a.bh_power[idx] * gains.h(u, v) / noise);
        out.bh_total[static_cast<std::size_t>(u * a.U + v)] += out.bh_rate[idx];
      }
}

RateReport evaluate_radio(const RadioAllocation& a, const GainTable& gains,
                          const ScenarioConfig& cfg) {
  RateReport r;
  dl_sinr_rates(a, gains, cfg, r);
  ul_sinr_rates(a, gains, cfg, r);
  backhaul_rates(a, gains, cfg, r);
  r.sic = check_sic(a, gains, cfg);
  r.sic_failures = static_cast<int>(
      std::count_if(r.sic.begin(), r.sic.end(), [](const SicCheck& c) { return !c.ok; }));
  return r;
}

PowerCheck check_power_budgets(const RadioAllocation& a, const ScenarioConfig& cfg) {
  // Relative slack absorbs rounding left by renormalisation.
  auto over = [](double total, double budget) {
    return total > budget * (1.0 + 1e-12) ? total - budget : 0.0;
  };
  PowerCheck pc;
  for (int u = 0; u < a.U; ++u) {
    double dl = 0.0, bh = 0.0;
    for (int k = 0; k < a.K; ++k)
      for (int l = 0; l < a.L; ++l)
        if (a.dl_assoc[a.dl(u, k, l)]) dl += a.dl_power[a.dl(u, k, l)];
    for (int v = 0; v < a.U; ++v)
      for (int s = 0; s < a.V; ++s)
        if (a.bh_assign[a.bh(u, v, s)]) bh += a.bh_power[a.bh(u, v, s)];
    pc.uav_overshoot.push_back(over(dl, cfg.max_power_uav));
    pc.backhaul_overshoot.push_back(over(bh, cfg.max_power_backhaul));
  }
  for (int k = 0; k < a.K; ++k) {
    double ul = 0.0;
    for (int u = 0; u < a.U; ++u)
      for (int e = 0; e < a.E; ++e)
        if (a.ul_assoc[a.ul(u, k, e)]) ul += a.ul_power[a.ul(u, k, e)];
    pc.user_overshoot.push_back(over(ul, cfg.max_power_user));
  }
  return pc;
}

}  // namespace uavnfv
