#include "uavnfv/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace uavnfv {

ActionLayout::ActionLayout(const ScenarioConfig& cfg)
    : U(cfg.num_uavs), K(cfg.num_users), I(cfg.num_service_slots), J(cfg.max_chain_length()) {
  cont_dim = 3 * U + 2 * K;
  obs_dim = 3 * U + 2 * K + I * J * K + U + U * (U - 1);
  for (int k = 0; k < K; ++k) heads.push_back({HeadSpec::Dl, k, 0, U * cfg.num_sc_dl});
  for (int k = 0; k < K; ++k) heads.push_back({HeadSpec::Ul, k, 0, U * cfg.num_sc_ul});
  for (int i = 0; i < I; ++i)
    for (int j = 0; j < J; ++j) heads.push_back({HeadSpec::Host, i, j, U});
  for (int i = 0; i < I; ++i) heads.push_back({HeadSpec::Relay, i, 0, U + 1});
  if (cfg.sigma_in_action && U > 1)
    for (int v = 0; v < cfg.num_sc_backhaul; ++v)
      heads.push_back({HeadSpec::Sigma, v, 0, U * (U - 1) + 1});
}

int ActionLayout::total_categories() const {
  int n = 0;
  for (const auto& h : heads) n += h.size;
  return n;
}

int ActionLayout::sigma_head(int v) const {
  const int idx = 2 * K + I * J + I + v;
  return idx < disc_dim() ? idx : -1;
}

int ActionLayout::obs_link(int u, int v) const {
  return obs_cpu(0) + U + u * (U - 1) + (v < u ? v : v - 1);
}

std::pair<int, int> ActionLayout::pair_of(int c) const {
  const int p = c - 1;
  const int u = p / (U - 1), r = p % (U - 1);
  return {u, r < u ? r : r + 1};
}

namespace {

double frac(double a) { return (std::clamp(a, -1.0, 1.0) + 1.0) / 2.0; }

double to_unit(double v, double lo, double hi) {
  return std::clamp(2.0 * (v - lo) / (hi - lo) - 1.0, -1.0, 1.0);
}

int clamp_category(int c, int size, int& repairs) {
  if (c >= 0 && c < size) return c;
  ++repairs;
  return std::clamp(c, 0, size - 1);
}

}  // namespace

AgentPartition::AgentPartition(const ScenarioConfig& cfg, const ActionLayout& lay) {
  const bool multi = cfg.agent.mode == AgentMode::Multi;
  agents = multi ? lay.U : 1;
  users_per_agent = cfg.agent.users_per_agent > 0 ? cfg.agent.users_per_agent
                                                  : (lay.K + lay.U - 1) / lay.U;
  user_owner.resize(static_cast<std::size_t>(lay.K));
  for (int k = 0; k < lay.K; ++k)
    user_owner[static_cast<std::size_t>(k)] = multi ? std::min(k / users_per_agent, lay.U - 1) : 0;
  auto owner = [&](int k) { return user_owner[static_cast<std::size_t>(k)]; };

  cont.assign(static_cast<std::size_t>(agents), {});
  heads.assign(static_cast<std::size_t>(agents), {});
  obs_mask.assign(static_cast<std::size_t>(agents),
                  std::vector<std::uint8_t>(static_cast<std::size_t>(lay.obs_dim), 1));
  for (int u = 0; u < lay.U; ++u) {
    auto& c = cont[static_cast<std::size_t>(multi ? u : 0)];
    c.push_back(lay.move_dist(u));
    c.push_back(lay.move_heading(u));
    c.push_back(lay.backhaul_level(u));
  }
  for (int k = 0; k < lay.K; ++k) cont[static_cast<std::size_t>(owner(k))].push_back(lay.dl_level(k));
  for (int k = 0; k < lay.K; ++k) cont[static_cast<std::size_t>(owner(k))].push_back(lay.ul_level(k));
  for (auto& c : cont) std::sort(c.begin(), c.end());

  for (int h = 0; h < lay.disc_dim(); ++h) {
    const auto& spec = lay.heads[static_cast<std::size_t>(h)];
    int who = 0;
    switch (spec.kind) {
      case HeadSpec::Dl:
      case HeadSpec::Ul: who = owner(spec.a); break;
      case HeadSpec::Host:
      case HeadSpec::Relay: who = owner(spec.a % lay.K); break;
      case HeadSpec::Sigma: who = multi ? spec.a % lay.U : 0; break;
    }
    heads[static_cast<std::size_t>(who)].push_back(h);
  }

  if (!multi) return;
  for (int a = 0; a < agents; ++a) {
    auto& m = obs_mask[static_cast<std::size_t>(a)];
    for (int k = 0; k < lay.K; ++k) {
      if (owner(k) == a) continue;
      m[static_cast<std::size_t>(lay.obs_user(k))] = 0;
      m[static_cast<std::size_t>(lay.obs_user(k) + 1)] = 0;
      for (int i = 0; i < lay.I; ++i)
        for (int j = 0; j < lay.J; ++j) m[static_cast<std::size_t>(lay.obs_request(i, j, k))] = 0;
    }
  }
}

std::vector<double> AgentPartition::view(const std::vector<double>& obs, int agent) const {
  std::vector<double> out = obs;
  const auto& m = obs_mask[static_cast<std::size_t>(agent)];
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!m[i]) out[i] = 0.0;
  return out;
}

Env::Env(const ScenarioConfig& cfg) : cfg_(cfg), layout_(cfg) {
  if (auto issues = validate_config(cfg); !issues.empty())
    throw ConfigError(issues.front().path + ": " + issues.front().message);
  reset(cfg.rng_seed);
}

std::vector<bool> Env::idle_users() const {
  std::vector<bool> idle(static_cast<std::size_t>(cfg_.num_users), true);
  for (int k = 0; k < cfg_.num_users; ++k)
    if (st_.slots[static_cast<std::size_t>(k % layout_.I)]) idle[static_cast<std::size_t>(k)] = false;
  for (const auto& s : st_.slots)
    if (s) idle[static_cast<std::size_t>(s->svc.source_user)] = false;
  return idle;
}

void Env::place_requests(std::vector<Service> fresh) {
  for (auto& s : fresh) {
    auto& slot = st_.slots[static_cast<std::size_t>(s.source_user % layout_.I)];
    if (slot) continue;
    ActiveService a;
    a.placement = Placement(s.chain_length(), cfg_.num_uavs);
    a.svc = std::move(s);
    slot = std::move(a);
  }
}

std::vector<double> Env::reset(std::uint64_t seed) {
  mobility_rng_ = Rng(derive_seed(seed, 1));
  Rng placement_rng(derive_seed(seed, 2));
  requests_.emplace(cfg_.catalog, cfg_.num_users, derive_seed(seed, 3));
  st_ = NetworkState{};
  st_.uavs = initial_uav_poses(cfg_);
  st_.users = initial_user_poses(cfg_, placement_rng);
  st_.gains = compute_gains(st_.uavs, st_.users, cfg_);
  st_.slots.assign(static_cast<std::size_t>(layout_.I), std::nullopt);
  const auto U = static_cast<std::size_t>(cfg_.num_uavs);
  st_.capacity.assign(U * U, 0.0);
  st_.link_load.assign(U * U, 0.0);
  st_.cpu_load.assign(U, 0.0);
  place_requests(requests_->initial_requests(idle_users()));
  return observe();
}

std::vector<double> Env::observe() const {
  const auto& L = layout_;
  std::vector<double> o(static_cast<std::size_t>(L.obs_dim), 0.0);
  const double A = cfg_.area_side;
  for (int u = 0; u < L.U; ++u) {
    const auto& p = st_.uavs[static_cast<std::size_t>(u)];
    o[static_cast<std::size_t>(3 * u)] = to_unit(p.x, 0.0, A);
    o[static_cast<std::size_t>(3 * u + 1)] = to_unit(p.y, 0.0, A);
    o[static_cast<std::size_t>(3 * u + 2)] = to_unit(p.z, 0.0, 2.0 * cfg_.uav_altitude);
  }
  for (int k = 0; k < L.K; ++k) {
    const auto& q = st_.users[static_cast<std::size_t>(k)];
    o[static_cast<std::size_t>(L.obs_user(k))] = to_unit(q.x, 0.0, A);
    o[static_cast<std::size_t>(L.obs_user(k) + 1)] = to_unit(q.y, 0.0, A);
  }
  for (int i = 0; i < L.I; ++i) {
    const auto& slot = st_.slots[static_cast<std::size_t>(i)];
    if (!slot) continue;
    const auto& s = slot->svc;
    for (int j = 0; j < std::min(s.chain_length(), L.J); ++j) {
      o[static_cast<std::size_t>(L.obs_request(i, j, s.source_user))] =
          std::min(1.0, s.bit_rate / cfg_.catalog.bit_rate_max);
      const int h = slot->admitted ? slot->placement.host(j) : -1;
      o[static_cast<std::size_t>(L.obs_request(i, j, s.dest_user))] =
          h >= 0 ? -static_cast<double>(h + 1) / L.U : -0.5 / L.U;
    }
  }
  for (int u = 0; u < L.U; ++u) {
    const double c = cfg_.cpu_of(u);
    o[static_cast<std::size_t>(L.obs_cpu(u))] =
        to_unit(c - st_.cpu_load[static_cast<std::size_t>(u)], 0.0, c);
  }
  const double link_ref = 4.0 * cfg_.bw_backhaul;
  for (int u = 0; u < L.U; ++u)
    for (int v = 0; v < L.U; ++v) {
      if (u == v) continue;
      const auto p = static_cast<std::size_t>(u * L.U + v);
      const double residual = std::max(0.0, st_.capacity[p] - st_.link_load[p]);
      o[static_cast<std::size_t>(L.obs_link(u, v))] = to_unit(residual, 0.0, link_ref);
    }
  return o;
}

std::vector<std::uint8_t> Env::active_heads() const {
  const auto& L = layout_;
  std::vector<std::uint8_t> on(static_cast<std::size_t>(L.disc_dim()), 0);
  for (int i = 0; i < L.I; ++i) {
    const auto& slot = st_.slots[static_cast<std::size_t>(i)];
    if (!slot) continue;
    on[static_cast<std::size_t>(L.dl_head(slot->svc.dest_user))] = 1;
    on[static_cast<std::size_t>(L.ul_head(slot->svc.source_user))] = 1;
    on[static_cast<std::size_t>(L.relay_head(i))] = 1;
    if (!slot->admitted || cfg_.migration_enabled)
      for (int j = 0; j < std::min(slot->svc.chain_length(), L.J); ++j)
        on[static_cast<std::size_t>(L.host_head(i, j))] = 1;
  }
  for (int v = 0; v < cfg_.num_sc_backhaul; ++v)
    if (const int h = L.sigma_head(v); h >= 0) on[static_cast<std::size_t>(h)] = 1;
  return on;
}

HybridAction Env::canonical(const HybridAction& a) const {
  HybridAction c = a;
  for (auto& x : c.cont) x = std::clamp(x, -1.0, 1.0);
  const auto on = active_heads();
  for (std::size_t h = 0; h < c.disc.size(); ++h) {
    if (!on[h]) c.disc[h] = 0;
    else c.disc[h] = std::clamp(c.disc[h], 0, layout_.heads[h].size - 1);
  }
  return c;
}

DecodedAction Env::decode_action(const HybridAction& a) const {
  const auto& L = layout_;
  if (static_cast<int>(a.cont.size()) != L.cont_dim || static_cast<int>(a.disc.size()) != L.disc_dim())
    throw std::invalid_argument("action does not match the layout");
  const int U = L.U, K = L.K;
  DecodedAction d;
  d.radio = RadioAllocation(cfg_);
  auto& r = d.radio;
  const auto on = active_heads();
  auto cat = [&](int head) {
    return clamp_category(a.disc[static_cast<std::size_t>(head)],
                          L.heads[static_cast<std::size_t>(head)].size, d.repairs);
  };

  for (int u = 0; u < U; ++u) {
    const double dist = frac(a.cont[static_cast<std::size_t>(L.move_dist(u))]) * cfg_.max_step();
    const double heading = frac(a.cont[static_cast<std::size_t>(L.move_heading(u))]) * 2.0 *
                           std::numbers::pi;
    d.moves.push_back({dist * std::cos(heading), dist * std::sin(heading)});
  }

  std::vector<int> dl_uav(static_cast<std::size_t>(K), -1), ul_uav(static_cast<std::size_t>(K), -1);
  for (int k = 0; k < K; ++k) {
    if (on[static_cast<std::size_t>(L.dl_head(k))]) {
      const int c = cat(L.dl_head(k));
      const int u = c / r.L, l = c % r.L;
      r.dl_assoc[r.dl(u, k, l)] = 1;
      r.dl_power[r.dl(u, k, l)] =
          frac(a.cont[static_cast<std::size_t>(L.dl_level(k))]) * cfg_.max_power_uav;
      dl_uav[static_cast<std::size_t>(k)] = u;
    }
    if (on[static_cast<std::size_t>(L.ul_head(k))]) {
      const int c = cat(L.ul_head(k));
      const int u = c / r.E, e = c % r.E;
      r.ul_assoc[r.ul(u, k, e)] = 1;
      r.ul_power[r.ul(u, k, e)] =
          frac(a.cont[static_cast<std::size_t>(L.ul_level(k))]) * cfg_.max_power_user;
      ul_uav[static_cast<std::size_t>(k)] = u;
    }
  }
  // DL budget: scale every user of an over-committed UAV down by the same factor.
  for (int u = 0; u < U; ++u) {
    double total = 0.0;
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < r.L; ++l) total += r.dl_power[r.dl(u, k, l)];
    if (total > cfg_.max_power_uav) {
      const double f = cfg_.max_power_uav / total;
      for (int k = 0; k < K; ++k)
        for (int l = 0; l < r.L; ++l) r.dl_power[r.dl(u, k, l)] *= f;
      ++d.repairs;
    }
  }

  d.hosts.assign(static_cast<std::size_t>(L.I), {});
  d.relay.assign(static_cast<std::size_t>(L.I), -1);
  d.ingress.assign(static_cast<std::size_t>(L.I), -1);
  d.egress.assign(static_cast<std::size_t>(L.I), -1);
  for (int i = 0; i < L.I; ++i) {
    const auto& slot = st_.slots[static_cast<std::size_t>(i)];
    if (!slot) continue;
    const auto& s = slot->svc;
    auto& hosts = d.hosts[static_cast<std::size_t>(i)];
    if (slot->admitted && !cfg_.migration_enabled) {
      hosts = slot->placement.hosts();
    } else {
      for (int j = 0; j < s.chain_length(); ++j) hosts.push_back(cat(L.host_head(i, std::min(j, L.J - 1))));
    }
    const int rc = cat(L.relay_head(i));
    d.relay[static_cast<std::size_t>(i)] = rc == 0 ? -1 : rc - 1;
    d.ingress[static_cast<std::size_t>(i)] = ul_uav[static_cast<std::size_t>(s.source_user)];
    d.egress[static_cast<std::size_t>(i)] = dl_uav[static_cast<std::size_t>(s.dest_user)];
  }

  if (U > 1) {
    if (cfg_.sigma_in_action) {
      for (int v = 0; v < r.V; ++v) {
        const int c = cat(L.sigma_head(v));
        if (c == 0) continue;
        const auto [u, w] = L.pair_of(c);
        r.bh_assign[r.bh(u, w, v)] = 1;
      }
    } else {
      // Subcarriers go round-robin to the hops the decoded routes will need.
      std::vector<std::pair<int, int>> need;
      for (int i = 0; i < L.I; ++i) {
        if (d.hosts[static_cast<std::size_t>(i)].empty()) continue;
        std::vector<int> way;
        auto add = [&](int u) {
          if (u >= 0 && (way.empty() || way.back() != u)) way.push_back(u);
        };
        add(d.ingress[static_cast<std::size_t>(i)]);
        for (int h : d.hosts[static_cast<std::size_t>(i)]) add(h);
        add(d.egress[static_cast<std::size_t>(i)]);
        for (std::size_t w = 0; w + 1 < way.size(); ++w) {
          const std::pair<int, int> p{way[w], way[w + 1]};
          if (std::find(need.begin(), need.end(), p) == need.end()) need.push_back(p);
        }
      }
      if (!need.empty())
        for (int v = 0; v < r.V; ++v) {
          const auto [u, w] = need[static_cast<std::size_t>(v) % need.size()];
          r.bh_assign[r.bh(u, w, v)] = 1;
        }
    }
    if (cfg_.strict_c9) {
      bool kept = false;
      for (std::size_t idx = 0; idx < r.bh_assign.size(); ++idx) {
        if (!r.bh_assign[idx]) continue;
        if (kept) {
          r.bh_assign[idx] = 0;
          ++d.repairs;
        }
        kept = true;
      }
    }
    for (int u = 0; u < U; ++u) {
      int n = 0;
      for (int w = 0; w < U; ++w)
        for (int v = 0; v < r.V; ++v) n += r.bh_assign[r.bh(u, w, v)];
      if (n == 0) continue;
      const double each =
          frac(a.cont[static_cast<std::size_t>(L.backhaul_level(u))]) * cfg_.max_power_backhaul / n;
      for (int w = 0; w < U; ++w)
        for (int v = 0; v < r.V; ++v)
          if (r.bh_assign[r.bh(u, w, v)]) r.bh_power[r.bh(u, w, v)] = each;
    }
  }
  return d;
}

StepResult Env::step(const HybridAction& a) {
  if (done()) throw std::logic_error("step called on a finished episode");
  const auto& L = layout_;
  const int U = L.U;
  const DecodedAction dec = decode_action(a);

  const MoveOutcome mv = apply_uav_moves(st_.uavs, dec.moves, cfg_);
  st_.uavs = mv.poses;
  st_.users = step_users(st_.users, cfg_, mobility_rng_);
  st_.gains = compute_gains(st_.uavs, st_.users, cfg_);

  StepResult res;
  const RateReport rates = evaluate_radio(dec.radio, st_.gains, cfg_);
  res.invariants_ok = c4_violations(dec.radio).empty() && c7_violations(dec.radio).empty() &&
                      c9_violations(dec.radio, cfg_.strict_c9).empty() &&
                      check_power_budgets(dec.radio, cfg_).ok() &&
                      orphan_power_count(dec.radio) == 0;

  // Admission: ongoing services first (oldest first), then this slot's new requests.
  std::vector<int> order;
  for (int i = 0; i < L.I; ++i)
    if (st_.slots[static_cast<std::size_t>(i)]) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    const auto& sx = *st_.slots[static_cast<std::size_t>(x)];
    const auto& sy = *st_.slots[static_cast<std::size_t>(y)];
    if (sx.admitted != sy.admitted) return sx.admitted;
    if (sx.svc.start_slot != sy.svc.start_slot) return sx.svc.start_slot < sy.svc.start_slot;
    return sx.svc.id < sy.svc.id;
  });

  SlotMetrics m;
  m.slot = st_.t;
  std::vector<double> cpu(static_cast<std::size_t>(U), 0.0);
  std::vector<double> link(static_cast<std::size_t>(U * U), 0.0);
  std::vector<double> dl_demand(static_cast<std::size_t>(L.K), 0.0);
  double capped_sum = 0.0;
  int failures = 0;

  for (int i : order) {
    auto& slot = *st_.slots[static_cast<std::size_t>(i)];
    const Service& s = slot.svc;
    const bool is_new = !slot.admitted;
    Placement pl = build_placement(s, dec.hosts[static_cast<std::size_t>(i)],
                                   dec.ingress[static_cast<std::size_t>(i)],
                                   dec.egress[static_cast<std::size_t>(i)],
                                   dec.relay[static_cast<std::size_t>(i)], rates.bh_total, U);
    const auto mg = is_new ? std::vector<Migration>{} : migrations_between(slot.placement, pl);
    const DelayBreakdown delay = service_delay(pl, s, st_.uavs, rates.bh_total, mg, cfg_);

    std::string reason;
    if (!validate_placement(pl, s).empty()) reason = "placement";
    if (reason.empty() &&
        rates.user_ul_rate[static_cast<std::size_t>(s.source_user)] < s.bit_rate)
      reason = "uplink rate";
    if (reason.empty() && rates.user_dl_rate[static_cast<std::size_t>(s.dest_user)] <
                              dl_demand[static_cast<std::size_t>(s.dest_user)] + s.bit_rate)
      reason = "downlink rate";
    if (reason.empty()) {
      std::vector<double> c2 = cpu;
      for (const auto& row : pl.x)
        for (int u = 0; u < U; ++u)
          if (row[static_cast<std::size_t>(u)])
            c2[static_cast<std::size_t>(u)] += cfg_.cycles_per_bit * s.bit_rate;
      for (int u = 0; u < U; ++u)
        if (c2[static_cast<std::size_t>(u)] > cfg_.cpu_of(u)) reason = "cpu";
      std::vector<double> l2 = link;
      for (const auto& e : pl.edges)
        if (e.from.kind == Node::Uav && e.to.kind == Node::Uav)
          l2[static_cast<std::size_t>(e.from.idx * U + e.to.idx)] += s.bit_rate;
      for (std::size_t p = 0; p < l2.size() && reason.empty(); ++p)
        if (l2[p] > link[p] && l2[p] > rates.bh_total[p]) reason = "link";
      if (reason.empty() && !check_migration(mg, slot.placement, pl, rates.bh_total).empty())
        reason = "migration";
      if (reason.empty()) {
        const auto verdict = check_service_delay(delay, s, !mg.empty(), cfg_.slot_duration);
        if (!verdict.ok) reason = verdict.reason;
      }
      if (reason.empty()) {
        cpu = std::move(c2);
        link = std::move(l2);
      }
    }

    PlacementRecord rec;
    rec.service_id = s.id;
    rec.slot_index = i;
    rec.hosts = pl.hosts();
    rec.edges = pl.edges;
    rec.migrations = mg;
    rec.is_new = is_new;
    rec.served = reason.empty();
    rec.reason = reason;
    res.placements.push_back(std::move(rec));

    ++m.services;
    if (is_new) ++m.requests;
    if (reason.empty()) {
      dl_demand[static_cast<std::size_t>(s.dest_user)] += s.bit_rate;
      m.delay_pr += delay.pr;
      m.delay_pd += delay.pd;
      m.delay_td += delay.td;
      m.delay_mg += delay.mg;
      capped_sum += std::min(delay.total(), cfg_.slot_duration);
      slot.placement = std::move(pl);
      slot.admitted = true;
    } else {
      ++m.rejects;
      ++failures;
      capped_sum += cfg_.slot_duration;
      st_.slots[static_cast<std::size_t>(i)].reset();
    }
  }

  for (double r : rates.user_dl_rate) m.sum_rate_dl += r;
  for (double r : rates.user_ul_rate) m.sum_rate_ul += r;
  for (std::size_t i = 0; i < dec.radio.dl_power.size(); ++i)
    if (dec.radio.dl_assoc[i]) m.tx_power += dec.radio.dl_power[i];
  for (std::size_t i = 0; i < dec.radio.ul_power.size(); ++i)
    if (dec.radio.ul_assoc[i]) m.tx_power += dec.radio.ul_power[i];
  m.op_power = operation_power(mv.travelled, cfg_);
  m.ee = energy_efficiency(m.sum_rate_dl + m.sum_rate_ul, m.tx_power, m.op_power);
  m.delay_total = m.delay_pr + m.delay_pd + m.delay_td + m.delay_mg;
  m.mean_delay = m.services > 0 ? capped_sum / m.services : 0.0;
  m.violations = static_cast<int>(mv.violations.size()) + rates.sic_failures + failures;
  m.reward = reward(m.ee, m.mean_delay, m.violations, cfg_);

  st_.capacity = rates.bh_total;
  st_.link_load = link;
  st_.cpu_load = cpu;
  for (auto& slot : st_.slots)
    if (slot && slot->svc.end_slot() <= st_.t + 1) slot.reset();
  ++st_.t;
  if (!done()) place_requests(requests_->generate_requests(st_.t - 1, idle_users()));

  res.metrics = m;
  res.reward = m.reward;
  res.separation_violations = mv.violations;
  res.done = done();
  res.obs = observe();
  return res;
}

}  // namespace uavnfv
