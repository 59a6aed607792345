#include "uavnfv/nfv.hpp"

#include <algorithm>
#include <functional>

#include "uavnfv/channel.hpp"

namespace uavnfv {

Placement::Placement(int chain_length, int uavs)
    : num_uavs(uavs),
      x(static_cast<std::size_t>(chain_length),
        std::vector<std::uint8_t>(static_cast<std::size_t>(uavs), 0)) {}

int Placement::host(int j) const {
  int found = -1;
  for (int u = 0; u < num_uavs; ++u) {
    if (!x[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)]) continue;
    if (found >= 0) return -1;
    found = u;
  }
  return found;
}

std::vector<int> Placement::hosts() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < x.size(); ++j) out.push_back(host(static_cast<int>(j)));
  return out;
}

std::vector<std::uint8_t> Placement::relays() const {
  std::vector<std::uint8_t> y(static_cast<std::size_t>(num_uavs), 0);
  for (const auto& e : edges)
    if (e.function == kRelayEdge && e.from.kind == Node::Uav && e.from.idx >= 0 &&
        e.from.idx < num_uavs)
      y[static_cast<std::size_t>(e.from.idx)] = 1;
  return y;
}

bool Placement::hosts_any(int u) const {
  for (const auto& row : x)
    if (row[static_cast<std::size_t>(u)]) return true;
  return false;
}

namespace {

bool valid_node(const Node& n, int num_uavs) {
  return n.kind == Node::Uav ? (n.idx >= 0 && n.idx < num_uavs) : n.idx >= 0;
}

// Depth-first search for an ordering of all edges into one walk from the source
// to the destination that runs the chain in order.
bool find_route(const Placement& pl, const Service& s) {
  const auto& edges = pl.edges;
  const int J = s.chain_length();
  std::vector<bool> used(edges.size(), false);
  std::function<bool(Node, int, std::size_t)> walk = [&](Node at, int stage,
                                                         std::size_t n_used) -> bool {
    if (at == Node::user(s.dest_user)) return n_used == edges.size() && stage == J;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (used[i] || !(edges[i].from == at)) continue;
      const Edge& e = edges[i];
      int next = stage;
      if (at.kind == Node::User) {
        if (e.function != kRelayEdge) continue;
      } else if (e.function != kRelayEdge) {
        if (e.function < stage || e.function >= J) continue;
        bool hosted = true;
        for (int f = stage; f <= e.function; ++f)
          hosted = hosted && pl.x[static_cast<std::size_t>(f)][static_cast<std::size_t>(at.idx)];
        if (!hosted) continue;
        next = e.function + 1;
      }
      used[i] = true;
      if (walk(e.to, next, n_used + 1)) return true;
      used[i] = false;
    }
    return false;
  };
  return walk(Node::user(s.source_user), 0, 0);
}

}  // namespace

std::vector<Violation> validate_placement(const Placement& pl, const Service& s) {
  std::vector<Violation> out;
  const int J = s.chain_length();
  const int U = pl.num_uavs;
  if (static_cast<int>(pl.x.size()) != J) {
    out.push_back({"C10", -1, -1, "placement covers a different chain length"});
    return out;
  }
  for (int j = 0; j < J; ++j) {
    int n = 0;
    for (int u = 0; u < U; ++u) n += pl.x[static_cast<std::size_t>(j)][static_cast<std::size_t>(u)];
    if (n != 1)
      out.push_back({"C10", j, -1, "function hosted at " + std::to_string(n) + " UAVs"});
  }

  bool structural = true;
  for (std::size_t i = 0; i < pl.edges.size(); ++i) {
    const Edge& e = pl.edges[i];
    auto bad = [&](const std::string& why) {
      out.push_back({"node", e.function, e.from.kind == Node::Uav ? e.from.idx : -1, why});
      structural = false;
    };
    if (!valid_node(e.from, U) || !valid_node(e.to, U)) {
      bad("edge endpoint out of range");
      continue;
    }
    if (e.from == e.to) bad("self-loop");
    if (e.from.kind == Node::User && e.from.idx != s.source_user) bad("edge leaves a non-source user");
    if (e.to.kind == Node::User && e.to.idx != s.dest_user) bad("edge enters a non-destination user");
    if (e.from.kind == Node::User && e.to.kind == Node::User) bad("user-to-user edge");
    if (e.function < kRelayEdge || e.function >= J) bad("function label out of range");
    if (e.from.kind == Node::User && e.function != kRelayEdge) bad("function edge leaves a user");
    for (std::size_t k = 0; k < i; ++k)
      if (pl.edges[k].from == e.from && pl.edges[k].to == e.to) {
        out.push_back({"21c", e.function, e.from.kind == Node::Uav ? e.from.idx : -1,
                       "link used more than once"});
        structural = false;
      }
    if (e.from.kind == Node::Uav && e.function >= 0 && e.function < J &&
        !pl.x[static_cast<std::size_t>(e.function)][static_cast<std::size_t>(e.from.idx)]) {
      out.push_back({"label", e.function, e.from.idx, "function edge leaves a UAV not hosting it"});
      structural = false;
    }
  }

  const auto y = pl.relays();
  for (int u = 0; u < U; ++u)
    if (y[static_cast<std::size_t>(u)] && pl.hosts_any(u))
      out.push_back({"21b", -1, u, "UAV both hosts a function and relays"});

  // Net outflow per node.
  auto balance = [&](const Node& n) {
    int b = 0;
    for (const auto& e : pl.edges) {
      if (e.from == n) ++b;
      if (e.to == n) --b;
    }
    return b;
  };
  const Node src = Node::user(s.source_user), dst = Node::user(s.dest_user);
  if (balance(src) != 1) out.push_back({"C11", -1, -1, "source outflow is not 1"});
  if (balance(dst) != -1) out.push_back({"C11", -1, -1, "destination inflow is not 1"});
  for (int u = 0; u < U; ++u)
    if (balance(Node::uav(u)) != 0) out.push_back({"C11", -1, u, "flow not conserved"});

  if (structural && out.empty() && !find_route(pl, s))
    out.push_back({"route", -1, -1, "no walk visits the chain in order"});
  return out;
}

Placement build_placement(const Service& s, const std::vector<int>& hosts, int ingress,
                          int egress, int relay, const std::vector<double>& capacity,
                          int num_uavs) {
  const int J = s.chain_length();
  Placement pl(J, num_uavs);
  for (int j = 0; j < J; ++j) {
    const int h = hosts[static_cast<std::size_t>(j)];
    if (h >= 0 && h < num_uavs) pl.x[static_cast<std::size_t>(j)][static_cast<std::size_t>(h)] = 1;
  }
  struct Visit {
    int uav;
    int last_function;  // kRelayEdge when nothing runs here
  };
  std::vector<Visit> visits;
  for (int j = 0; j < J; ++j) {
    const int h = hosts[static_cast<std::size_t>(j)];
    if (!visits.empty() && visits.back().uav == h)
      visits.back().last_function = j;
    else
      visits.push_back({h, j});
  }
  if (ingress >= 0 && (visits.empty() || visits.front().uav != ingress))
    visits.insert(visits.begin(), {ingress, kRelayEdge});
  if (egress >= 0 && visits.back().uav != egress) visits.push_back({egress, kRelayEdge});

  auto cap = [&](int a, int b) {
    if (a < 0 || b < 0 || a >= num_uavs || b >= num_uavs) return 0.0;
    return capacity[static_cast<std::size_t>(a * num_uavs + b)];
  };
  if (ingress >= 0) pl.edges.push_back({Node::user(s.source_user), Node::uav(visits.front().uav), kRelayEdge});
  for (std::size_t i = 0; i + 1 < visits.size(); ++i) {
    const int a = visits[i].uav, b = visits[i + 1].uav;
    const int label = visits[i].last_function;
    const bool via = cap(a, b) <= 0.0 && relay >= 0 && relay < num_uavs && relay != a &&
                     relay != b && cap(a, relay) > 0.0 && cap(relay, b) > 0.0;
    if (via) {
      pl.edges.push_back({Node::uav(a), Node::uav(relay), label});
      pl.edges.push_back({Node::uav(relay), Node::uav(b), kRelayEdge});
    } else {
      pl.edges.push_back({Node::uav(a), Node::uav(b), label});
    }
  }
  if (egress >= 0)
    pl.edges.push_back({Node::uav(visits.back().uav), Node::user(s.dest_user),
                        visits.back().last_function});
  return pl;
}

namespace {

// (x + y) gate of a UAV-UAV edge: the tail either runs the labelled function or relays.
double hop_gate(const Placement& pl, const Edge& e, const std::vector<std::uint8_t>& y) {
  if (e.from.kind != Node::Uav || e.to.kind != Node::Uav) return 0.0;
  const auto u = static_cast<std::size_t>(e.from.idx);
  if (e.function == kRelayEdge) return y[u];
  return pl.x[static_cast<std::size_t>(e.function)][u];
}

}  // namespace

std::vector<double> processing_delay(const Placement& pl, const Service& s,
                                     const ScenarioConfig& cfg) {
  std::vector<double> out(pl.x.size(), 0.0);
  for (std::size_t j = 0; j < pl.x.size(); ++j)
    for (int u = 0; u < pl.num_uavs; ++u)
      out[j] += pl.x[j][static_cast<std::size_t>(u)] * s.bit_rate * cfg.cycles_per_bit /
                cfg.cpu_of(u);
  return out;
}

std::vector<double> propagation_delay(const Placement& pl, const std::vector<Vec3>& uavs) {
  const auto y = pl.relays();
  std::vector<double> out;
  for (const auto& e : pl.edges) {
    const double g = hop_gate(pl, e, y);
    out.push_back(g == 0.0 ? 0.0
                           : g * distance(uavs[static_cast<std::size_t>(e.from.idx)],
                                          uavs[static_cast<std::size_t>(e.to.idx)]) /
                                 kSpeedOfLight);
  }
  return out;
}

std::vector<double> transmission_delay(const Placement& pl, const Service& s,
                                       const std::vector<double>& capacity) {
  const auto y = pl.relays();
  std::vector<double> out;
  for (const auto& e : pl.edges) {
    const double g = hop_gate(pl, e, y);
    if (g == 0.0) {
      out.push_back(0.0);
      continue;
    }
    const double w = capacity[static_cast<std::size_t>(e.from.idx * pl.num_uavs + e.to.idx)];
    out.push_back(w > 0.0 ? g * s.bit_rate / w : kInfiniteDelay);
  }
  return out;
}

std::vector<Migration> migrations_between(const Placement& prev, const Placement& now) {
  std::vector<Migration> out;
  const std::size_t J = std::min(prev.x.size(), now.x.size());
  for (std::size_t j = 0; j < J; ++j)
    for (int a = 0; a < prev.num_uavs; ++a)
      for (int b = 0; b < now.num_uavs; ++b)
        if (a != b && prev.x[j][static_cast<std::size_t>(a)] && now.x[j][static_cast<std::size_t>(b)])
          out.push_back({static_cast<int>(j), a, b});
  return out;
}

std::vector<std::vector<std::vector<std::uint8_t>>> migration_tensor(const Placement& prev,
                                                                     const Placement& now) {
  const std::size_t J = std::min(prev.x.size(), now.x.size());
  const auto U = static_cast<std::size_t>(now.num_uavs);
  std::vector<std::vector<std::vector<std::uint8_t>>> m(
      J, std::vector<std::vector<std::uint8_t>>(U, std::vector<std::uint8_t>(U, 0)));
  for (std::size_t j = 0; j < J; ++j)
    for (std::size_t a = 0; a < U; ++a)
      for (std::size_t b = 0; b < U; ++b) m[j][a][b] = prev.x[j][a] * now.x[j][b];
  return m;
}

double migration_payload(const Service& s, const ScenarioConfig& cfg) {
  return s.bit_rate * cfg.slot_duration * cfg.catalog.migration_payload_slots;
}

std::vector<double> migration_delay(const std::vector<Migration>& mg, const Service& s,
                                    const std::vector<double>& capacity, int num_uavs,
                                    const ScenarioConfig& cfg) {
  std::vector<double> out(static_cast<std::size_t>(s.chain_length()), 0.0);
  const double alpha = migration_payload(s, cfg);
  for (const auto& m : mg) {
    if (m.from == m.to) continue;
    const double w = capacity[static_cast<std::size_t>(m.from * num_uavs + m.to)];
    out[static_cast<std::size_t>(m.function)] += w > 0.0 ? alpha / w : kInfiniteDelay;
  }
  return out;
}

std::vector<Violation> check_migration(const std::vector<Migration>& mg, const Placement& prev,
                                       const Placement& now, const std::vector<double>& capacity) {
  std::vector<Violation> out;
  const auto expected = migrations_between(prev, now);
  for (const auto& m : mg) {
    const bool listed = std::any_of(expected.begin(), expected.end(), [&](const Migration& e) {
      return e.function == m.function && e.from == m.from && e.to == m.to;
    });
    if (!listed) out.push_back({"m", m.function, m.from, "migration bit without x(t-1) x(t)"});
  }
  for (const auto& e : expected) {
    const bool present = std::any_of(mg.begin(), mg.end(), [&](const Migration& m) {
      return e.function == m.function && e.from == m.from && e.to == m.to;
    });
    if (!present) out.push_back({"m", e.function, e.from, "moved function lacks a migration bit"});
  }
  for (const auto& m : mg)
    if (m.from != m.to && capacity[static_cast<std::size_t>(m.from * now.num_uavs + m.to)] <= 0.0)
      out.push_back({"C14", m.function, m.from, "no link to carry the migration"});
  return out;
}

DelayBreakdown service_delay(const Placement& pl, const Service& s, const std::vector<Vec3>& uavs,
                             const std::vector<double>& capacity,
                             const std::vector<Migration>& mg, const ScenarioConfig& cfg) {
  DelayBreakdown d;
  for (double v : processing_delay(pl, s, cfg)) d.pr += v;
  for (double v : propagation_delay(pl, uavs)) d.pd += v;
  for (double v : transmission_delay(pl, s, capacity)) d.td += v;
  for (double v : migration_delay(mg, s, capacity, pl.num_uavs, cfg)) d.mg += v;
  return d;
}

DelayVerdict check_service_delay(const DelayBreakdown& d, const Service& s, bool migrating,
                                 double slot_duration) {
  constexpr double tol = 1e-12;
  if (!(d.total() <= slot_duration + tol)) return {false, "delay exceeds the slot"};
  if (migrating) {
    if (!(d.total() <= s.delay_budget + tol)) return {false, "delay exceeds budget"};
  } else if (!(d.pr + d.pd + d.td <= s.reduced_budget + tol)) {
    return {false, "delay exceeds reduced budget"};
  }
  return {};
}

bool CapacityReport::ok() const {
  auto clean = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x <= 0.0; });
  };
  return clean(cpu_overshoot) && clean(link_overshoot);
}

CapacityReport check_capacities(const std::vector<const Placement*>& pls,
                                const std::vector<const Service*>& services,
                                const std::vector<double>& capacity, const ScenarioConfig& cfg) {
  const int U = cfg.num_uavs;
  CapacityReport r;
  r.cpu_load.assign(static_cast<std::size_t>(U), 0.0);
  r.link_load.assign(static_cast<std::size_t>(U * U), 0.0);
  for (std::size_t i = 0; i < pls.size(); ++i) {
    const Placement& pl = *pls[i];
    const Service& s = *services[i];
    for (const auto& row : pl.x)
      for (int u = 0; u < U; ++u)
        if (row[static_cast<std::size_t>(u)])
          r.cpu_load[static_cast<std::size_t>(u)] += cfg.cycles_per_bit * s.bit_rate;
    for (const auto& e : pl.edges)
      if (e.from.kind == Node::Uav && e.to.kind == Node::Uav)
        r.link_load[static_cast<std::size_t>(e.from.idx * U + e.to.idx)] += s.bit_rate;
  }
  for (int u = 0; u < U; ++u) {
    const double over = r.cpu_load[static_cast<std::size_t>(u)] - cfg.cpu_of(u);
    r.cpu_overshoot.push_back(over > 0.0 ? over : 0.0);
  }
  for (std::size_t p = 0; p < r.link_load.size(); ++p) {
    const double over = r.link_load[p] - capacity[p];
    r.link_overshoot.push_back(r.link_load[p] > 0.0 && over > 0.0 ? over : 0.0);
  }
  return r;
}

}  // namespace uavnfv
