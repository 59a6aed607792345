// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "helpers.hpp"
#include "instances.hpp"
#include "oracles.hpp"
#include "uavnfv/agent.hpp"
#include "uavnfv/cli.hpp"
#include "uavnfv/env.hpp"
#include "uavnfv/metrics.hpp"
#include "uavnfv/neural.hpp"
#include "uavnfv/training.hpp"

using namespace uavnfv;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

double mean(const std::vector<double>& v, std::size_t from, std::size_t to) {
  return std::accumulate(v.begin() + static_cast<long>(from), v.begin() + static_cast<long>(to), 0.0) /
         static_cast<double>(to - from);
}

// ---- 1 ------------------------------------------------------------------

Verdict oracle_suite() {
  const auto t0 = Clock::now();
  Rng rng(101);
  long checks = 0;
  std::string first;
  auto check = [&](double got, double want, const std::string& what) {
    ++checks;
    if (!testing::rel_close(got, want, 1e-12) && first.empty())
      first = what + ": " + fmt_double(got) + " vs " + fmt_double(want);
  };
  for (int n = 0; n < 1000; ++n) {
    auto in = testing::random_radio(rng);
    const auto& c = in.cfg;
    const auto& a = in.alloc;
    const auto rep = evaluate_radio(a, in.gains, c);
    const auto r = oracle::unpack(a, in.h, in.hb);
    double rate = 0.0, tx = 0.0;
    for (int u = 0; u < a.U; ++u)
      for (int k = 0; k < a.K; ++k) {
        for (int l = 0; l < a.L; ++l)
          if (a.dl_assoc[a.dl(u, k, l)]) {
            check(rep.dl_sinr[a.dl(u, k, l)], oracle::dl_sinr(r, u, k, l, c), "dl sinr");
            tx += a.dl_power[a.dl(u, k, l)];
          }
        for (int e = 0; e < a.E; ++e)
          if (a.ul_assoc[a.ul(u, k, e)]) {
            check(rep.ul_sinr[a.ul(u, k, e)], oracle::ul_sinr(r, u, k, e, c), "ul sinr");
            tx += a.ul_power[a.ul(u, k, e)];
          }
      }
    for (int k = 0; k < a.K; ++k) rate += rep.user_dl_rate[static_cast<std::size_t>(k)] + rep.user_ul_rate[static_cast<std::size_t>(k)];
    for (int u = 0; u < a.U; ++u)
      for (int w = 0; w < a.U; ++w)
        if (u != w) check(rep.link_capacity(u, w, a.U), oracle::backhaul_rate(r, u, w, c), "backhaul");

    // delays
    const int U = a.U;
    oracle::V2 cap(U, oracle::V1(U));
    for (int u = 0; u < U; ++u)
      for (int w = 0; w < U; ++w) cap[u][w] = rep.link_capacity(u, w, U);
    const Service s = testing::random_service(rng, std::max(2, c.num_users));
    std::vector<int> hosts, prev_hosts;
    for (int j = 0; j < s.chain_length(); ++j) {
      hosts.push_back(rng.below(U));
      prev_hosts.push_back(rng.below(U));
    }
    const auto now = build_placement(s, hosts, rng.below(U), rng.below(U), rng.between(-1, U - 1), rep.bh_total, U);
    const auto prev = build_placement(s, prev_hosts, rng.below(U), rng.below(U), -1, rep.bh_total, U);
    const auto d = service_delay(now, s, in.uavs, rep.bh_total, migrations_between(prev, now), c);
    const auto o = oracle::delays(now, &prev, s, in.uavs, cap, c);
    check(d.pr, o.pr, "processing delay");
    check(d.pd, o.pd, "propagation delay");
    check(d.td, o.td, "transmission delay");
    check(d.mg, o.mg, "migration delay");

    // operation power and energy efficiency after a random move
    std::vector<Move> moves;
    for (int u = 0; u < U; ++u) moves.push_back({rng.uniform(-8, 8), rng.uniform(-8, 8)});
    const auto mv = apply_uav_moves(in.uavs, moves, c);
    const double pcr = operation_power(mv.travelled, c);
    check(pcr, oracle::p_cr(in.uavs, mv.poses, c), "P_cr");
    check(energy_efficiency(rate, tx, pcr), oracle::ee(r, pcr, c), "EE");
  }
  const double secs = since(t0);
  Verdict v;
  v.pass = first.empty() && secs < 10.0;
  v.detail = std::to_string(checks) + " comparisons on 1000 instances, " + fmt(secs, 2) + " s" +
             (first.empty() ? "" : "; first mismatch " + first);
  return v;
}

// ---- 2 ------------------------------------------------------------------

// Sequential moves with the blocking point found by dense sampling and bisection.
std::set<std::pair<int, int>> brute_separation(const std::vector<Vec3>& start, const std::vector<Move>& deltas,
                                               const ScenarioConfig& c) {
  std::vector<Vec3> cur = start;
  std::set<std::pair<int, int>> flagged;
  const double r = c.min_uav_separation;
  for (std::size_t u = 0; u < cur.size(); ++u) {
    double dx = deltas[u][0], dy = deltas[u][1];
    const double norm = std::sqrt(dx * dx + dy * dy);
    if (norm > c.max_step()) {
      dx *= c.max_step() / norm;
      dy *= c.max_step() / norm;
    }
    const Vec3 p = cur[u];
    dx = std::min(std::max(p.x + dx, 0.0), c.area_side) - p.x;
    dy = std::min(std::max(p.y + dy, 0.0), c.area_side) - p.y;
    double stop = 1.0;
    for (std::size_t w = 0; w < cur.size(); ++w) {
      if (w == u) continue;
      const Vec3 q = cur[w];
      auto inside = [&](double s) {
        const double ex = p.x + s * dx - q.x, ey = p.y + s * dy - q.y;
        return std::sqrt(ex * ex + ey * ey) < r;
      };
      // a start on the rim, within rounding, is outside
      const double sx = p.x - q.x, sy = p.y - q.y;
      if (sx * sx + sy * sy < r * r * (1 - 1e-9) || (dx == 0.0 && dy == 0.0)) continue;
      constexpr int N = 4096;
      for (int i = 1; i <= N; ++i) {
        if (!inside(double(i) / N)) continue;
        double lo = double(i - 1) / N, hi = double(i) / N;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          (inside(mid) ? hi : lo) = mid;
        }
        flagged.insert({int(std::min(u, w)), int(std::max(u, w))});
        stop = std::min(stop, lo);
        break;
      }
    }
    if (stop < 1.0 && c.hard_separation) stop = 0.0;
    cur[u].x = p.x + stop * dx;
    cur[u].y = p.y + stop * dy;
  }
  for (std::size_t i = 0; i < cur.size(); ++i)
    for (std::size_t j = i + 1; j < cur.size(); ++j)
      if (std::hypot(cur[i].x - cur[j].x, cur[i].y - cur[j].y) < r - 1e-9) flagged.insert({int(i), int(j)});
  return flagged;
}

// (uav, subcarrier, stronger, weaker) -> decodable
std::map<std::array<int, 4>, bool> brute_sic(const oracle::Radio& r, const ScenarioConfig& c) {
  std::map<std::array<int, 4>, bool> out;
  const double noise = c.bw_dl / c.num_sc_dl * c.noise_psd;
  for (int u = 0; u < r.U; ++u)
    for (int l = 0; l < r.L; ++l)
      for (int i = 0; i < r.K; ++i)
        for (int k = 0; k < r.K; ++k) {
          if (i == k || !r.g[u][i][l] || !r.g[u][k][l]) continue;
          const double ci = oracle::cinr(r, u, i, noise), ck = oracle::cinr(r, u, k, noise);
          if (!(ci > ck || (ci == ck && i < k))) continue;
          double ahead = 0.0;  // users decoded after k
          for (int q = 0; q < r.K; ++q) {
            if (q == k || !r.g[u][q][l]) continue;
            const double cq = oracle::cinr(r, u, q, noise);
            if (cq > ck || (cq == ck && q < k)) ahead += r.p[u][q][l];
          }
          double inter = 0.0;
          for (int w = 0; w < r.U; ++w) {
            if (w == u) continue;
            for (int q = 0; q < r.K; ++q) inter += r.h[w][i] * r.g[w][q][l] * r.p[w][q][l];
          }
          const double at_i = r.h[u][i] * r.p[u][k][l] / (r.h[u][i] * ahead + inter + noise);
          out[{u, l, i, k}] = at_i >= oracle::dl_sinr(r, u, k, l, c);
        }
  return out;
}

bool brute_flow_broken(const Placement& pl, const Service& s, int K) {
  const int U = pl.num_uavs;
  std::vector<int> net(static_cast<std::size_t>(U + K), 0);  // users first, then UAVs
  auto id = [&](const Node& n) { return n.kind == Node::User ? n.idx : K + n.idx; };
  for (const auto& e : pl.edges) {
    ++net[static_cast<std::size_t>(id(e.from))];
    --net[static_cast<std::size_t>(id(e.to))];
  }
  for (int n = 0; n < U + K; ++n) {
    const int want = n == s.source_user ? 1 : n == s.dest_user ? -1 : 0;
    if (n < K && n != s.source_user && n != s.dest_user) continue;
    if (net[static_cast<std::size_t>(n)] != want) return true;
  }
  return false;
}

bool has(const std::vector<Violation>& v, const std::string& name) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.constraint == name; });
}

Verdict constraint_suite(const ScenarioConfig& desk) {
  const auto t0 = Clock::now();
  Rng rng(202);
  std::map<std::string, long> hard_bad, soft_disagree, soft_checked, soft_flagged;

  // hard constraints on decoded actions
  int decodes = 0, env_id = 0;
  while (decodes < 10000) {
    ScenarioConfig c = desk;
    c.strict_c9 = env_id % 2 == 1;
    c.sigma_in_action = env_id % 3 != 2;
    c.migration_enabled = env_id % 4 != 3;
    Env env(c);
    env.reset(derive_seed(202, static_cast<std::uint64_t>(env_id++)));
    for (int t = 0; t < 500 && decodes < 10000; ++t, ++decodes) {
      if (env.done()) env.reset(rng.next());
      HybridAction a;
      for (int i = 0; i < env.layout().cont_dim; ++i) a.cont.push_back(rng.uniform(-1.5, 1.5));
      for (const auto& h : env.layout().heads) a.disc.push_back(rng.between(-1, h.size));
      const auto d = env.decode_action(a);
      const auto pc = check_power_budgets(d.radio, c);
      hard_bad["C4"] += !c4_violations(d.radio).empty();
      hard_bad["C5"] += std::any_of(pc.uav_overshoot.begin(), pc.uav_overshoot.end(), [](double x) { return x > 0; });
      hard_bad["C7"] += !c7_violations(d.radio).empty();
      hard_bad["C8"] += std::any_of(pc.user_overshoot.begin(), pc.user_overshoot.end(), [](double x) { return x > 0; });
      hard_bad["C9"] += !c9_violations(d.radio, c.strict_c9).empty();
      for (std::size_t i = 0; i < env.state().slots.size(); ++i) {
        const auto& slot = env.state().slots[i];
        if (!slot) continue;
        const auto& h = d.hosts[i];
        bool ok = static_cast<int>(h.size()) == slot->svc.chain_length();
        for (int x : h) ok = ok && x >= 0 && x < c.num_uavs;
        if (ok) {
          const auto pl = build_placement(slot->svc, h, -1, -1, -1, env.state().capacity, c.num_uavs);
          for (const auto& row : pl.x) ok = ok && std::accumulate(row.begin(), row.end(), 0) == 1;
        }
        hard_bad["C10"] += !ok;
      }
      hard_bad["invariants"] += !env.step(a).invariants_ok;
    }
  }

  auto soft = [&](const std::string& name, bool impl, bool brute) {
    ++soft_checked[name];
    soft_flagged[name] += brute;
    soft_disagree[name] += impl != brute;
  };

  for (int n = 0; n < 4000; ++n) {
    // C2
    ScenarioConfig c;
    c.num_uavs = 3;
    c.area_side = rng.uniform(20.0, 60.0);
    c.hard_separation = rng.bernoulli(0.3);
    std::vector<Vec3> poses;
    std::vector<Move> moves;
    for (int u = 0; u < 3; ++u) {
      poses.push_back({rng.uniform(0, c.area_side), rng.uniform(0, c.area_side), c.uav_altitude});
      moves.push_back({rng.uniform(-8, 8), rng.uniform(-8, 8)});
    }
    const auto mv = apply_uav_moves(poses, moves, c);
    const std::set<std::pair<int, int>> impl(mv.violations.begin(), mv.violations.end());
    const auto brute = brute_separation(poses, moves, c);
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) soft("C2", impl.count({i, j}) > 0, brute.count({i, j}) > 0);

    // C6
    auto in = testing::random_radio(rng, 3);
    const auto r = oracle::unpack(in.alloc, in.h, in.hb);
    const auto want = brute_sic(r, in.cfg);
    const auto got = check_sic(in.alloc, in.gains, in.cfg);
    std::map<std::array<int, 4>, bool> got_map;
    for (const auto& s : got) got_map[{s.uav, s.subcarrier, s.stronger, s.weaker}] = s.ok;
    for (const auto& [key, ok] : want) soft("C6", got_map.count(key) ? !got_map[key] : true, !ok);
    soft_disagree["C6"] += static_cast<long>(got_map.size() != want.size());

    // C11 on perturbed placements
    const int U = 3, K = 5;
    const Service s = testing::random_service(rng, K, 2);
    std::vector<double> cap(9, 0.0);
    for (int u = 0; u < U; ++u)
      for (int w = 0; w < U; ++w)
        if (u != w && rng.bernoulli(0.7)) cap[static_cast<std::size_t>(u * U + w)] = rng.uniform(1e5, 2e6);
    auto random_hosts = [&] {
      std::vector<int> h;
      for (int j = 0; j < s.chain_length(); ++j) h.push_back(rng.below(U));
      return h;
    };
    Placement pl = build_placement(s, random_hosts(), rng.below(U), rng.below(U), rng.between(-1, 2), cap, U);
    const int tweaks = rng.between(0, 2);
    for (int m = 0; m < tweaks && !pl.edges.empty(); ++m) {
      const auto at = static_cast<std::size_t>(rng.below(static_cast<int>(pl.edges.size())));
      switch (rng.below(3)) {
        case 0: pl.edges.erase(pl.edges.begin() + static_cast<long>(at)); break;
        case 1: pl.edges.push_back(pl.edges[at]); break;
        default: pl.edges.push_back({Node::uav(rng.below(U)), Node::uav(rng.below(U)), kRelayEdge});
      }
    }
    soft("C11", has(validate_placement(pl, s), "C11"), brute_flow_broken(pl, s, K));

    // C12 / C13 over a few services
    ScenarioConfig cc;
    cc.num_uavs = U;
    cc.cpu_capacity = {rng.uniform(1e6, 4e6), rng.uniform(1e6, 4e6), rng.uniform(1e6, 4e6)};
    std::vector<Service> svcs;
    std::vector<Placement> pls;
    const int count = rng.between(1, 4);
    for (int i = 0; i < count; ++i) {
      svcs.push_back(testing::random_service(rng, K, 2));
      std::vector<int> h;
      for (int j = 0; j < svcs.back().chain_length(); ++j) h.push_back(rng.below(U));
      pls.push_back(build_placement(svcs.back(), h, rng.below(U), rng.below(U), -1, cap, U));
    }
    std::vector<const Placement*> pp;
    std::vector<const Service*> sp;
    for (int i = 0; i < count; ++i) {
      pp.push_back(&pls[static_cast<std::size_t>(i)]);
      sp.push_back(&svcs[static_cast<std::size_t>(i)]);
    }
    const auto rep = check_capacities(pp, sp, cap, cc);
    for (int u = 0; u < U; ++u) {
      double load = 0.0;
      for (int i = 0; i < count; ++i)
        for (int j = 0; j < svcs[static_cast<std::size_t>(i)].chain_length(); ++j)
          if (pls[static_cast<std::size_t>(i)].host(j) == u) load += svcs[static_cast<std::size_t>(i)].bit_rate * cc.cycles_per_bit;
      soft("C12", rep.cpu_overshoot[static_cast<std::size_t>(u)] > 0.0, load > cc.cpu_capacity[static_cast<std::size_t>(u)]);
    }
    for (int u = 0; u < U; ++u)
      for (int w = 0; w < U; ++w) {
        double load = 0.0;
        for (int i = 0; i < count; ++i)
          for (const auto& e : pls[static_cast<std::size_t>(i)].edges)
            if (e.from == Node::uav(u) && e.to == Node::uav(w)) load += svcs[static_cast<std::size_t>(i)].bit_rate;
        soft("C13", rep.link_overshoot[static_cast<std::size_t>(u * U + w)] > 0.0,
             load > cap[static_cast<std::size_t>(u * U + w)]);
      }

    // C14
    const auto prev_h = random_hosts(), now_h = random_hosts();
    const auto prev = build_placement(s, prev_h, 0, 1, -1, cap, U);
    const auto now = build_placement(s, now_h, 0, 1, -1, cap, U);
    const auto cm = check_migration(migrations_between(prev, now), prev, now, cap);
    for (int j = 0; j < s.chain_length(); ++j) {
      const int a = prev_h[static_cast<std::size_t>(j)], b = now_h[static_cast<std::size_t>(j)];
      const bool brute = a != b && cap[static_cast<std::size_t>(a * U + b)] <= 0.0;
      const bool impl = std::any_of(cm.begin(), cm.end(), [&](const Violation& v) { return v.constraint == "C14" && v.function == j; });
      soft("C14", impl, brute);
    }

    // C15 against oracle delays
    {
      auto rin = testing::random_radio(rng, 3);
      const auto rr = evaluate_radio(rin.alloc, rin.gains, rin.cfg);
      oracle::V2 w(3, oracle::V1(3));
      for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v) w[u][v] = rr.link_capacity(u, v, 3);
      Service sv = testing::random_service(rng, std::max(2, rin.cfg.num_users), 2);
      // half the cases stay on one UAV so the delay is finite
      const int local = rng.bernoulli(0.5) ? rng.below(3) : -1;
      auto pick = [&] { return local >= 0 ? local : rng.below(3); };
      std::vector<int> h0, h1;
      for (int j = 0; j < sv.chain_length(); ++j) {
        h0.push_back(pick());
        h1.push_back(pick());
      }
      const auto p0 = build_placement(sv, h0, pick(), pick(), -1, rr.bh_total, 3);
      const auto p1 = build_placement(sv, h1, pick(), pick(), local >= 0 ? -1 : rng.between(-1, 2), rr.bh_total, 3);
      const auto mg = migrations_between(p0, p1);
      const auto o = oracle::delays(p1, &p0, sv, rin.uavs, w, rin.cfg);
      const double total = o.pr + o.pd + o.td + o.mg;
      if (std::isfinite(total) && total > 0.0) {
        sv.delay_budget = total * rng.uniform(0.5, 1.5);
        sv.reduced_budget = (o.pr + o.pd + o.td) * rng.uniform(0.5, 1.5);
      }
      const bool migrating = !mg.empty();
      const double slot = rng.bernoulli(0.2) ? total * rng.uniform(0.5, 1.5) : rin.cfg.slot_duration;
      const auto dd = service_delay(p1, sv, rin.uavs, rr.bh_total, mg, rin.cfg);
      const bool brute_ok = total <= slot &&
                            (migrating ? total <= sv.delay_budget : o.pr + o.pd + o.td <= sv.reduced_budget);
      soft("C15", !check_service_delay(dd, sv, migrating, slot).ok, !brute_ok);
    }
  }

  const double secs = since(t0);
  long hard_total = 0, soft_total = 0;
  std::string detail;
  for (const auto& [k, v] : hard_bad) hard_total += v;
  for (const auto& [k, v] : soft_disagree) soft_total += v;
  detail = std::to_string(decodes) + " decodes, hard violations " + std::to_string(hard_total) + " (";
  for (const auto& [k, v] : hard_bad) detail += k + "=" + std::to_string(v) + " ";
  detail.back() = ')';
  detail += "; soft disagreements " + std::to_string(soft_total) + " (";
  for (const auto& [k, v] : soft_checked)
    detail += k + " " + std::to_string(soft_disagree[k]) + "/" + std::to_string(v) + " flagged " +
              std::to_string(soft_flagged[k]) + ", ";
  detail.resize(detail.size() - 2);
  detail += "); " + fmt(secs, 1) + " s";
  return {hard_total == 0 && soft_total == 0 && secs < 60.0, detail};
}

// ---- 3 ------------------------------------------------------------------

struct Shape {
  std::vector<int> sizes;
  Activation out;
  bool operator<(const Shape& o) const { return std::tie(sizes, out) < std::tie(o.sizes, o.out); }
};

Verdict gradient_suite(const ScenarioConfig& desk) {
  const auto t0 = Clock::now();
  std::set<Shape> shapes;
  for (auto mode : {AgentMode::Single, AgentMode::Multi}) {
    ScenarioConfig c = desk;
    c.agent.mode = mode;
    HhcdaAgent ag(c, 1);
    shapes.insert({ag.critic().sizes(), ag.critic().output_activation()});
    for (int a = 0; a < ag.agents(); ++a) {
      shapes.insert({ag.actor(a).sizes(), ag.actor(a).output_activation()});
      shapes.insert({ag.dqn(a).sizes(), ag.dqn(a).output_activation()});
    }
  }
  {
    const ActionLayout L(desk);
    std::vector<int> a{L.obs_dim}, q{L.obs_dim + L.cont_dim + L.disc_dim()};
    for (int h : desk.agent.hidden_layers) {
      a.push_back(h);
      q.push_back(h);
    }
    a.push_back(L.cont_dim + L.disc_dim());
    q.push_back(1);
    shapes.insert({a, Activation::Tanh});
    shapes.insert({q, Activation::Identity});
  }

  Rng rng(303);
  double worst = 0.0;
  long checked = 0, bad = 0;
  const double h = 1e-5;
  for (const auto& sh : shapes) {
    Mlp net(sh.sizes, sh.out, rng.next());
    Mat x(sh.sizes.front(), 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1, 1);
    Mat wout(sh.sizes.back(), 3);
    for (Eigen::Index i = 0; i < wout.size(); ++i) wout.data()[i] = rng.uniform(-1, 1);
    auto loss = [&](const Mlp& m, const Mat& in) { return (m.forward(in).array() * wout.array()).sum(); };
    Tape tape;
    net.forward(x, tape);
    const Gradients g = net.backward(tape, wout);
    auto compare = [&](double analytic, double numeric) {
      ++checked;
      const double scale = std::max(std::abs(analytic), std::abs(numeric));
      const double rel = scale < 1e-9 ? 0.0 : std::abs(analytic - numeric) / scale;
      worst = std::max(worst, rel);
      bad += rel > 1e-4;
    };
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto& W = net.layers()[l].W;
      auto& b = net.layers()[l].b;
      for (int n = 0; n < 24; ++n) {
        const auto i = static_cast<Eigen::Index>(rng.below(static_cast<int>(W.size())));
        const double keep = W.data()[i];
        W.data()[i] = keep + h;
        const double up = loss(net, x);
        W.data()[i] = keep - h;
        const double down = loss(net, x);
        W.data()[i] = keep;
        compare(g.dW[l].data()[i], (up - down) / (2 * h));
      }
      for (int n = 0; n < 8; ++n) {
        const auto i = static_cast<Eigen::Index>(rng.below(static_cast<int>(b.size())));
        const double keep = b(i);
        b(i) = keep + h;
        const double up = loss(net, x);
        b(i) = keep - h;
        const double down = loss(net, x);
        b(i) = keep;
        compare(g.db[l](i), (up - down) / (2 * h));
      }
    }
    for (int n = 0; n < 16; ++n) {
      const auto i = static_cast<Eigen::Index>(rng.below(static_cast<int>(x.size())));
      Mat xp = x, xm = x;
      xp.data()[i] += h;
      xm.data()[i] -= h;
      compare(g.dx.data()[i], (loss(net, xp) - loss(net, xm)) / (2 * h));
    }
  }

  // Adam: after one step every parameter moves by -lr * g / (|g| + eps).
  const auto& big = *shapes.rbegin();
  Mlp net(big.sizes, big.out, 9);
  const Mlp before = net;
  Gradients g;
  for (const auto& layer : net.layers()) {
    g.dW.push_back(Mat::NullaryExpr(layer.W.rows(), layer.W.cols(), [&] { return rng.uniform(-2, 2); }));
    g.db.push_back(Vec::NullaryExpr(layer.b.size(), [&] { return rng.uniform(-2, 2); }));
  }
  const double lr = 1e-3, eps = 1e-8;
  Adam opt(net, lr, 0.9, 0.999, eps);
  opt.step(net, g);
  double adam_worst = 0.0;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    for (Eigen::Index i = 0; i < g.dW[l].size(); ++i) {
      const double gi = g.dW[l].data()[i];
      const double want = before.layers()[l].W.data()[i] - lr * gi / (std::abs(gi) + eps);
      const double got = net.layers()[l].W.data()[i];
      adam_worst = std::max(adam_worst, std::abs(got - want) / std::max(std::abs(want), 1e-300));
    }
    for (Eigen::Index i = 0; i < g.db[l].size(); ++i) {
      const double gi = g.db[l](i);
      const double want = before.layers()[l].b(i) - lr * gi / (std::abs(gi) + eps);
      adam_worst = std::max(adam_worst, std::abs(net.layers()[l].b(i) - want) / std::max(std::abs(want), 1e-300));
    }
  }
  const double secs = since(t0);
  std::ostringstream os;
  os << shapes.size() << " network shapes, " << checked << " derivatives, worst relative error " << worst
     << ", " << bad << " above 1e-4; Adam first step worst relative error " << adam_worst << "; "
     << fmt(secs, 2) << " s";
  return {bad == 0 && adam_worst <= 1e-12 && secs < 10.0, os.str()};
}

// ---- 4 - 7 --------------------------------------------------------------

struct SeedRuns {
  std::vector<double> hhcda, qddpg, random, greedy;  // per-episode training reward
  double hhcda_secs = 0.0;
  std::unique_ptr<Policy> policy;                    // trained HHCDA
};

std::vector<double> rewards(const TrainResult& r) {
  std::vector<double> out;
  for (const auto& s : r.curve) out.push_back(s.kpis.avg_reward);
  return out;
}

SeedRuns train_seed(const ScenarioConfig& cfg, std::uint64_t seed) {
  SeedRuns out;
  auto run = [&](const std::string& kind) {
    TrainOptions o;
    o.policy = kind;
    o.seed = seed;
    return run_training(cfg, o);
  };
  auto t0 = Clock::now();
  auto h = run("hhcda");
  out.hhcda_secs = since(t0);
  out.hhcda = rewards(h);
  out.policy = std::move(h.policy);
  out.qddpg = rewards(run("quantized-ddpg"));
  out.random = rewards(run("random"));
  out.greedy = rewards(run("greedy"));
  std::cerr << "  seed " << seed << ": hhcda " << fmt(out.hhcda_secs, 0) << " s\n";
  return out;
}

Verdict learning_sanity(const std::vector<SeedRuns>& runs) {
  int ok = 0;
  std::string detail;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    const std::size_t n = r.hhcda.size();
    const double gap = mean(r.greedy, 0, r.greedy.size()) - mean(r.random, 0, r.random.size());
    const double gain = mean(r.hhcda, n - 50, n) - mean(r.hhcda, 0, 50);
    const bool pass = gain >= 0.2 * gap && r.hhcda_secs <= 900.0;
    ok += pass;
    detail += "seed " + std::to_string(i + 1) + ": gain " + fmt(gain) + " vs 20% of gap " + fmt(0.2 * gap) +
              " (" + fmt(r.hhcda_secs, 0) + " s) " + (pass ? "ok" : "no") + "; ";
  }
  return {ok >= 2, detail + std::to_string(ok) + "/3 seeds"};
}

Verdict ordering(const std::vector<SeedRuns>& runs) {
  int ok = 0;
  std::string detail;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    auto last100 = [](const std::vector<double>& v) { return mean(v, v.size() - 100, v.size()); };
    const double h = last100(r.hhcda), q = last100(r.qddpg), x = last100(r.random);
    const bool pass = h >= q && q >= x && h - q >= 0.05 * (q - x);
    ok += pass;
    detail += "seed " + std::to_string(i + 1) + ": hhcda " + fmt(h) + ", qddpg " + fmt(q) + ", random " + fmt(x) +
              (pass ? " ok" : " no") + "; ";
  }
  return {ok >= 2, detail + std::to_string(ok) + "/3 seeds"};
}

EpisodeKpis eval_at(ScenarioConfig cfg, Policy& p, double kmh, bool migration, int episodes, std::uint64_t seed) {
  cfg.user_speed_max = kmh / 3.6;
  cfg.migration_enabled = migration;
  return evaluate(cfg, p, episodes, seed);
}

Verdict migration_effect(const ScenarioConfig& cfg, const std::vector<SeedRuns>& runs, int episodes) {
  int moving_ok = 0, still_ok = 0;
  std::string detail;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto seed = static_cast<std::uint64_t>(i + 1);
    auto& p = *runs[i].policy;
    const auto on6 = eval_at(cfg, p, 6, true, episodes, seed), off6 = eval_at(cfg, p, 6, false, episodes, seed);
    const auto on0 = eval_at(cfg, p, 0, true, episodes, seed), off0 = eval_at(cfg, p, 0, false, episodes, seed);
    const bool m = on6.rrr <= off6.rrr && on6.avg_delay <= off6.avg_delay;
    const bool s = std::abs(on0.rrr - off0.rrr) < 0.02;
    moving_ok += m;
    still_ok += s;
    detail += "seed " + std::to_string(i + 1) + ": 6 km/h rrr " + fmt(on6.rrr) + "/" + fmt(off6.rrr) + " delay " +
              fmt(on6.avg_delay) + "/" + fmt(off6.avg_delay) + ", 0 km/h rrr " + fmt(on0.rrr) + "/" + fmt(off0.rrr) +
              "; ";
  }
  return {moving_ok >= 2 && still_ok >= 2,
          detail + "on/off; 6 km/h " + std::to_string(moving_ok) + "/3, 0 km/h " + std::to_string(still_ok) + "/3"};
}

// Non-decreasing with at most one drop, of at most 1 pp.
bool near_monotone(const std::vector<double>& v) {
  int drops = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[i - 1]) {
      ++drops;
      if (v[i - 1] - v[i] > 0.01) return false;
    }
  return drops <= 1;
}

Verdict trends(const ScenarioConfig& cfg, const std::vector<SeedRuns>& runs, int episodes) {
  const std::vector<double> speeds{0, 3, 6, 9};
  const std::vector<int> users{6, 9, 12};
  std::vector<double> by_speed(speeds.size(), 0.0), by_users(users.size(), 0.0);
  const double n = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto seed = static_cast<std::uint64_t>(i + 1);
    for (std::size_t s = 0; s < speeds.size(); ++s)
      by_speed[s] += eval_at(cfg, *runs[i].policy, speeds[s], cfg.migration_enabled, episodes, seed).rrr / n;
    for (std::size_t k = 0; k < users.size(); ++k) {
      ScenarioConfig c = cfg;
      c.num_users = users[k];
      std::unique_ptr<Policy> fresh;
      Policy* p = runs[i].policy.get();
      if (users[k] != cfg.num_users) {
        TrainOptions o;
        o.seed = seed;
        fresh = run_training(c, o).policy;
        p = fresh.get();
      }
      by_users[k] += evaluate(c, *p, episodes, seed).rrr / n;
    }
  }
  std::string detail = "rrr by km/h";
  for (std::size_t s = 0; s < speeds.size(); ++s) detail += " " + fmt(speeds[s], 0) + ":" + fmt(by_speed[s]);
  detail += "; by users";
  for (std::size_t k = 0; k < users.size(); ++k) detail += " " + std::to_string(users[k]) + ":" + fmt(by_users[k]);
  return {near_monotone(by_speed) && near_monotone(by_users), detail};
}

// ---- 8 ------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict determinism(const fs::path& config) {
  const auto t0 = Clock::now();
  const auto dir = testing::scratch_dir("acceptance_determinism");
  std::vector<std::string> curves, metrics;
  for (int run = 0; run < 3; ++run) {
    const auto out = dir / ("run" + std::to_string(run));
    std::ostringstream o, e;
    const int code = run_cli({"train", "--config", config.string(), "--episodes", "5", "--seed", "1", "--outdir",
                              out.string()},
                             o, e);
    if (code != kExitOk) return {false, "train exited " + std::to_string(code) + ": " + e.str()};
    curves.push_back(slurp(out / "learning_curve.csv"));
    metrics.push_back(slurp(out / "metrics.csv"));
  }
  fs::remove_all(dir);
  const bool same = curves[0] == curves[1] && curves[1] == curves[2] && metrics[0] == metrics[1] &&
                    metrics[1] == metrics[2] && !metrics[0].empty();
  const double secs = since(t0);
  return {same && secs < 60.0, std::string(same ? "3 runs byte-identical" : "outputs differ") + " (" +
                                   std::to_string(metrics[0].size()) + " bytes of metrics), " + fmt(secs, 1) + " s"};
}

// ---- 9 ------------------------------------------------------------------

Verdict sizes() {
  int configs = 0, bad = 0;
  for (int U : {1, 2, 3, 6})
    for (int K : {2, 6, 12})
      for (int I : {1, 4, 12})
        for (int J : {1, 2, 3})
          for (auto mode : {AgentMode::Single, AgentMode::Multi}) {
            ScenarioConfig c = testing::tiny_config(U, K);
            c.area_side = 1000.0;
            c.num_service_slots = I;
            c.catalog.chain_length_min = 1;
            c.catalog.chain_length_max = J;
            c.agent.mode = mode;
            c.agent.hidden_layers = {4};
            ++configs;
            if (!validate_config(c).empty()) {
              ++bad;
              continue;
            }
            Env env(c);
            const int obs = static_cast<int>(env.reset(1).size());
            const int want = 3 * U + 2 * K + I * J * K + U + U * (U - 1);
            HhcdaAgent ag(c, 1);
            bool ok = obs == want && env.layout().cont_dim == 3 * U + 2 * K;
            for (int a = 0; a < ag.agents(); ++a) {
              const int own = mode == AgentMode::Single ? 3 * U + 2 * K
                                                        : static_cast<int>(ag.partition().cont[static_cast<std::size_t>(a)].size());
              ok = ok && ag.dqn_input_size(a) == obs + own;
            }
            if (mode == AgentMode::Single) ok = ok && ag.dqn_input_size(0) == obs + env.layout().cont_dim;
            bad += !ok;
          }
  return {bad == 0, std::to_string(configs) + " configurations, " + std::to_string(bad) + " mismatches"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::string config_path = testing::source_path("configs/desk.json").string();
  int eval_episodes = 20;
  app.add_option("--only", only, "Criteria to run (default all)");
  app.add_option("--config", config_path, "Desk config");
  app.add_option("--eval-episodes", eval_episodes, "Evaluation episodes per cell")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  auto want = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };

  const ScenarioConfig desk = load_config(config_path);
  bool all = true;
  auto report = [&](int n, const Verdict& v) {
    all = all && v.pass;
    std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
  };

  if (want(1)) report(1, oracle_suite());
  if (want(2)) report(2, constraint_suite(desk));
  if (want(3)) report(3, gradient_suite(desk));
  if (want(4) || want(5) || want(6) || want(7)) {
    std::vector<SeedRuns> runs;
    for (std::uint64_t s = 1; s <= 3; ++s) runs.push_back(train_seed(desk, s));
    if (want(4)) report(4, learning_sanity(runs));
    if (want(5)) report(5, ordering(runs));
    if (want(6)) report(6, migration_effect(desk, runs, eval_episodes));
    if (want(7)) report(7, trends(desk, runs, eval_episodes));
  }
  if (want(8)) report(8, determinism(config_path));
  if (want(9)) report(9, sizes());
  return all ? 0 : 1;
}
