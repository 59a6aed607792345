#include "uavnfv/training.hpp"

#include <bit>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace uavnfv {

using nlohmann::json;

std::uint64_t train_episode_seed(std::uint64_t seed, int episode) {
  return derive_seed(seed, 1000 + static_cast<std::uint64_t>(episode));
}

std::uint64_t eval_episode_seed(std::uint64_t seed, int episode) {
  return derive_seed(seed ^ 0x5eedf00dULL, 1000000 + static_cast<std::uint64_t>(episode));
}

namespace {

void log_slot(const Sinks& sinks, int episode, const HybridAction& a, const StepResult& res,
              const Env& env) {
  const int slot = res.metrics.slot;
  if (sinks.metrics) *sinks.metrics << metrics_csv_row(episode, res.metrics) << '\n';
  if (sinks.trajectory) {
    const auto& uavs = env.state().uavs;
    for (std::size_t u = 0; u < uavs.size(); ++u)
      *sinks.trajectory << episode << ',' << slot << ',' << u << ',' << fmt_double(uavs[u].x) << ','
                        << fmt_double(uavs[u].y) << ',' << fmt_double(uavs[u].z) << '\n';
  }
  if (sinks.placements) {
    for (const auto& p : res.placements) {
      json edges = json::array();
      auto name = [](const Node& n) {
        return std::string(n.kind == Node::User ? "user" : "uav") + std::to_string(n.idx);
      };
      for (const auto& e : p.edges)
        edges.push_back(json{{"from", name(e.from)}, {"to", name(e.to)}, {"function", e.function}});
      json mg = json::array();
      for (const auto& m : p.migrations) mg.push_back({m.function, m.from, m.to});
      json rec = {{"episode", episode}, {"slot", slot},          {"service", p.service_id},
                  {"index", p.slot_index}, {"new", p.is_new},     {"served", p.served},
                  {"hosts", p.hosts},     {"edges", edges},       {"migrations", mg}};
      if (!p.reason.empty()) rec["reason"] = p.reason;
      *sinks.placements << rec.dump() << '\n';
    }
  }
  if (sinks.episode_log) {
    json rec = {{"type", "slot"},    {"episode", episode},  {"slot", slot}, {"cont", a.cont},
                {"disc", a.disc},    {"reward", res.reward}, {"violations", res.metrics.violations},
                {"rejects", res.metrics.rejects}};
    *sinks.episode_log << rec.dump() << '\n';
  }
}

}  // namespace

EpisodeRun run_episode(Env& env, Policy& policy, int episode, std::uint64_t env_seed, bool explore,
                       bool learn, const Sinks& sinks) {
  if (sinks.episode_log)
    *sinks.episode_log << json{{"type", "episode"}, {"episode", episode}, {"seed", env_seed}}.dump()
                       << '\n';
  EpisodeRun run;
  std::vector<double> obs = env.reset(env_seed);
  std::vector<std::uint8_t> mask = env.active_heads();
  HybridAction a = policy.act(env, obs, explore);
  const bool frozen = !env.config().migration_enabled;
  std::map<int, std::vector<int>> hosts_seen;

  for (;;) {
    StepResult res = env.step(a);
    if (!res.invariants_ok)
      throw std::runtime_error("decoded action broke a hard constraint at slot " +
                               std::to_string(res.metrics.slot));
    if (frozen)
      for (const auto& p : res.placements) {
        if (!p.served) continue;
        auto [it, fresh] = hosts_seen.try_emplace(p.service_id, p.hosts);
        if (!fresh && it->second != p.hosts)
          throw std::runtime_error("service " + std::to_string(p.service_id) +
                                   " moved while migration is off");
      }
    log_slot(sinks, episode, a, res, env);
    run.slots.push_back(res.metrics);

    HybridAction next;
    if (!res.done) next = policy.act(env, res.obs, explore);
    if (learn)
      policy.record({std::move(obs), a, mask, res.reward, res.obs,
                     res.done ? std::vector<double>{} : next.cont, res.done});
    if (res.done) break;
    obs = std::move(res.obs);
    mask = env.active_heads();
    a = std::move(next);
  }
  run.kpis = episode_kpis(run.slots);
  return run;
}

TrainResult run_training(const ScenarioConfig& cfg, const TrainOptions& opt) {
  TrainResult out;
  out.policy = make_policy(opt.policy, cfg, derive_seed(opt.seed, 7));
  Env env(cfg);
  const int episodes = opt.episodes > 0 ? opt.episodes : cfg.agent.episodes;
  auto checkpoint = [&](const std::string& tag) {
    if (opt.checkpoint_dir.empty() || !out.policy->learns()) return;
    out.policy->save(opt.checkpoint_dir / ("checkpoint_" + tag + ".bin"));
  };
  for (int e = 0; e < episodes; ++e) {
    out.policy->begin_episode(e);
    EpisodeSummary s;
    s.episode = e;
    s.epsilon = out.policy->epsilon();
    s.lr = out.policy->learning_rate();
    s.kpis = run_episode(env, *out.policy, e, train_episode_seed(opt.seed, e), true, true, opt.sinks).kpis;
    out.policy->end_episode();
    out.curve.push_back(s);
    if (opt.on_episode) opt.on_episode(s);
    if (opt.checkpoint_every > 0 && (e + 1) % opt.checkpoint_every == 0 && e + 1 < episodes)
      checkpoint(std::to_string(e + 1));
  }
  checkpoint("final");
  return out;
}

EpisodeKpis evaluate(const ScenarioConfig& cfg, Policy& policy, int episodes, std::uint64_t seed,
                     const Sinks& sinks) {
  Env env(cfg);
  std::vector<SlotMetrics> all;
  for (int e = 0; e < episodes; ++e) {
    auto run = run_episode(env, policy, e, eval_episode_seed(seed, e), false, false, sinks);
    all.insert(all.end(), run.slots.begin(), run.slots.end());
  }
  return episode_kpis(all);
}

std::string learning_curve_header() { return "episode,mean_reward,mean_ee,mean_delay,rrr,epsilon,lr"; }

std::string learning_curve_row(const EpisodeSummary& s) {
  std::ostringstream os;
  os << s.episode << ',' << fmt_double(s.kpis.avg_reward) << ',' << fmt_double(s.kpis.avg_ee) << ','
     << fmt_double(s.kpis.avg_delay) << ',' << fmt_double(s.kpis.rrr) << ',' << fmt_double(s.epsilon)
     << ',' << fmt_double(s.lr);
  return os.str();
}

std::string trajectory_header() { return "episode,slot,uav,x,y,z"; }

ReplayReport replay_log(std::istream& log) {
  auto parse = [](const std::string& line, int n) {
    try {
      return json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("log line " + std::to_string(n) + " is malformed: " + e.what());
    }
  };
  std::string line;
  int n = 0;
  if (!std::getline(log, line)) throw std::runtime_error("episode log is empty");
  ++n;
  const json header = parse(line, n);
  if (header.value("type", "") != "header" || !header.contains("config"))
    throw std::runtime_error("episode log does not start with a header");
  const ScenarioConfig cfg = config_from_json(header["config"]);
  Env env(cfg);

  ReplayReport rep;
  int expected = 0;  // slots still owed by the current episode
  try {
    while (std::getline(log, line)) {
      ++n;
      if (line.empty()) continue;
      const json rec = parse(line, n);
      const std::string type = rec.at("type").get<std::string>();
      if (type == "episode") {
        if (expected > 0) throw std::runtime_error("episode cut short before line " + std::to_string(n));
        env.reset(rec.at("seed").get<std::uint64_t>());
        expected = cfg.slots_per_episode;
        continue;
      }
      if (type != "slot") throw std::runtime_error("unknown record type '" + type + "'");
      if (expected == 0) throw std::runtime_error("slot record outside an episode at line " + std::to_string(n));
      HybridAction a{rec.at("cont").get<std::vector<double>>(), rec.at("disc").get<std::vector<int>>()};
      const double logged = rec.at("reward").get<double>();
      const StepResult res = env.step(a);
      --expected;
      ++rep.slots;
      if (std::bit_cast<std::uint64_t>(res.reward) != std::bit_cast<std::uint64_t>(logged)) {
        if (rep.divergences++ == 0) {
          std::ostringstream os;
          os << "episode " << rec.at("episode").get<int>() << " slot " << rec.at("slot").get<int>()
             << ": logged " << fmt_double(logged) << ", replayed " << fmt_double(res.reward);
          rep.first = os.str();
        }
      }
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("log line " + std::to_string(n) + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("log line " + std::to_string(n) + ": " + e.what());
  }
  if (expected > 0) throw std::runtime_error("episode log is truncated");
  return rep;
}

}  // namespace uavnfv
