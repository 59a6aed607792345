#include "uavnfv/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "uavnfv/training.hpp"

#ifndef UAVNFV_VERSION
#define UAVNFV_VERSION "dev"
#endif

namespace uavnfv {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version_string() { return UAVNFV_VERSION; }

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string outdir = "out";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Config JSON (or a run manifest)");
  cmd->add_option("--override", c.overrides, "key=value with a dotted key path (repeatable)");
  cmd->add_option("--seed", c.seed, "Run seed (defaults to rng_seed)");
  cmd->add_option("--outdir", c.outdir, "Directory for every output file");
}

// Config precedence: defaults < file < overrides < --seed.
ScenarioConfig resolve(const Common& c) {
  ScenarioConfig cfg;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw ConfigError("cannot open config file '" + c.config + "'");
    json doc;
    try {
      in >> doc;
    } catch (const json::parse_error& e) {
      throw ConfigError("malformed config '" + c.config + "': " + e.what());
    }
    if (doc.is_object() && doc.contains("manifest_version")) doc = doc.at("config");
    cfg = config_from_json(doc);
  }
  for (const auto& o : c.overrides) apply_override(cfg, o);
  if (c.seed) cfg.rng_seed = *c.seed;
  if (auto issues = validate_config(cfg); !issues.empty()) {
    std::string msg = "invalid config:";
    for (const auto& i : issues) msg += "\n  " + i.path + ": " + i.message;
    throw ConfigError(msg);
  }
  return cfg;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  return f;
}

void write_manifest(const fs::path& dir, const std::string& command, const ScenarioConfig& cfg,
                    const std::vector<std::string>& outputs, const json& extra = json::object()) {
  json m = {{"manifest_version", 1},
            {"command", command},
            {"version", version_string()},
            {"seed", cfg.rng_seed},
            {"start_time", utc_now()},
            {"config", to_json(cfg)},
            {"outputs", outputs}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  auto f = open_out(dir / "manifest.json");
  f << m.dump(2) << '\n';
}

struct Extras {
  bool trajectory = false;
  bool placements = false;
  bool episode_log = false;
};

void add_extras(CLI::App* cmd, Extras& x) {
  cmd->add_flag("--trajectory", x.trajectory, "Write UAV poses per slot");
  cmd->add_flag("--placements", x.placements, "Write per-service placements as JSON lines");
  cmd->add_flag("--episode-log", x.episode_log, "Write a replayable episode log");
}

// Opens the optional streams and records their names.
struct OpenSinks {
  std::ofstream metrics, trajectory, placements, log;
  Sinks sinks;
  std::vector<std::string> names;

  OpenSinks(const fs::path& dir, const Extras& x, const ScenarioConfig& cfg) {
    metrics = open_out(dir / "metrics.csv");
    metrics << metrics_csv_header() << '\n';
    sinks.metrics = &metrics;
    names.push_back("metrics.csv");
    if (x.trajectory) {
      trajectory = open_out(dir / "trajectory.csv");
      trajectory << trajectory_header() << '\n';
      sinks.trajectory = &trajectory;
      names.push_back("trajectory.csv");
    }
    if (x.placements) {
      placements = open_out(dir / "placements.jsonl");
      sinks.placements = &placements;
      names.push_back("placements.jsonl");
    }
    if (x.episode_log) {
      log = open_out(dir / "episode_log.jsonl");
      log << json{{"type", "header"}, {"config", to_json(cfg)}}.dump() << '\n';
      sinks.episode_log = &log;
      names.push_back("episode_log.jsonl");
    }
  }
};

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string kpi_header() {
  return "policy,migration,mobility_kmh,num_users,episodes,rrr,avg_delay,avg_ee,avg_reward,requests,"
         "rejects";
}

std::string kpi_row(const std::string& policy, const ScenarioConfig& cfg, int episodes,
                    const EpisodeKpis& k) {
  std::ostringstream os;
  os << policy << ',' << (cfg.migration_enabled ? "on" : "off") << ','
     << fmt_double(round6(cfg.user_speed_max * 3.6)) << ',' << cfg.num_users << ',' << episodes << ','
     << fmt_double(k.rrr) << ',' << fmt_double(k.avg_delay) << ',' << fmt_double(k.avg_ee) << ','
     << fmt_double(k.avg_reward) << ',' << k.requests << ',' << k.rejects;
  return os.str();
}

bool parse_switch(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw ConfigError("migration must be 'on' or 'off', got '" + v + "'");
}

int cmd_train(const Common& c, const std::string& policy, int episodes, int checkpoint_every,
              const Extras& x, std::ostream& out) {
  const ScenarioConfig cfg = resolve(c);
  const fs::path dir = c.outdir;
  fs::create_directories(dir / "checkpoints");
  OpenSinks open(dir, x, cfg);
  std::vector<std::string> names{"learning_curve.csv"};
  names.insert(names.end(), open.names.begin(), open.names.end());
  names.push_back("checkpoints/");
  write_manifest(dir, "train", cfg, names, {{"policy", policy}});

  auto curve = open_out(dir / "learning_curve.csv");
  curve << learning_curve_header() << '\n';
  TrainOptions opt;
  opt.policy = policy;
  opt.episodes = episodes;
  opt.seed = cfg.rng_seed;
  opt.checkpoint_every = checkpoint_every;
  opt.checkpoint_dir = dir / "checkpoints";
  opt.sinks = open.sinks;
  opt.on_episode = [&](const EpisodeSummary& s) { curve << learning_curve_row(s) << '\n'; };
  const auto res = run_training(cfg, opt);
  const auto& last = res.curve.back();
  out << "trained " << policy << " for " << res.curve.size() << " episodes; final reward "
      << fmt_double(last.kpis.avg_reward) << ", rrr " << fmt_double(last.kpis.rrr) << '\n';
  return kExitOk;
}

std::unique_ptr<Policy> load_policy(const std::string& kind, const ScenarioConfig& cfg,
                                    const std::string& checkpoint, std::ostream& err) {
  auto p = make_policy(kind, cfg, derive_seed(cfg.rng_seed, 7));
  if (!checkpoint.empty()) {
    if (!p->learns()) throw ConfigError("policy '" + kind + "' takes no checkpoint");
    p->load(checkpoint);
  } else if (p->learns()) {
    err << "warning: evaluating an untrained " << kind << " policy\n";
  }
  return p;
}

int cmd_eval(const Common& c, const std::string& policy, const std::string& checkpoint,
             const std::string& migration, int episodes, const Extras& x, std::ostream& out,
             std::ostream& err) {
  ScenarioConfig cfg = resolve(c);
  if (!migration.empty()) cfg.migration_enabled = parse_switch(migration);
  const fs::path dir = c.outdir;
  fs::create_directories(dir);
  OpenSinks open(dir, x, cfg);
  std::vector<std::string> names{"kpis.csv"};
  names.insert(names.end(), open.names.begin(), open.names.end());
  write_manifest(dir, "eval", cfg, names, {{"policy", policy}, {"checkpoint", checkpoint}});
  auto p = load_policy(policy, cfg, checkpoint, err);
  const EpisodeKpis k = evaluate(cfg, *p, episodes, cfg.rng_seed, open.sinks);
  const std::string row = kpi_row(policy, cfg, episodes, k);
  auto f = open_out(dir / "kpis.csv");
  f << kpi_header() << '\n' << row << '\n';
  out << kpi_header() << '\n' << row << '\n';
  return kExitOk;
}

int cmd_replay(const std::string& path, std::ostream& out) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open episode log '" + path + "'");
  const ReplayReport r = replay_log(in);
  out << r.slots << " slots replayed, " << r.divergences << " divergences\n";
  if (r.divergences > 0) {
    out << "first divergence: " << r.first << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

struct SweepSpec {
  std::vector<double> mobility{0.0, 3.0, 6.0, 9.0};
  std::vector<int> users;
  std::vector<std::string> migration{"on", "off"};
  int train_episodes = 0;
  int parallel = 1;
};

int cmd_sweep(const Common& c, const std::string& policy, const std::string& checkpoint,
              int episodes, const SweepSpec& sw, std::ostream& out, std::ostream& err) {
  const ScenarioConfig base = resolve(c);
  std::vector<ScenarioConfig> cells;
  const std::vector<int> users = sw.users.empty() ? std::vector<int>{base.num_users} : sw.users;
  for (const auto& m : sw.migration)
    for (int k : users)
      for (double v : sw.mobility) {
        ScenarioConfig cell = base;
        cell.migration_enabled = parse_switch(m);
        cell.num_users = k;
        cell.user_speed_max = v / 3.6;
        if (auto issues = validate_config(cell); !issues.empty())
          throw ConfigError("sweep cell invalid: " + issues.front().path + ": " + issues.front().message);
        cells.push_back(cell);
      }
  const fs::path dir = c.outdir;
  fs::create_directories(dir);
  write_manifest(dir, "sweep", base, {"sweep.csv"},
                 {{"policy", policy}, {"checkpoint", checkpoint}, {"train_episodes", sw.train_episodes}});

  std::vector<std::string> rows(cells.size());
  std::mutex err_mu;
  auto run_cell = [&](std::size_t i) {
    const ScenarioConfig& cfg = cells[i];
    std::unique_ptr<Policy> p;
    if (sw.train_episodes > 0 && make_policy(policy, cfg, 0)->learns()) {
      TrainOptions opt;
      opt.policy = policy;
      opt.episodes = sw.train_episodes;
      opt.seed = cfg.rng_seed;
      p = run_training(cfg, opt).policy;
    } else {
      std::ostringstream warn;
      p = load_policy(policy, cfg, checkpoint, warn);
      std::lock_guard lock(err_mu);
      err << warn.str();
    }
    rows[i] = kpi_row(policy, cfg, episodes, evaluate(cfg, *p, episodes, cfg.rng_seed));
  };
  const std::size_t workers = static_cast<std::size_t>(std::max(1, sw.parallel));
  if (workers == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < cells.size(); i += workers) run_cell(i);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
  }
  auto f = open_out(dir / "sweep.csv");
  f << kpi_header() << '\n';
  out << kpi_header() << '\n';
  for (const auto& r : rows) {
    f << r << '\n';
    out << r << '\n';
  }
  return kExitOk;
}

int cmd_validate(const Common& c, std::ostream& out) {
  const ScenarioConfig cfg = resolve(c);
  const ActionLayout lay(cfg);
  out << "config ok: " << cfg.num_uavs << " UAVs, " << cfg.num_users << " users, observation "
      << lay.obs_dim << ", continuous action " << lay.cont_dim << ", discrete heads "
      << lay.disc_dim() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"NFV multi-UAV network simulator and hybrid-action learner", "uavnfv"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);

  Common common;
  Extras extras;
  std::string policy = "hhcda", checkpoint, migration, log_path;
  int episodes = 0, eval_episodes = 10, sweep_episodes = 10, checkpoint_every = 0;
  SweepSpec sweep;

  auto* train = app.add_subcommand("train", "Train a policy and write its learning curve");
  add_common(train, common);
  add_extras(train, extras);
  train->add_option("--policy", policy, "hhcda | quantized-ddpg | random | greedy");
  train->add_option("--episodes", episodes, "Episodes (default: agent.episodes)");
  train->add_option("--checkpoint-every", checkpoint_every, "Episodes between checkpoints");

  auto* eval = app.add_subcommand("eval", "Evaluate a frozen policy");
  add_common(eval, common);
  add_extras(eval, extras);
  eval->add_option("--policy", policy, "hhcda | quantized-ddpg | random | greedy");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint written by train");
  eval->add_option("--migration", migration, "on | off");
  eval->add_option("--episodes", eval_episodes, "Evaluation episodes")->capture_default_str();

  auto* replay = app.add_subcommand("replay", "Re-execute an episode log and compare rewards");
  replay->add_option("log", log_path, "episode_log.jsonl")->required();

  auto* sw = app.add_subcommand("sweep", "Evaluate over mobility, user count and migration cells");
  add_common(sw, common);
  sw->add_option("--policy", policy, "hhcda | quantized-ddpg | random | greedy");
  sw->add_option("--checkpoint", checkpoint, "Checkpoint shared by all cells");
  sw->add_option("--episodes", sweep_episodes, "Evaluation episodes per cell")->capture_default_str();
  sw->add_option("--mobility", sweep.mobility, "User speeds in km/h");
  sw->add_option("--users", sweep.users, "User counts");
  sw->add_option("--migration", sweep.migration, "on and/or off");
  sw->add_option("--train-episodes", sweep.train_episodes, "Train a fresh policy per cell");
  sw->add_option("--parallel", sweep.parallel, "Cells evaluated concurrently");

  auto* validate = app.add_subcommand("validate-config", "Check a config and print its shapes");
  add_common(validate, common);

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "uavnfv");
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version_string() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(common, policy, episodes, checkpoint_every, extras, out);
    if (*eval) return cmd_eval(common, policy, checkpoint, migration, eval_episodes, extras, out, err);
    if (*replay) return cmd_replay(log_path, out);
    if (*sw) return cmd_sweep(common, policy, checkpoint, sweep_episodes, sweep, out, err);
    if (*validate) return cmd_validate(common, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace uavnfv
