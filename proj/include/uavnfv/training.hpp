#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "uavnfv/agent.hpp"
#include "uavnfv/config.hpp"
#include "uavnfv/metrics.hpp"

namespace uavnfv {

// Optional per-slot outputs; null streams are skipped.
struct Sinks {
  std::ostream* metrics = nullptr;      // metrics CSV rows
  std::ostream* trajectory = nullptr;   // UAV poses per slot
  std::ostream* placements = nullptr;   // JSON lines
  std::ostream* episode_log = nullptr;  // JSON lines, replayable
};

struct EpisodeSummary {
  int episode = 0;
  EpisodeKpis kpis;
  double epsilon = 0.0;
  double lr = 0.0;
};

struct EpisodeRun {
  std::vector<SlotMetrics> slots;
  EpisodeKpis kpis;
};

// One episode: explore/learn control exploration noise and replay updates.
EpisodeRun run_episode(Env& env, Policy& policy, int episode, std::uint64_t env_seed, bool explore,
                       bool learn, const Sinks& sinks = {});

std::uint64_t train_episode_seed(std::uint64_t seed, int episode);
std::uint64_t eval_episode_seed(std::uint64_t seed, int episode);

struct TrainOptions {
  std::string policy = "hhcda";
  int episodes = 0;  // 0 = cfg.agent.episodes
  std::uint64_t seed = 1;
  int checkpoint_every = 0;           // episodes; 0 = final only
  std::filesystem::path checkpoint_dir;  // empty = no checkpoints
  Sinks sinks;
  std::function<void(const EpisodeSummary&)> on_episode;
};

struct TrainResult {
  std::vector<EpisodeSummary> curve;
  std::unique_ptr<Policy> policy;
};

TrainResult run_training(const ScenarioConfig& cfg, const TrainOptions& opt);

// Frozen-policy rollouts; KPIs pooled over all slots of all episodes.
EpisodeKpis evaluate(const ScenarioConfig& cfg, Policy& policy, int episodes, std::uint64_t seed,
                     const Sinks& sinks = {});

std::string learning_curve_header();
std::string learning_curve_row(const EpisodeSummary& s);
std::string trajectory_header();

struct ReplayReport {
  int slots = 0;
  int divergences = 0;
  std::string first;  // description of the first divergence
};

// Re-executes an episode log and compares every reward bit for bit.
// Throws std::runtime_error on malformed or truncated input.
ReplayReport replay_log(std::istream& log);

}  // namespace uavnfv
