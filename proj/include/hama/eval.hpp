#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hama/checkpoint.hpp"
#include "hama/policy.hpp"
#include "hama/trainer.hpp"
#include "hama/world.hpp"

namespace hama::eval {

struct PolicyHandle {
  enum class Kind { Trained, Heuristic1, Heuristic2, Random, Hold };
  Kind kind = Kind::Hold;
  std::shared_ptr<const policy::ActorStack> actor;  // Trained only

  static PolicyHandle trained(std::shared_ptr<const policy::ActorStack> a) {
    return {Kind::Trained, std::move(a)};
  }
  static PolicyHandle scripted(Kind k) { return {k, nullptr}; }
};

/// One handle per acting group slot, from a loaded checkpoint.
std::vector<PolicyHandle> handles_from(const ckpt::Policy& p);

struct EpisodeStats {
  int steps = 0;
  bool success = false;             // all preys captured
  std::vector<double> agent_return; // undiscounted, per acting agent
  double predator_positive = 0.0;   // summed positive predator reward
  double mean_penalty = 0.0;        // coop-nav: mean of -reward per step+agent
  double occupation = 0.0;          // coop-nav: landmark occupation at final step
};

struct TraceRecord {
  int episode = 0, step = 0, agent = -1, group = 0;
  std::vector<int> neighbor_ids;
  std::vector<double> alpha;
  std::vector<double> beta;
};
using TraceSink = std::function<void(const TraceRecord&)>;

struct EntitySnap {
  double px = 0, py = 0, vx = 0, vy = 0;
  bool captured = false;
};
struct StepLog {
  std::vector<EntitySnap> entities;
  std::vector<double> rewards;
  std::vector<world::CaptureEvent> events;
  bool done = false;
};
struct EpisodeLog {
  int episode = 0;
  std::vector<StepLog> steps;
};
using LogSink = std::function<void(const EpisodeLog&)>;

/// Frozen-policy rollouts: no exploration noise, no learning.
std::vector<EpisodeStats> run_episodes(const world::WorldConfig& wcfg,
                                       const std::vector<PolicyHandle>& handles, int episodes,
                                       std::uint64_t seed, const TraceSink& trace = nullptr,
                                       const LogSink& log = nullptr, int episode_base = 0);

struct EvalReport {
  world::Scenario scenario = world::Scenario::CoopNav;
  int episodes_per_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<EpisodeStats> raw;        // all seeds concatenated
  std::vector<double> seed_score;       // per-seed predator per-step score
  std::vector<double> seed_penalty;     // per-seed coop-nav mean penalty
  std::vector<double> seed_success;     // per-seed success rate
  std::vector<double> seed_occupation;  // per-seed occupation
  double score_mean = 0, score_std = 0;
  double penalty_mean = 0, penalty_std = 0;
  double success_mean = 0, success_std = 0;
  double occupation_mean = 0, occupation_std = 0;
};

EvalReport cross_play(const world::WorldConfig& wcfg, const std::vector<PolicyHandle>& handles,
                      int episodes, const std::vector<std::uint64_t>& seeds);

// Metric reductions over a set of finished episodes.
double metric_mean_penalty(const std::vector<EpisodeStats>& eps);
double metric_predator_score(const std::vector<EpisodeStats>& eps, int horizon, int n_predators);
double metric_success_rate(const std::vector<EpisodeStats>& eps);
double metric_occupation(const std::vector<EpisodeStats>& eps);

double discounted_return(const std::vector<double>& step_rewards, double gamma);

/// Runs a (3,3)-trained policy on every (m,n) cell without retraining;
/// returns success rates indexed [m-1][n-1].
std::vector<std::vector<double>> transfer_eval(const ckpt::Policy& p, int m_max, int n_max,
                                               int episodes, std::uint64_t seed);

void collect_attention(const world::WorldConfig& wcfg, const std::vector<PolicyHandle>& handles,
                       int episodes, std::uint64_t seed, const TraceSink& sink);

struct AblationEntry {
  hgat::Variant predator_variant;
  double score_mean = 0, score_std = 0;
};

/// Trains each encoder variant by self-play (cached as checkpoints under
/// cache_dir), then plays each variant's predators against the HG-IAGA prey.
std::vector<AblationEntry> ablation_grid(const world::WorldConfig& wcfg,
                                         trainer::TrainConfig base, const std::string& cache_dir,
                                         int episodes, const std::vector<std::uint64_t>& seeds);

}  // namespace hama::eval
