#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "hama/policy.hpp"
#include "hama/world.hpp"

namespace hama::trainer {

struct Transition {
  std::vector<world::Observation> obs;
  std::vector<world::ActionVec> actions;
  std::vector<double> rewards;
  std::vector<world::Observation> next_obs;
  bool done = false;
};

// FIFO ring buffer with uniform without-replacement minibatch sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}

  void push(Transition t);
  std::vector<std::size_t> sample_indices(std::mt19937_64& rng, std::size_t n) const;
  const Transition& at(std::size_t i) const { return data_[i]; }
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::vector<Transition> data_;
};

struct TrainConfig {
  double gamma = 0.95;
  double tau = 1e-3;
  double lr_actor = 1e-4;
  double lr_critic = 1e-3;
  std::size_t batch = 1024;
  std::size_t update_every = 100;   // stored joint transitions between updates
  std::size_t capacity = 1'000'000;
  double warmup_fraction = 0.025;   // of capacity
  long episodes = 120'000;
  long max_steps = 0;               // 0 = bounded by episodes only
  double noise_start = 0.3;         // Gaussian sigma on logits, linear decay
  double noise_end = 0.05;
  std::uint64_t seed = 0;
  std::size_t embed_dim = 256;
  std::size_t hidden = 256;
  hgat::Variant variant = hgat::Variant::HG_IAGA;
  long checkpoint_every = 1000;     // episodes
  std::size_t metrics_window = 10'000;  // steps
};

// Shared actor/critic stacks for one acting group, with target copies.
struct GroupAgent {
  int world_group = 0;
  std::vector<int> acting_indices;
  policy::ActorStack actor, actor_target;
  policy::CriticStack critic, critic_target;
  nn::AdamState actor_opt, critic_opt;
};

struct Metrics {
  long step = 0;
  long episode = 0;
  std::vector<double> group_reward;  // mean per step+agent over the window
  std::vector<double> critic_loss;   // last update, per group
  std::vector<double> actor_value;   // last update mean Q, per group
};

class Trainer {
 public:
  Trainer(world::WorldConfig wcfg, TrainConfig tcfg);

  using MetricsSink = std::function<void(const Metrics&)>;
  using CheckpointSink = std::function<void(long episode)>;

  void train(const MetricsSink& metrics = nullptr, const CheckpointSink& checkpoint = nullptr);

  world::ActionVec select_action(int acting_index, const world::Observation& obs, bool explore,
                                 double sigma);

  /// One Adam step on group g's critic over the given samples; returns MSE.
  double critic_update(std::size_t g, const std::vector<const Transition*>& batch);
  /// One ascent step on group g's actor along the critic's dQ/da chain;
  /// returns the mean critic value of the re-evaluated actions.
  double actor_update(std::size_t g, const std::vector<const Transition*>& batch);
  /// Same ascent machinery with an externally supplied action gradient.
  using ActionGradFn = std::function<nn::Vec(const nn::Vec& action)>;
  double actor_update_custom(std::size_t g, const std::vector<const Transition*>& batch,
                             const ActionGradFn& grad_fn);
  void soft_update_targets();

  std::vector<GroupAgent>& agents() { return agents_; }
  const std::vector<GroupAgent>& agents() const { return agents_; }
  ReplayBuffer& buffer() { return buffer_; }
  std::mt19937_64& rng() { return rng_; }
  const world::WorldConfig& world_config() const { return wcfg_; }
  const TrainConfig& train_config() const { return tcfg_; }
  std::size_t warmup_size() const;
  long global_step() const { return global_step_; }
  void set_global_step(long s) { global_step_ = s; }

  std::size_t group_of_agent(int acting_index) const { return agent_slot_[acting_index]; }

 private:
  void update_step();
  std::vector<std::vector<world::ActionVec>> target_next_actions(
      const std::vector<const Transition*>& batch) const;

  world::WorldConfig wcfg_;
  TrainConfig tcfg_;
  world::World world_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  std::vector<GroupAgent> agents_;
  std::vector<std::size_t> agent_slot_;  // acting index -> group slot
  long global_step_ = 0;
  std::vector<double> last_critic_loss_, last_actor_value_;
};

}  // namespace hama::trainer
