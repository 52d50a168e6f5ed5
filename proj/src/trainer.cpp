#include "hama/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hama::trainer {

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[head_] = std::move(t);
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::mt19937_64& rng,
                                                      std::size_t n) const {
  if (n > data_.size()) throw std::invalid_argument("sample: batch larger than buffer");
  std::vector<std::size_t> out;
  out.reserve(n);
  if (n * 2 >= data_.size()) {
    std::vector<std::size_t> all(data_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    for (std::size_t i = 0; i < n; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, all.size() - 1);
      std::swap(all[i], all[pick(rng)]);
      out.push_back(all[i]);
    }
  } else {
    std::vector<bool> used(data_.size(), false);
    std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
    while (out.size() < n) {
      const std::size_t i = pick(rng);
      if (!used[i]) {
        used[i] = true;
        out.push_back(i);
      }
    }
  }
  return out;
}

Trainer::Trainer(world::WorldConfig wcfg, TrainConfig tcfg)
    : wcfg_(std::move(wcfg)),
      tcfg_(tcfg),
      world_(wcfg_),
      buffer_(tcfg.capacity),
      rng_(tcfg.seed) {
  const std::size_t K = wcfg_.groups.size();
  agent_slot_.assign(static_cast<std::size_t>(wcfg_.num_acting()), 0);
  for (std::size_t k = 0; k < K; ++k) {
    if (!wcfg_.groups[k].acting) continue;
    GroupAgent ga;
    ga.world_group = static_cast<int>(k);
    for (const world::Entity& e : world_.entities()) {
      if (e.group == static_cast<int>(k)) {
        ga.acting_indices.push_back(e.acting_index);
        agent_slot_[static_cast<std::size_t>(e.acting_index)] = agents_.size();
      }
    }
    ga.actor = policy::make_actor(tcfg_.variant, K, tcfg_.embed_dim, tcfg_.hidden, rng_);
    ga.critic = policy::make_critic(tcfg_.variant, K, tcfg_.embed_dim, tcfg_.hidden, rng_);
    ga.actor_target = ga.actor;
    ga.critic_target = ga.critic;
    ga.actor_opt = nn::AdamState(policy::param_count(ga.actor), {tcfg_.lr_actor});
    ga.critic_opt = nn::AdamState(policy::param_count(ga.critic), {tcfg_.lr_critic});
    agents_.push_back(std::move(ga));
  }
  last_critic_loss_.assign(agents_.size(), 0.0);
  last_actor_value_.assign(agents_.size(), 0.0);
}

std::size_t Trainer::warmup_size() const {
  const auto frac = static_cast<std::size_t>(tcfg_.warmup_fraction *
                                             static_cast<double>(tcfg_.capacity));
  return std::max(tcfg_.batch, frac);
}

world::ActionVec Trainer::select_action(int acting_index, const world::Observation& obs,
                                        bool explore, double sigma) {
  const GroupAgent& ga = agents_[agent_slot_[static_cast<std::size_t>(acting_index)]];
  nn::Vec logits = policy::actor_logits(ga.actor, policy::build_input(obs, ga.actor.cfg));
  if (explore && sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& l : logits) l += noise(rng_);
  }
  const nn::Vec p = nn::softmax(logits);
  world::ActionVec a;
  for (std::size_t i = 0; i < world::kActionDim; ++i) a.a[i] = p[i];
  return a;
}

std::vector<std::vector<world::ActionVec>> Trainer::target_next_actions(
    const std::vector<const Transition*>& batch) const {
  std::vector<std::vector<world::ActionVec>> out(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    out[b].resize(t.next_obs.size());
    for (std::size_t i = 0; i < t.next_obs.size(); ++i) {
      const GroupAgent& ga = agents_[agent_slot_[i]];
      out[b][i] = policy::greedy_action(ga.actor_target, t.next_obs[i]);
    }
  }
  return out;
}

double Trainer::critic_update(std::size_t g, const std::vector<const Transition*>& batch) {
  GroupAgent& ga = agents_.at(g);
  const auto next_actions = target_next_actions(batch);

  policy::CriticGrads grads(ga.critic);
  const double count = static_cast<double>(batch.size() * ga.acting_indices.size());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& t = *batch[b];
    for (int i : ga.acting_indices) {
      const auto idx = static_cast<std::size_t>(i);
      double y = t.rewards[idx];
      if (!t.done) {
        const auto in_next = policy::build_input(t.next_obs[idx], ga.critic_target.cfg,
                                                 &next_actions[b], &next_actions[b][idx]);
        y += tcfg_.gamma * policy::critic_q(ga.critic_target, in_next);
      }
      const auto in = policy::build_input(t.obs[idx], ga.critic.cfg, &t.actions,
                                          &t.actions[idx]);
      policy::CriticEval cache;
      const double q = policy::critic_q(ga.critic, in, &cache);
      const double err = q - y;
      loss += err * err;
      policy::critic_backward(ga.critic, cache, 2.0 * err / count, grads);
    }
  }
  loss /= count;
  if (!std::isfinite(loss)) throw std::runtime_error("critic_update: non-finite loss");

  nn::Vec params = policy::get_params(ga.critic);
  ga.critic_opt.step(params, policy::flatten(grads));
  policy::set_params(ga.critic, params);
  return loss;
}

double Trainer::actor_update(std::size_t g, const std::vector<const Transition*>& batch) {
  return actor_update_custom(g, batch, nullptr);
}

double Trainer::actor_update_custom(std::size_t g, const std::vector<const Transition*>& batch,
                                    const ActionGradFn& grad_fn) {
  GroupAgent& ga = agents_.at(g);
  policy::ActorGrads grads(ga.actor);
  policy::CriticGrads scratch(ga.critic);
  const double count = static_cast<double>(batch.size() * ga.acting_indices.size());
  double value = 0.0;

  for (const Transition* tp : batch) {
    const Transition& t = *tp;
    for (int i : ga.acting_indices) {
      const auto idx = static_cast<std::size_t>(i);
      policy::ActorEval aeval;
      policy::actor_logits(ga.actor, policy::build_input(t.obs[idx], ga.actor.cfg), &aeval);
      const nn::Vec action = nn::softmax(aeval.logits);

      nn::Vec grad_a;
      if (grad_fn) {
        grad_a = grad_fn(action);
      } else {
        // Re-evaluate the critic with the agent's own action replaced by the
        // current policy output; other agents' actions come from the sample.
        std::vector<world::ActionVec> joint = t.actions;
        world::ActionVec self_action;
        for (std::size_t c = 0; c < world::kActionDim; ++c) self_action.a[c] = action[c];
        joint[idx] = self_action;
        const auto in = policy::build_input(t.obs[idx], ga.critic.cfg, &joint, &self_action);
        policy::CriticEval ceval;
        value += policy::critic_q(ga.critic, in, &ceval);
        const auto igrads = policy::critic_backward(ga.critic, ceval, 1.0, scratch);
        grad_a.assign(igrads.self.end() - world::kActionDim, igrads.self.end());
      }
      const nn::Vec grad_logits = nn::softmax_backward(action, grad_a);
      policy::actor_backward(ga.actor, aeval, grad_logits, grads);
    }
  }
  value /= count;

  nn::Vec flat = policy::flatten(grads);
  for (double& x : flat) x = -x / count;  // ascend
  nn::Vec params = policy::get_params(ga.actor);
  ga.actor_opt.step(params, flat);
  policy::set_params(ga.actor, params);
  return value;
}

void Trainer::soft_update_targets() {
  for (GroupAgent& ga : agents_) {
    nn::Vec at = policy::get_params(ga.actor_target);
    nn::soft_update(policy::get_params(ga.actor), at, tcfg_.tau);
    policy::set_params(ga.actor_target, at);

    nn::Vec ct = policy::get_params(ga.critic_target);
    nn::soft_update(policy::get_params(ga.critic), ct, tcfg_.tau);
    policy::set_params(ga.critic_target, ct);
  }
}

void Trainer::update_step() {
  const auto idx = buffer_.sample_indices(rng_, tcfg_.batch);
  std::vector<const Transition*> batch;
  batch.reserve(idx.size());
  for (std::size_t i : idx) batch.push_back(&buffer_.at(i));
  for (std::size_t g = 0; g < agents_.size(); ++g) {
    last_critic_loss_[g] = critic_update(g, batch);
    last_actor_value_[g] = actor_update(g, batch);
  }
  soft_update_targets();
}

void Trainer::train(const MetricsSink& metrics, const CheckpointSink& checkpoint) {
  const int n = world_.num_acting();
  const long noise_steps =
      tcfg_.max_steps > 0 ? tcfg_.max_steps : tcfg_.episodes * wcfg_.horizon;
  std::size_t since_update = 0;

  std::vector<double> window_reward(agents_.size(), 0.0);
  std::vector<long> window_count(agents_.size(), 0);

  long episode = 0;
  for (; episode < tcfg_.episodes; ++episode) {
    if (tcfg_.max_steps > 0 && global_step_ >= tcfg_.max_steps) break;
    world_.reset(rng_);
    std::vector<world::Observation> obs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) obs[static_cast<std::size_t>(i)] = world_.observe(i);

    for (int t = 0; t < wcfg_.horizon; ++t) {
      const double frac =
          noise_steps > 1 ? static_cast<double>(global_step_) / static_cast<double>(noise_steps)
                          : 1.0;
      const double sigma =
          tcfg_.noise_start + (tcfg_.noise_end - tcfg_.noise_start) * std::min(frac, 1.0);

      std::vector<world::ActionVec> actions(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        actions[static_cast<std::size_t>(i)] =
            select_action(i, obs[static_cast<std::size_t>(i)], true, sigma);

      const world::StepResult res = world_.step(actions);
      std::vector<world::Observation> next_obs(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) next_obs[static_cast<std::size_t>(i)] = world_.observe(i);

      buffer_.push(Transition{obs, actions, res.rewards, next_obs, res.done});
      for (int i = 0; i < n; ++i) {
        const std::size_t g = agent_slot_[static_cast<std::size_t>(i)];
        window_reward[g] += res.rewards[static_cast<std::size_t>(i)];
        ++window_count[g];
      }

      ++global_step_;
      ++since_update;
      if (buffer_.size() >= warmup_size() && since_update >= tcfg_.update_every) {
        since_update = 0;
        update_step();
      }

      if (metrics && global_step_ % static_cast<long>(tcfg_.metrics_window) == 0) {
        Metrics m;
        m.step = global_step_;
        m.episode = episode;
        for (std::size_t g = 0; g < agents_.size(); ++g)
          m.group_reward.push_back(window_count[g] > 0
                                       ? window_reward[g] / static_cast<double>(window_count[g])
                                       : 0.0);
        m.critic_loss = last_critic_loss_;
        m.actor_value = last_actor_value_;
        metrics(m);
        std::fill(window_reward.begin(), window_reward.end(), 0.0);
        std::fill(window_count.begin(), window_count.end(), 0);
      }

      obs = std::move(next_obs);
      if (res.done) break;
      if (tcfg_.max_steps > 0 && global_step_ >= tcfg_.max_steps) break;
    }

    if (checkpoint && tcfg_.checkpoint_every > 0 && (episode + 1) % tcfg_.checkpoint_every == 0)
      checkpoint(episode + 1);
  }
  if (checkpoint) checkpoint(episode);
}

}  // namespace hama::trainer
