#pragma once

#include <random>

#include "hama/hgat.hpp"
#include "hama/world.hpp"

namespace hama::policy {

// Actor: HGAT encoder + head producing 5 action logits (softmax applied by
// the caller so exploration noise can be injected on the logits).
struct ActorStack {
  hgat::EncoderConfig cfg;
  hgat::EncoderParams enc;
  nn::Mlp2 head;  // d_h -> 5 logits
};

// Critic: HGAT encoder with action-bearing features + scalar Q head.
struct CriticStack {
  hgat::EncoderConfig cfg;
  hgat::EncoderParams enc;
  nn::Mlp2 head;  // d_h -> 1
};

ActorStack make_actor(hgat::Variant variant, std::size_t world_groups, std::size_t embed_dim,
                      std::size_t hidden, std::mt19937_64& rng);
CriticStack make_critic(hgat::Variant variant, std::size_t world_groups, std::size_t embed_dim,
                        std::size_t hidden, std::mt19937_64& rng);

/// Builds the encoder input for one agent. Actor side uses state-only
/// features; critic side appends the focal agent's action to the self vector
/// and each acting neighbor's action to its features (zeros for non-acting
/// groups). SG-IAA merges all groups into a single cluster.
hgat::EncoderInput build_input(const world::Observation& obs, const hgat::EncoderConfig& cfg,
                               const std::vector<world::ActionVec>* joint_actions = nullptr,
                               const world::ActionVec* self_action = nullptr);

struct ActorEval {
  nn::Vec logits;
  hgat::EncodeCache enc_cache;
  nn::Mlp2Cache head_cache;
};

nn::Vec actor_logits(const ActorStack& a, const hgat::EncoderInput& in,
                     ActorEval* cache = nullptr, hgat::AttentionRecord* trace = nullptr);

world::ActionVec greedy_action(const ActorStack& a, const world::Observation& obs,
                               hgat::AttentionRecord* trace = nullptr);

struct ActorGrads {
  hgat::EncoderGrads enc;
  nn::Mlp2Grads head;

  ActorGrads() = default;
  explicit ActorGrads(const ActorStack& a) : enc(a.enc), head(a.head) {}
  void zero() { enc.zero(); head.zero(); }
};

void actor_backward(const ActorStack& a, const ActorEval& cache, const nn::Vec& grad_logits,
                    ActorGrads& grads);

struct CriticEval {
  double q = 0.0;
  hgat::EncodeCache enc_cache;
  nn::Mlp2Cache head_cache;
};

double critic_q(const CriticStack& c, const hgat::EncoderInput& in, CriticEval* cache = nullptr);

struct CriticGrads {
  hgat::EncoderGrads enc;
  nn::Mlp2Grads head;

  CriticGrads() = default;
  explicit CriticGrads(const CriticStack& c) : enc(c.enc), head(c.head) {}
  void zero() { enc.zero(); head.zero(); }
};

/// Backward from dL/dQ; returns input gradients. The last kActionDim entries
/// of the returned self gradient are d(Q)/d(a_i).
hgat::EncodeInputGrads critic_backward(const CriticStack& c, const CriticEval& cache,
                                       double grad_q, CriticGrads& grads);

// Flat parameter access (optimizer, soft target updates, checkpoints).
std::size_t param_count(const ActorStack& a);
std::size_t param_count(const CriticStack& c);
nn::Vec get_params(const ActorStack& a);
nn::Vec get_params(const CriticStack& c);
void set_params(ActorStack& a, const nn::Vec& flat);
void set_params(CriticStack& c, const nn::Vec& flat);
nn::Vec flatten(const ActorGrads& g);
nn::Vec flatten(const CriticGrads& g);

}  // namespace hama::policy
