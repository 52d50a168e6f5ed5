#include "hama/policy.hpp"

#include <stdexcept>

namespace hama::policy {

namespace {

hgat::EncoderConfig encoder_config(hgat::Variant variant, hgat::Side side,
                                   std::size_t world_groups, std::size_t embed_dim,
                                   std::size_t hidden) {
  hgat::EncoderConfig cfg;
  cfg.variant = variant;
  cfg.side = side;
  cfg.world_groups = world_groups;
  cfg.embed_dim = embed_dim;
  cfg.hidden = hidden;
  if (side == hgat::Side::Actor) {
    cfg.self_dim = world::kSelfDim;
    cfg.neighbor_dim = world::kNeighborDim;
  } else {
    cfg.self_dim = world::kSelfDim + world::kActionDim;
    cfg.neighbor_dim = world::kNeighborDim + world::kActionDim;
  }
  return cfg;
}

}  // namespace

ActorStack make_actor(hgat::Variant variant, std::size_t world_groups, std::size_t embed_dim,
                      std::size_t hidden, std::mt19937_64& rng) {
  ActorStack a;
  a.cfg = encoder_config(variant, hgat::Side::Actor, world_groups, embed_dim, hidden);
  a.enc = hgat::init_encoder(a.cfg, rng);
  a.head = nn::make_mlp(embed_dim, hidden, world::kActionDim, nn::Activation::Identity, rng);
  return a;
}

CriticStack make_critic(hgat::Variant variant, std::size_t world_groups, std::size_t embed_dim,
                        std::size_t hidden, std::mt19937_64& rng) {
  CriticStack c;
  c.cfg = encoder_config(variant, hgat::Side::Critic, world_groups, embed_dim, hidden);
  c.enc = hgat::init_encoder(c.cfg, rng);
  c.head = nn::make_mlp(embed_dim, hidden, 1, nn::Activation::Identity, rng);
  return c;
}

hgat::EncoderInput build_input(const world::Observation& obs, const hgat::EncoderConfig& cfg,
                               const std::vector<world::ActionVec>* joint_actions,
                               const world::ActionVec* self_action) {
  const bool critic = cfg.side == hgat::Side::Critic;
  if (critic && (!joint_actions || !self_action))
    throw std::invalid_argument("build_input: critic side requires actions");

  hgat::EncoderInput in;
  in.self = obs.self;
  if (critic) in.self.insert(in.self.end(), self_action->a.begin(), self_action->a.end());

  const std::size_t K = cfg.groups();
  in.neighbors.resize(K);
  in.neighbor_ids.resize(K);
  for (std::size_t k = 0; k < obs.per_group.size(); ++k) {
    const std::size_t slot = cfg.variant == hgat::Variant::SG_IAA ? 0 : k;
    for (const world::NeighborFeat& nf : obs.per_group[k]) {
      nn::Vec feat = nf.feat;
      if (critic) {
        if (nf.acting_index >= 0) {
          const auto& a = joint_actions->at(static_cast<std::size_t>(nf.acting_index)).a;
          feat.insert(feat.end(), a.begin(), a.end());
        } else {
          feat.insert(feat.end(), world::kActionDim, 0.0);
        }
      }
      in.neighbors[slot].push_back(std::move(feat));
      in.neighbor_ids[slot].push_back(nf.id);
    }
  }
  return in;
}

nn::Vec actor_logits(const ActorStack& a, const hgat::EncoderInput& in, ActorEval* cache,
                     hgat::AttentionRecord* trace) {
  hgat::EncodeCache local;
  hgat::EncodeCache* ec = cache ? &cache->enc_cache : (trace ? &local : nullptr);
  const nn::Vec h = hgat::encode(a.cfg, a.enc, in, ec, trace);
  nn::Vec logits = nn::mlp_forward(a.head, h, cache ? &cache->head_cache : nullptr);
  if (cache) cache->logits = logits;
  return logits;
}

world::ActionVec greedy_action(const ActorStack& a, const world::Observation& obs,
                               hgat::AttentionRecord* trace) {
  const nn::Vec logits = actor_logits(a, build_input(obs, a.cfg), nullptr, trace);
  const nn::Vec p = nn::softmax(logits);
  world::ActionVec act;
  for (std::size_t i = 0; i < world::kActionDim; ++i) act.a[i] = p[i];
  return act;
}

void actor_backward(const ActorStack& a, const ActorEval& cache, const nn::Vec& grad_logits,
                    ActorGrads& grads) {
  const nn::Vec grad_h = nn::mlp_backward(a.head, cache.head_cache, grad_logits, grads.head);
  hgat::encode_backward(a.cfg, a.enc, cache.enc_cache, grad_h, grads.enc);
}

double critic_q(const CriticStack& c, const hgat::EncoderInput& in, CriticEval* cache) {
  hgat::EncodeCache local;
  hgat::EncodeCache* ec = cache ? &cache->enc_cache : nullptr;
  const nn::Vec h = hgat::encode(c.cfg, c.enc, in, ec, nullptr);
  const nn::Vec q = nn::mlp_forward(c.head, h, cache ? &cache->head_cache : nullptr);
  if (cache) cache->q = q[0];
  return q[0];
}

hgat::EncodeInputGrads critic_backward(const CriticStack& c, const CriticEval& cache,
                                       double grad_q, CriticGrads& grads) {
  const nn::Vec grad_h = nn::mlp_backward(c.head, cache.head_cache, {grad_q}, grads.head);
  return hgat::encode_backward(c.cfg, c.enc, cache.enc_cache, grad_h, grads.enc);
}

std::size_t param_count(const ActorStack& a) {
  return hgat::param_count(a.enc) + nn::param_count(a.head);
}
std::size_t param_count(const CriticStack& c) {
  return hgat::param_count(c.enc) + nn::param_count(c.head);
}

nn::Vec get_params(const ActorStack& a) {
  nn::Vec out;
  out.reserve(param_count(a));
  hgat::append_params(a.enc, out);
  nn::append_params(a.head, out);
  return out;
}

nn::Vec get_params(const CriticStack& c) {
  nn::Vec out;
  out.reserve(param_count(c));
  hgat::append_params(c.enc, out);
  nn::append_params(c.head, out);
  return out;
}

void set_params(ActorStack& a, const nn::Vec& flat) {
  std::size_t pos = 0;
  hgat::load_params(a.enc, flat, pos);
  nn::load_params(a.head, flat, pos);
  if (pos != flat.size()) throw std::invalid_argument("set_params: size mismatch");
}

void set_params(CriticStack& c, const nn::Vec& flat) {
  std::size_t pos = 0;
  hgat::load_params(c.enc, flat, pos);
  nn::load_params(c.head, flat, pos);
  if (pos != flat.size()) throw std::invalid_argument("set_params: size mismatch");
}

nn::Vec flatten(const ActorGrads& g) {
  nn::Vec out;
  hgat::append_grads(g.enc, out);
  nn::append_grads(g.head, out);
  return out;
}

nn::Vec flatten(const CriticGrads& g) {
  nn::Vec out;
  hgat::append_grads(g.enc, out);
  nn::append_grads(g.head, out);
  return out;
}

}  // namespace hama::policy
