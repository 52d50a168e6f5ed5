#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hama/nn.hpp"

namespace hama::hgat {

// Encoder variants. SG_IAA collapses all groups into a single cluster;
// HG_NA uses uniform weights at both attention levels; HG_IAA keeps only
// inter-agent attention; HG_IGA keeps only inter-group attention; HG_IAGA
// is the full model.
enum class Variant { SG_IAA, HG_NA, HG_IAA, HG_IGA, HG_IAGA };

std::string variant_name(Variant v);
std::optional<Variant> parse_variant(const std::string& name);

enum class Side { Actor, Critic };

struct EncoderConfig {
  Variant variant = Variant::HG_IAGA;
  Side side = Side::Actor;
  std::size_t world_groups = 1;  // K as defined by the scenario
  std::size_t self_dim = 0;
  std::size_t neighbor_dim = 0;
  std::size_t embed_dim = 256;  // d_h
  std::size_t hidden = 256;

  std::size_t groups() const { return variant == Variant::SG_IAA ? 1 : world_groups; }
  bool agent_attention() const {
    return variant != Variant::HG_NA && variant != Variant::HG_IGA;
  }
  bool group_attention() const {
    return variant == Variant::HG_IGA || variant == Variant::HG_IAGA;
  }
};

// One pair-embedding net and one attention-logit net per group plus a single
// inter-group net over the concatenated group embeddings.
struct EncoderParams {
  std::vector<nn::Mlp2> pair_embed;  // f_M, in = self_dim + neighbor_dim, out = d_h
  std::vector<nn::Mlp2> attn_logit;  // f_alpha, out = 1
  nn::Mlp2 group_attn;               // f_beta, in = K*d_h, out = K
};

EncoderParams init_encoder(const EncoderConfig& cfg, std::mt19937_64& rng);

struct EncoderGrads {
  std::vector<nn::Mlp2Grads> pair_embed;
  std::vector<nn::Mlp2Grads> attn_logit;
  nn::Mlp2Grads group_attn;

  EncoderGrads() = default;
  explicit EncoderGrads(const EncoderParams& p);
  void zero();
};

// One agent's view as the encoder sees it: for the critic side, self and
// neighbor vectors already carry the action slots.
struct EncoderInput {
  nn::Vec self;
  std::vector<std::vector<nn::Vec>> neighbors;    // per effective group
  std::vector<std::vector<int>> neighbor_ids;     // parallel to neighbors
};

struct AttentionRecord {
  std::vector<std::vector<double>> alpha;  // per group, per neighbor
  std::vector<double> beta;                // per group
  std::vector<std::vector<int>> neighbor_ids;
};

struct EncodeCache {
  EncoderInput input;
  std::vector<std::vector<nn::Mlp2Cache>> pair_caches;
  std::vector<std::vector<nn::Mlp2Cache>> logit_caches;
  std::vector<std::vector<double>> alpha;
  std::vector<nn::Vec> group_emb;  // hbar_k
  nn::Mlp2Cache beta_cache;
  std::vector<double> beta;
};

/// Full encoder: pair embeddings, inter-agent attention per group,
/// inter-group attention. Returns the contextualized embedding h_i.
nn::Vec encode(const EncoderConfig& cfg, const EncoderParams& params,
               const EncoderInput& input, EncodeCache* cache = nullptr,
               AttentionRecord* trace = nullptr);

struct EncodeInputGrads {
  nn::Vec self;
  std::vector<std::vector<nn::Vec>> neighbors;
};

/// Backward through the encoder. Accumulates parameter gradients into
/// `grads` and returns gradients w.r.t. the input vectors (the self slice
/// carries d h_i / d a_i on the critic side).
EncodeInputGrads encode_backward(const EncoderConfig& cfg, const EncoderParams& params,
                                 const EncodeCache& cache, const nn::Vec& grad_h,
                                 EncoderGrads& grads);

// Flat-parameter plumbing.
std::size_t param_count(const EncoderParams& p);
void append_params(const EncoderParams& p, nn::Vec& out);
void append_grads(const EncoderGrads& g, nn::Vec& out);
void load_params(EncoderParams& p, const nn::Vec& flat, std::size_t& pos);

}  // namespace hama::hgat
