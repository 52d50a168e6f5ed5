#include "hama/hgat.hpp"

#include <stdexcept>

namespace hama::hgat {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::SG_IAA: return "SG-IAA";
    case Variant::HG_NA: return "HG-NA";
    case Variant::HG_IAA: return "HG-IAA";
    case Variant::HG_IGA: return "HG-IGA";
    case Variant::HG_IAGA: return "HG-IAGA";
  }
  return "?";
}

std::optional<Variant> parse_variant(const std::string& name) {
  for (Variant v : {Variant::SG_IAA, Variant::HG_NA, Variant::HG_IAA, Variant::HG_IGA,
                    Variant::HG_IAGA}) {
    if (variant_name(v) == name) return v;
  }
  return std::nullopt;
}

EncoderParams init_encoder(const EncoderConfig& cfg, std::mt19937_64& rng) {
  const std::size_t K = cfg.groups();
  const std::size_t pair_in = cfg.self_dim + cfg.neighbor_dim;
  EncoderParams p;
  p.pair_embed.reserve(K);
  p.attn_logit.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    p.pair_embed.push_back(
        nn::make_mlp(pair_in, cfg.hidden, cfg.embed_dim, nn::Activation::Identity, rng));
    p.attn_logit.push_back(nn::make_mlp(pair_in, cfg.hidden, 1, nn::Activation::Identity, rng));
  }
  p.group_attn = nn::make_mlp(K * cfg.embed_dim, cfg.hidden, K, nn::Activation::Identity, rng);
  return p;
}

EncoderGrads::EncoderGrads(const EncoderParams& p) {
  pair_embed.reserve(p.pair_embed.size());
  attn_logit.reserve(p.attn_logit.size());
  for (const auto& net : p.pair_embed) pair_embed.emplace_back(net);
  for (const auto& net : p.attn_logit) attn_logit.emplace_back(net);
  group_attn = nn::Mlp2Grads(p.group_attn);
}

void EncoderGrads::zero() {
  for (auto& g : pair_embed) g.zero();
  for (auto& g : attn_logit) g.zero();
  group_attn.zero();
}

namespace {

nn::Vec concat_pair(const nn::Vec& self, const nn::Vec& nbr) {
  nn::Vec x;
  x.reserve(self.size() + nbr.size());
  x.insert(x.end(), self.begin(), self.end());
  x.insert(x.end(), nbr.begin(), nbr.end());
  return x;
}

}  // namespace

nn::Vec encode(const EncoderConfig& cfg, const EncoderParams& params,
               const EncoderInput& input, EncodeCache* cache, AttentionRecord* trace) {
  const std::size_t K = cfg.groups();
  const std::size_t d = cfg.embed_dim;
  if (input.neighbors.size() != K)
    throw std::invalid_argument("encode: neighbor group count mismatch");
  if (input.self.size() != cfg.self_dim)
    throw std::invalid_argument("encode: self feature size mismatch");

  if (cache) {
    cache->input = input;
    cache->pair_caches.assign(K, {});
    cache->logit_caches.assign(K, {});
    cache->alpha.assign(K, {});
    cache->group_emb.assign(K, nn::Vec(d, 0.0));
  }

  std::vector<nn::Vec> group_emb(K, nn::Vec(d, 0.0));
  std::vector<std::vector<double>> alphas(K);

  for (std::size_t k = 0; k < K; ++k) {
    const auto& nbrs = input.neighbors[k];
    const std::size_t n = nbrs.size();
    if (n == 0) continue;

    std::vector<nn::Mlp2Cache> pc(n), lc(n);
    std::vector<nn::Vec> h(n);
    nn::Vec logits(n);
    for (std::size_t j = 0; j < n; ++j) {
      if (nbrs[j].size() != cfg.neighbor_dim)
        throw std::invalid_argument("encode: neighbor feature size mismatch");
      const nn::Vec x = concat_pair(input.self, nbrs[j]);
      h[j] = nn::mlp_forward(params.pair_embed[k], x, cache ? &pc[j] : nullptr);
      if (cfg.agent_attention()) {
        logits[j] = nn::mlp_forward(params.attn_logit[k], x, cache ? &lc[j] : nullptr)[0];
      }
    }

    std::vector<double> alpha;
    if (cfg.agent_attention()) {
      alpha = nn::softmax(logits);
    } else {
      alpha.assign(n, 1.0 / static_cast<double>(n));
    }
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t t = 0; t < d; ++t) group_emb[k][t] += alpha[j] * h[j][t];
    }
    alphas[k] = alpha;
    if (cache) {
      cache->pair_caches[k] = std::move(pc);
      cache->logit_caches[k] = std::move(lc);
      cache->alpha[k] = alpha;
      cache->group_emb[k] = group_emb[k];
    }
  }

  // Inter-group stage. SG_IAA has K == 1 and reduces to h_i = hbar_1.
  std::vector<double> beta;
  nn::Mlp2Cache beta_cache;
  if (cfg.variant == Variant::SG_IAA) {
    beta.assign(1, 1.0);
  } else if (cfg.group_attention()) {
    nn::Vec concat;
    concat.reserve(K * d);
    for (const auto& g : group_emb) concat.insert(concat.end(), g.begin(), g.end());
    const nn::Vec q = nn::mlp_forward(params.group_attn, concat, cache ? &beta_cache : nullptr);
    beta = nn::softmax(q);
  } else {
    beta.assign(K, 1.0 / static_cast<double>(K));
  }

  nn::Vec h_i(d, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t t = 0; t < d; ++t) h_i[t] += beta[k] * group_emb[k][t];
  }

  if (cache) {
    cache->beta = beta;
    cache->beta_cache = std::move(beta_cache);
  }
  if (trace) {
    trace->alpha = alphas;
    trace->beta = beta;
    trace->neighbor_ids = input.neighbor_ids;
  }
  return h_i;
}

EncodeInputGrads encode_backward(const EncoderConfig& cfg, const EncoderParams& params,
                                 const EncodeCache& cache, const nn::Vec& grad_h,
                                 EncoderGrads& grads) {
  const std::size_t K = cfg.groups();
  const std::size_t d = cfg.embed_dim;
  if (grad_h.size() != d) throw std::invalid_argument("encode_backward: grad size mismatch");

  EncodeInputGrads ig;
  ig.self.assign(cfg.self_dim, 0.0);
  ig.neighbors.resize(K);
  for (std::size_t k = 0; k < K; ++k)
    ig.neighbors[k].assign(cache.input.neighbors[k].size(), nn::Vec(cfg.neighbor_dim, 0.0));

  // h_i = sum_k beta_k hbar_k
  std::vector<nn::Vec> grad_hbar(K, nn::Vec(d, 0.0));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t t = 0; t < d; ++t) grad_hbar[k][t] = cache.beta[k] * grad_h[t];
  }

  if (cfg.variant != Variant::SG_IAA && cfg.group_attention()) {
    nn::Vec grad_beta(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < d; ++t) grad_beta[k] += grad_h[t] * cache.group_emb[k][t];
    }
    const nn::Vec beta_vec(cache.beta.begin(), cache.beta.end());
    const nn::Vec grad_q = nn::softmax_backward(beta_vec, grad_beta);
    const nn::Vec grad_concat =
        nn::mlp_backward(params.group_attn, cache.beta_cache, grad_q, grads.group_attn);
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t t = 0; t < d; ++t) grad_hbar[k][t] += grad_concat[k * d + t];
    }
  }

  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t n = cache.input.neighbors[k].size();
    if (n == 0) continue;
    const auto& alpha = cache.alpha[k];

    nn::Vec grad_alpha(n, 0.0);
    if (cfg.agent_attention()) {
      for (std::size_t j = 0; j < n; ++j) {
        const nn::Vec& h_j = cache.pair_caches[k][j].y;
        for (std::size_t t = 0; t < d; ++t) grad_alpha[j] += grad_hbar[k][t] * h_j[t];
      }
      const nn::Vec alpha_vec(alpha.begin(), alpha.end());
      const nn::Vec grad_e = nn::softmax_backward(alpha_vec, grad_alpha);
      for (std::size_t j = 0; j < n; ++j) {
        const nn::Vec gx = nn::mlp_backward(params.attn_logit[k], cache.logit_caches[k][j],
                                            {grad_e[j]}, grads.attn_logit[k]);
        for (std::size_t t = 0; t < cfg.self_dim; ++t) ig.self[t] += gx[t];
        for (std::size_t t = 0; t < cfg.neighbor_dim; ++t)
          ig.neighbors[k][j][t] += gx[cfg.self_dim + t];
      }
    }

    for (std::size_t j = 0; j < n; ++j) {
      nn::Vec grad_hj(d);
      for (std::size_t t = 0; t < d; ++t) grad_hj[t] = alpha[j] * grad_hbar[k][t];
      const nn::Vec gx = nn::mlp_backward(params.pair_embed[k], cache.pair_caches[k][j],
                                          grad_hj, grads.pair_embed[k]);
      for (std::size_t t = 0; t < cfg.self_dim; ++t) ig.self[t] += gx[t];
      for (std::size_t t = 0; t < cfg.neighbor_dim; ++t)
        ig.neighbors[k][j][t] += gx[cfg.self_dim + t];
    }
  }
  return ig;
}

std::size_t param_count(const EncoderParams& p) {
  std::size_t n = nn::param_count(p.group_attn);
  for (const auto& net : p.pair_embed) n += nn::param_count(net);
  for (const auto& net : p.attn_logit) n += nn::param_count(net);
  return n;
}

void append_params(const EncoderParams& p, nn::Vec& out) {
  for (const auto& net : p.pair_embed) nn::append_params(net, out);
  for (const auto& net : p.attn_logit) nn::append_params(net, out);
  nn::append_params(p.group_attn, out);
}

void append_grads(const EncoderGrads& g, nn::Vec& out) {
  for (const auto& net : g.pair_embed) nn::append_grads(net, out);
  for (const auto& net : g.attn_logit) nn::append_grads(net, out);
  nn::append_grads(g.group_attn, out);
}

void load_params(EncoderParams& p, const nn::Vec& flat, std::size_t& pos) {
  for (auto& net : p.pair_embed) nn::load_params(net, flat, pos);
  for (auto& net : p.attn_logit) nn::load_params(net, flat, pos);
  nn::load_params(p.group_attn, flat, pos);
}

}  // namespace hama::hgat
