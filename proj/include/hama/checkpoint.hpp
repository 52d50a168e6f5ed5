#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hama/policy.hpp"
#include "hama/trainer.hpp"

namespace hama::ckpt {

// Checkpoint file: 8-byte magic, little-endian u32 header length, JSON
// header, then the named float32 arrays concatenated in header order.

/// Saves all group stacks, target copies, optimizer state and the RNG state.
void save(const std::string& path, trainer::Trainer& tr, const nlohmann::json& manifest);

/// Restores parameters, optimizer moments and RNG into a trainer built with
/// the same world and train configuration.
void load_into(const std::string& path, trainer::Trainer& tr);

nlohmann::json read_header(const std::string& path);

// Frozen actor stacks for evaluation.
struct Policy {
  world::Scenario scenario = world::Scenario::CoopNav;
  std::size_t world_groups = 0;
  hgat::Variant variant = hgat::Variant::HG_IAGA;
  std::size_t embed_dim = 0;
  std::size_t hidden = 0;
  std::vector<int> world_group;              // per slot
  std::vector<policy::ActorStack> actors;    // per slot
  nlohmann::json manifest;
};

Policy load_policy(const std::string& path);

}  // namespace hama::ckpt
