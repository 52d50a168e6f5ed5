#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hama/trainer.hpp"
#include "hama/world.hpp"

namespace hama::config {

// Flat key/value run configuration. File format: one `key value` pair per
// line, `#` starts a comment.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_file(const std::string& path);
void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides);  // "key=value"

struct RunConfig {
  world::Scenario scenario = world::Scenario::CoopNav;
  int n_agents = 3;
  int n_preys = 3;
  double radius_scale = 1.0;
  int horizon = 25;
  bool team_capture = true;
  trainer::TrainConfig train;
  std::vector<std::uint64_t> seeds{0};
  std::string outdir = "runs";
};

/// Builds a RunConfig, throwing with the offending field name on bad input.
RunConfig make_run_config(const KeyValues& kv);

world::WorldConfig world_config(const RunConfig& rc);

nlohmann::json to_json(const RunConfig& rc);

}  // namespace hama::config
