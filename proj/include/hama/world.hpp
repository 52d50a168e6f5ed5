#pragma once

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hama/nn.hpp"

namespace hama::world {

enum class Scenario { CoopNav, PP31, PP33, MTS };

std::string scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(const std::string& name);

// Discrete 5-way action mapped onto a 2-D force: hold, right, left, up, down.
struct ActionVec {
  std::array<double, 5> a{1.0, 0.0, 0.0, 0.0, 0.0};

  static ActionVec hold() { return ActionVec{}; }
  bool on_simplex(double tol = 1e-6) const;
};

struct GroupSpec {
  std::string name;
  int count = 0;
  double radius = 0.05;
  double accel = 0.0;
  double max_speed = 0.0;
  bool acting = false;
  bool movable = false;
  bool prey = false;  // capture target in predator-prey scenarios
};

struct WorldConfig {
  Scenario scenario = Scenario::CoopNav;
  double dt = 0.1;
  double damping = 0.25;
  double arena = 1.0;  // half-width
  int horizon = 25;    // T
  std::vector<GroupSpec> groups;
  bool team_capture_reward = true;
  double mts_cluster_factor = 2.2;

  int num_acting() const;
  int num_entities() const;
};

/// Scenario defaults: coop-nav n agents + n landmarks; predator-prey 3 vs. n
/// preys plus 2 static obstacles. radius_scale shrinks every radius (used for
/// the large-population navigation transfer).
WorldConfig make_config(Scenario s, int n_agents = 3, int n_preys = 1,
                        double radius_scale = 1.0);

struct Entity {
  int id = 0;
  int group = 0;
  double px = 0, py = 0, vx = 0, vy = 0;
  double radius = 0.05;
  double accel = 0.0;
  double max_speed = 0.0;
  bool movable = false;
  bool acting = false;
  bool captured = false;
  int acting_index = -1;  // index into joint action vector, -1 if non-acting
};

struct CaptureEvent {
  int step = 0;
  int predator = -1;  // entity id (lowest-id contacting predator)
  int prey = -1;      // entity id
};

struct StepResult {
  std::vector<double> rewards;  // per acting agent
  std::vector<CaptureEvent> events;
  bool done = false;
  bool all_captured = false;
  double bonus_per_predator = 0.0;  // +10*t_r term, already included in rewards
};

struct NeighborFeat {
  int id = -1;
  int acting_index = -1;
  nn::Vec feat;  // [rel px, rel py, rel vx, rel vy, captured]
};

struct Observation {
  int entity_id = -1;
  int group = 0;
  nn::Vec self;  // [px, py, vx, vy]
  std::vector<std::vector<NeighborFeat>> per_group;  // at most 3 per group, nearest first
};

constexpr std::size_t kSelfDim = 4;
constexpr std::size_t kNeighborDim = 5;
constexpr std::size_t kActionDim = 5;

/// fx = (right - left) * accel, fy = (up - down) * accel.
std::array<double, 2> action_to_force(const ActionVec& a, double accel);

class World {
 public:
  explicit World(WorldConfig cfg);

  void reset(std::mt19937_64& rng);
  /// Integrates one step, detects captures, computes scenario rewards.
  StepResult step(const std::vector<ActionVec>& actions);

  Observation observe(int acting_index) const;

  const WorldConfig& config() const { return cfg_; }
  const std::vector<Entity>& entities() const { return entities_; }
  int step_index() const { return step_; }  // steps taken so far
  int num_acting() const { return cfg_.num_acting(); }
  const std::vector<int>& acting_entity_ids() const { return acting_ids_; }
  bool episode_done() const { return done_; }

 private:
  std::vector<double> scenario_rewards(StepResult& res);
  void detect_captures(StepResult& res);

  WorldConfig cfg_;
  std::vector<Entity> entities_;
  std::vector<int> acting_ids_;
  int step_ = 0;
  bool done_ = false;
};

/// Scripted predator chase policies: H1 targets the lowest-id uncaptured
/// prey for all predators, H2 each predator's nearest uncaptured prey.
enum class Heuristic { H1, H2 };
ActionVec heuristic_policy(Heuristic h, const World& w, int predator_acting_index);

/// Prey out-of-zone penalty, per coordinate: 0 inside |c|<0.9, linear ramp to
/// 10*(|c|-0.9) up to |c|=1, then exp(2|c|-2) clamped at 10.
double bound_penalty(double coord);

bool contact(const Entity& a, const Entity& b);
double dist(const Entity& a, const Entity& b);

}  // namespace hama::world
