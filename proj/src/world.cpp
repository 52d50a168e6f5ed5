#include "hama/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hama::world {

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::CoopNav: return "coop-nav";
    case Scenario::PP31: return "pp-3v1";
    case Scenario::PP33: return "pp-3v3";
    case Scenario::MTS: return "mts";
  }
  return "?";
}

std::optional<Scenario> parse_scenario(const std::string& name) {
  for (Scenario s : {Scenario::CoopNav, Scenario::PP31, Scenario::PP33, Scenario::MTS}) {
    if (scenario_name(s) == name) return s;
  }
  return std::nullopt;
}

bool ActionVec::on_simplex(double tol) const {
  double sum = 0.0;
  for (double x : a) {
    if (!(x >= -tol && x <= 1.0 + tol)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

int WorldConfig::num_acting() const {
  int n = 0;
  for (const auto& g : groups)
    if (g.acting) n += g.count;
  return n;
}

int WorldConfig::num_entities() const {
  int n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

WorldConfig make_config(Scenario s, int n_agents, int n_preys, double radius_scale) {
  WorldConfig cfg;
  cfg.scenario = s;
  if (s == Scenario::CoopNav) {
    cfg.groups = {
        {"agents", n_agents, 0.1 * radius_scale, 4.0, 1.3, true, true, false},
        {"landmarks", n_agents, 0.05 * radius_scale, 0.0, 0.0, false, false, false},
    };
  } else {
    cfg.groups = {
        {"predators", n_agents, 0.075 * radius_scale, 3.0, 1.0, true, true, false},
        {"preys", n_preys, 0.05 * radius_scale, 4.0, 1.3, true, true, true},
        {"obstacles", 2, 0.2 * radius_scale, 0.0, 0.0, false, false, false},
    };
  }
  return cfg;
}

std::array<double, 2> action_to_force(const ActionVec& a, double accel) {
  return {(a.a[1] - a.a[2]) * accel, (a.a[3] - a.a[4]) * accel};
}

double dist(const Entity& a, const Entity& b) {
  return std::hypot(a.px - b.px, a.py - b.py);
}

bool contact(const Entity& a, const Entity& b) {
  return dist(a, b) < a.radius + b.radius;
}

double bound_penalty(double coord) {
  const double c = std::abs(coord);
  if (c < 0.9) return 0.0;
  if (c < 1.0) return 10.0 * (c - 0.9);
  return std::min(std::exp(2.0 * c - 2.0), 10.0);
}

World::World(WorldConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.dt <= 0.0 || cfg_.horizon < 1) throw std::invalid_argument("world: bad dt/horizon");
  int id = 0, ai = 0;
  for (std::size_t k = 0; k < cfg_.groups.size(); ++k) {
    const auto& g = cfg_.groups[k];
    if (g.count < 0) throw std::invalid_argument("world: negative group count");
    for (int c = 0; c < g.count; ++c) {
      Entity e;
      e.id = id++;
      e.group = static_cast<int>(k);
      e.radius = g.radius;
      e.accel = g.accel;
      e.max_speed = g.max_speed;
      e.movable = g.movable;
      e.acting = g.acting;
      e.acting_index = g.acting ? ai++ : -1;
      entities_.push_back(e);
      if (g.acting) acting_ids_.push_back(e.id);
    }
  }
  if (acting_ids_.empty()) throw std::invalid_argument("world: no acting agents");
}

void World::reset(std::mt19937_64& rng) {
  step_ = 0;
  done_ = false;
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    Entity& e = entities_[i];
    e.vx = e.vy = 0.0;
    e.captured = false;
    const double lim = std::max(cfg_.arena - e.radius, 0.0);
    std::uniform_real_distribution<double> pos(-lim, lim);
    bool placed = false;
    for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
      e.px = pos(rng);
      e.py = pos(rng);
      placed = true;
      for (std::size_t j = 0; j < i; ++j) {
        if (contact(e, entities_[j])) {
          placed = false;
          break;
        }
      }
    }
    if (!placed) throw std::runtime_error("world: arena too small to place entities");
  }
}

StepResult World::step(const std::vector<ActionVec>& actions) {
  if (static_cast<int>(actions.size()) != num_acting())
    throw std::invalid_argument("step: action count mismatch");
  for (const auto& a : actions) {
    for (double x : a.a) {
      if (!std::isfinite(x)) throw std::runtime_error("step: non-finite action component");
    }
  }
  if (done_) throw std::runtime_error("step: episode already terminated");

  for (Entity& e : entities_) {
    if (!e.movable || e.captured) continue;
    double fx = 0.0, fy = 0.0;
    if (e.acting) {
      const auto f = action_to_force(actions[e.acting_index], e.accel);
      fx = f[0];
      fy = f[1];
    }
    e.vx = e.vx * (1.0 - cfg_.damping) + fx * cfg_.dt;
    e.vy = e.vy * (1.0 - cfg_.damping) + fy * cfg_.dt;
    const double speed = std::hypot(e.vx, e.vy);
    if (speed > e.max_speed && speed > 0.0) {
      e.vx *= e.max_speed / speed;
      e.vy *= e.max_speed / speed;
    }
    e.px += e.vx * cfg_.dt;
    e.py += e.vy * cfg_.dt;
  }
  ++step_;

  StepResult res;
  res.rewards.assign(num_acting(), 0.0);
  detect_captures(res);
  scenario_rewards(res);
  if (step_ >= cfg_.horizon) res.done = true;
  done_ = res.done;
  return res;
}

namespace {

// Union-find over prey indices for the more-the-stronger cluster rule.
struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

void World::detect_captures(StepResult& res) {
  if (cfg_.scenario == Scenario::CoopNav) return;

  std::vector<Entity*> predators, preys;
  for (Entity& e : entities_) {
    if (cfg_.groups[e.group].prey) {
      preys.push_back(&e);
    } else if (e.acting) {
      predators.push_back(&e);
    }
  }

  if (cfg_.scenario == Scenario::PP31) {
    // Contacts score every step; preys are never flagged captured.
    for (Entity* prey : preys) {
      for (Entity* pred : predators) {
        if (contact(*pred, *prey)) res.events.push_back({step_, pred->id, prey->id});
      }
    }
    return;
  }

  // PP33 / MTS: only the first capture of each prey counts.
  const int np = static_cast<int>(preys.size());
  std::vector<std::vector<int>> in_contact(np);  // predator ids touching prey j
  for (int j = 0; j < np; ++j) {
    if (preys[j]->captured) continue;
    for (Entity* pred : predators) {
      if (contact(*pred, *preys[j])) in_contact[j].push_back(pred->id);
    }
  }

  std::vector<bool> capture(np, false);
  if (cfg_.scenario == Scenario::PP33) {
    for (int j = 0; j < np; ++j) capture[j] = !in_contact[j].empty();
  } else {
    // Cluster uncaptured preys by contact proximity; a prey falls only when
    // at least cluster-size distinct predators touch its cluster this step.
    DisjointSet ds(np);
    for (int i = 0; i < np; ++i) {
      if (preys[i]->captured) continue;
      for (int j = i + 1; j < np; ++j) {
        if (preys[j]->captured) continue;
        const double link = cfg_.mts_cluster_factor * (preys[i]->radius + preys[j]->radius);
        if (dist(*preys[i], *preys[j]) < link) ds.unite(i, j);
      }
    }
    for (int j = 0; j < np; ++j) {
      if (preys[j]->captured || in_contact[j].empty()) continue;
      const int root = ds.find(j);
      int cluster_size = 0;
      std::vector<int> cluster_predators;
      for (int i = 0; i < np; ++i) {
        if (preys[i]->captured || ds.find(i) != root) continue;
        ++cluster_size;
        for (int pid : in_contact[i]) {
          if (std::find(cluster_predators.begin(), cluster_predators.end(), pid) ==
              cluster_predators.end())
            cluster_predators.push_back(pid);
        }
      }
      capture[j] = static_cast<int>(cluster_predators.size()) >= cluster_size;
    }
  }

  for (int j = 0; j < np; ++j) {
    if (!capture[j]) continue;
    preys[j]->captured = true;
    preys[j]->vx = preys[j]->vy = 0.0;
    res.events.push_back({step_, *std::min_element(in_contact[j].begin(), in_contact[j].end()),
                          preys[j]->id});
  }

  bool all = true;
  for (const Entity* p : preys) all = all && p->captured;
  res.all_captured = all;
}

std::vector<double> World::scenario_rewards(StepResult& res) {
  if (cfg_.scenario == Scenario::CoopNav) {
    for (const Entity& e : entities_) {
      if (!e.acting) continue;
      double dmin = std::numeric_limits<double>::infinity();
      int collisions = 0;
      for (const Entity& o : entities_) {
        if (o.id == e.id) continue;
        if (!cfg_.groups[o.group].acting) {
          dmin = std::min(dmin, dist(e, o));
        } else if (contact(e, o)) {
          ++collisions;
        }
      }
      res.rewards[e.acting_index] = -dmin - static_cast<double>(collisions);
    }
    return res.rewards;
  }

  std::vector<const Entity*> predators;
  for (const Entity& e : entities_) {
    if (e.acting && !cfg_.groups[e.group].prey) predators.push_back(&e);
  }

  for (const CaptureEvent& ev : res.events) {
    if (cfg_.team_capture_reward) {
      for (const Entity* p : predators) res.rewards[p->acting_index] += 10.0;
    } else {
      res.rewards[entities_[ev.predator].acting_index] += 10.0;
    }
    res.rewards[entities_[ev.prey].acting_index] -= 10.0;
  }

  // Terminal bonus: +10 * remaining steps when the last prey falls.
  if (res.all_captured && cfg_.scenario != Scenario::PP31) {
    res.bonus_per_predator = 10.0 * static_cast<double>(cfg_.horizon - step_);
    for (const Entity* p : predators) res.rewards[p->acting_index] += res.bonus_per_predator;
    res.done = true;
  }

  for (const Entity& e : entities_) {
    if (!e.acting || !cfg_.groups[e.group].prey || e.captured) continue;
    res.rewards[e.acting_index] -= bound_penalty(e.px) + bound_penalty(e.py);
  }
  return res.rewards;
}

Observation World::observe(int acting_index) const {
  const Entity& self = entities_[acting_ids_.at(static_cast<std::size_t>(acting_index))];
  Observation obs;
  obs.entity_id = self.id;
  obs.group = self.group;
  obs.self = {self.px, self.py, self.vx, self.vy};
  obs.per_group.resize(cfg_.groups.size());

  for (std::size_t k = 0; k < cfg_.groups.size(); ++k) {
    std::vector<const Entity*> members;
    for (const Entity& e : entities_) {
      if (e.group == static_cast<int>(k) && e.id != self.id) members.push_back(&e);
    }
    std::sort(members.begin(), members.end(), [&](const Entity* a, const Entity* b) {
      const double da = dist(self, *a), db = dist(self, *b);
      return da != db ? da < db : a->id < b->id;
    });
    const std::size_t n = std::min<std::size_t>(3, members.size());
    for (std::size_t j = 0; j < n; ++j) {
      const Entity& e = *members[j];
      NeighborFeat nf;
      nf.id = e.id;
      nf.acting_index = e.acting_index;
      nf.feat = {e.px - self.px, e.py - self.py, e.vx - self.vx, e.vy - self.vy,
                 e.captured ? 1.0 : 0.0};
      obs.per_group[k].push_back(std::move(nf));
    }
  }
  return obs;
}

ActionVec heuristic_policy(Heuristic h, const World& w, int predator_acting_index) {
  const Entity& pred =
      w.entities()[w.acting_entity_ids().at(static_cast<std::size_t>(predator_acting_index))];
  const Entity* target = nullptr;
  for (const Entity& e : w.entities()) {
    if (!w.config().groups[e.group].prey || e.captured) continue;
    if (h == Heuristic::H1) {
      if (!target || e.id < target->id) target = &e;
    } else {
      if (!target || dist(pred, e) < dist(pred, *target)) target = &e;
    }
  }
  if (!target) return ActionVec::hold();

  double dx = target->px - pred.px, dy = target->py - pred.py;
  const double norm = std::hypot(dx, dy);
  if (norm == 0.0) return ActionVec::hold();
  dx /= norm;
  dy /= norm;
  ActionVec a;
  a.a = {0.0, std::max(dx, 0.0), std::max(-dx, 0.0), std::max(dy, 0.0), std::max(-dy, 0.0)};
  const double sum = std::abs(dx) + std::abs(dy);
  for (double& x : a.a) x /= sum;
  return a;
}

}  // namespace hama::world
