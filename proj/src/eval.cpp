#include "hama/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <stdexcept>

namespace hama::eval {

std::vector<PolicyHandle> handles_from(const ckpt::Policy& p) {
  std::vector<PolicyHandle> out;
  out.reserve(p.actors.size());
  for (const auto& a : p.actors)
    out.push_back(PolicyHandle::trained(std::make_shared<policy::ActorStack>(a)));
  return out;
}

namespace {

world::ActionVec random_simplex_action(std::mt19937_64& rng) {
  // Uniform on the simplex via normalized exponentials.
  std::exponential_distribution<double> ex(1.0);
  world::ActionVec a;
  double sum = 0.0;
  for (double& x : a.a) {
    x = ex(rng);
    sum += x;
  }
  for (double& x : a.a) x /= sum;
  return a;
}

world::ActionVec pick_action(const PolicyHandle& h, const world::World& w, int acting_index,
                             const world::Observation& obs, std::mt19937_64& rng,
                             hgat::AttentionRecord* trace) {
  switch (h.kind) {
    case PolicyHandle::Kind::Hold:
      return world::ActionVec::hold();
    case PolicyHandle::Kind::Random:
      return random_simplex_action(rng);
    case PolicyHandle::Kind::Heuristic1:
      return world::heuristic_policy(world::Heuristic::H1, w, acting_index);
    case PolicyHandle::Kind::Heuristic2:
      return world::heuristic_policy(world::Heuristic::H2, w, acting_index);
    case PolicyHandle::Kind::Trained:
      if (h.actor->cfg.world_groups != w.config().groups.size())
        throw std::runtime_error("eval: checkpoint group arity (" +
                                 std::to_string(h.actor->cfg.world_groups) +
                                 ") does not match scenario groups (" +
                                 std::to_string(w.config().groups.size()) + ")");
      return policy::greedy_action(*h.actor, obs, trace);
  }
  return world::ActionVec::hold();
}

double coop_occupation(const world::World& w) {
  int landmarks = 0, occupied = 0;
  for (const auto& lm : w.entities()) {
    if (w.config().groups[lm.group].acting) continue;
    ++landmarks;
    for (const auto& ag : w.entities()) {
      if (!ag.acting) continue;
      if (world::contact(ag, lm)) {
        ++occupied;
        break;
      }
    }
  }
  return landmarks > 0 ? static_cast<double>(occupied) / landmarks : 0.0;
}

}  // namespace

std::vector<EpisodeStats> run_episodes(const world::WorldConfig& wcfg,
                                       const std::vector<PolicyHandle>& handles, int episodes,
                                       std::uint64_t seed, const TraceSink& trace,
                                       const LogSink& log, int episode_base) {
  world::World w(wcfg);
  const int n = w.num_acting();

  // acting index -> group slot
  std::vector<std::size_t> slot(static_cast<std::size_t>(n));
  {
    std::size_t s = 0;
    for (std::size_t k = 0; k < wcfg.groups.size(); ++k) {
      if (!wcfg.groups[k].acting) continue;
      for (const auto& e : w.entities())
        if (e.group == static_cast<int>(k)) slot[static_cast<std::size_t>(e.acting_index)] = s;
      ++s;
    }
    if (handles.size() != s) throw std::invalid_argument("eval: one handle per acting group");
  }

  std::mt19937_64 rng(seed);
  std::vector<EpisodeStats> out;
  out.reserve(static_cast<std::size_t>(episodes));

  for (int ep = 0; ep < episodes; ++ep) {
    w.reset(rng);
    EpisodeStats st;
    st.agent_return.assign(static_cast<std::size_t>(n), 0.0);
    EpisodeLog elog;
    elog.episode = episode_base + ep;

    double penalty_sum = 0.0;
    long penalty_count = 0;

    for (int t = 0; t < wcfg.horizon; ++t) {
      std::vector<world::ActionVec> actions(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const world::Observation obs = w.observe(i);
        hgat::AttentionRecord rec;
        const bool want_trace = trace && handles[slot[idx]].kind == PolicyHandle::Kind::Trained;
        actions[idx] = pick_action(handles[slot[idx]], w, i, obs, rng,
                                   want_trace ? &rec : nullptr);
        if (want_trace) {
          for (std::size_t k = 0; k < rec.alpha.size(); ++k) {
            TraceRecord tr;
            tr.episode = episode_base + ep;
            tr.step = t;
            tr.agent = obs.entity_id;
            tr.group = static_cast<int>(k);
            tr.neighbor_ids = rec.neighbor_ids[k];
            tr.alpha = rec.alpha[k];
            tr.beta = rec.beta;
            trace(tr);
          }
        }
      }

      const world::StepResult res = w.step(actions);
      ++st.steps;
      for (int i = 0; i < n; ++i)
        st.agent_return[static_cast<std::size_t>(i)] += res.rewards[static_cast<std::size_t>(i)];

      if (wcfg.scenario == world::Scenario::CoopNav) {
        for (double r : res.rewards) {
          penalty_sum += -r;
          ++penalty_count;
        }
      }

      if (log) {
        StepLog sl;
        for (const auto& e : w.entities())
          sl.entities.push_back({e.px, e.py, e.vx, e.vy, e.captured});
        sl.rewards = res.rewards;
        sl.events = res.events;
        sl.done = res.done;
        elog.steps.push_back(std::move(sl));
      }

      if (res.done) {
        st.success = res.all_captured;
        break;
      }
    }

    // Predator rewards are nonnegative (captures plus the terminal bonus),
    // so the positive total is just the summed return.
    if (wcfg.scenario != world::Scenario::CoopNav) {
      for (const auto& e : w.entities()) {
        if (e.acting && !wcfg.groups[e.group].prey) {
          const double total = st.agent_return[static_cast<std::size_t>(e.acting_index)];
          st.predator_positive += std::max(total, 0.0);
        }
      }
    }

    if (wcfg.scenario == world::Scenario::CoopNav) {
      st.mean_penalty = penalty_count > 0 ? penalty_sum / static_cast<double>(penalty_count) : 0.0;
      st.occupation = coop_occupation(w);
    }
    if (log) log(elog);
    out.push_back(std::move(st));
  }
  return out;
}

double metric_mean_penalty(const std::vector<EpisodeStats>& eps) {
  if (eps.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : eps) s += e.mean_penalty;
  return s / static_cast<double>(eps.size());
}

double metric_predator_score(const std::vector<EpisodeStats>& eps, int horizon,
                             int n_predators) {
  if (eps.empty() || horizon <= 0 || n_predators <= 0) return 0.0;
  double s = 0.0;
  for (const auto& e : eps) s += e.predator_positive;
  return s / (static_cast<double>(eps.size()) * horizon * n_predators);
}

double metric_success_rate(const std::vector<EpisodeStats>& eps) {
  if (eps.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : eps) s += e.success ? 1.0 : 0.0;
  return s / static_cast<double>(eps.size());
}

double metric_occupation(const std::vector<EpisodeStats>& eps) {
  if (eps.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : eps) s += e.occupation;
  return s / static_cast<double>(eps.size());
}

double discounted_return(const std::vector<double>& step_rewards, double gamma) {
  double r = 0.0, g = 1.0;
  for (double x : step_rewards) {
    r += g * x;
    g *= gamma;
  }
  return r;
}

namespace {

void mean_std(const std::vector<double>& xs, double& mean, double& sd) {
  mean = 0.0;
  sd = 0.0;
  if (xs.empty()) return;
  mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  if (xs.size() < 2) return;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

int count_predators(const world::WorldConfig& wcfg) {
  int n = 0;
  for (const auto& g : wcfg.groups)
    if (g.acting && !g.prey) n += g.count;
  return n;
}

}  // namespace

EvalReport cross_play(const world::WorldConfig& wcfg, const std::vector<PolicyHandle>& handles,
                      int episodes, const std::vector<std::uint64_t>& seeds) {
  EvalReport rep;
  rep.scenario = wcfg.scenario;
  rep.episodes_per_seed = episodes;
  rep.seeds = seeds;
  const int npred = count_predators(wcfg);
  for (std::uint64_t seed : seeds) {
    auto eps = run_episodes(wcfg, handles, episodes, seed);
    rep.seed_score.push_back(metric_predator_score(eps, wcfg.horizon, npred));
    rep.seed_penalty.push_back(metric_mean_penalty(eps));
    rep.seed_success.push_back(metric_success_rate(eps));
    rep.seed_occupation.push_back(metric_occupation(eps));
    rep.raw.insert(rep.raw.end(), eps.begin(), eps.end());
  }
  mean_std(rep.seed_score, rep.score_mean, rep.score_std);
  mean_std(rep.seed_penalty, rep.penalty_mean, rep.penalty_std);
  mean_std(rep.seed_success, rep.success_mean, rep.success_std);
  mean_std(rep.seed_occupation, rep.occupation_mean, rep.occupation_std);
  return rep;
}

std::vector<std::vector<double>> transfer_eval(const ckpt::Policy& p, int m_max, int n_max,
                                               int episodes, std::uint64_t seed) {
  if (p.actors.size() != 2) throw std::invalid_argument("transfer_eval: predator-prey policy required");
  std::vector<std::vector<double>> rates(static_cast<std::size_t>(m_max),
                                         std::vector<double>(static_cast<std::size_t>(n_max), 0.0));
  for (int m = 1; m <= m_max; ++m) {
    for (int n = 1; n <= n_max; ++n) {
      const world::WorldConfig wcfg = world::make_config(p.scenario, m, n);
      const auto eps = run_episodes(wcfg, handles_from(p), episodes, seed);
      rates[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(n - 1)] =
          metric_success_rate(eps);
    }
  }
  return rates;
}

void collect_attention(const world::WorldConfig& wcfg, const std::vector<PolicyHandle>& handles,
                       int episodes, std::uint64_t seed, const TraceSink& sink) {
  run_episodes(wcfg, handles, episodes, seed, sink);
}

std::vector<AblationEntry> ablation_grid(const world::WorldConfig& wcfg,
                                         trainer::TrainConfig base, const std::string& cache_dir,
                                         int episodes, const std::vector<std::uint64_t>& seeds) {
  namespace fs = std::filesystem;
  fs::create_directories(cache_dir);
  const std::vector<hgat::Variant> variants = {hgat::Variant::SG_IAA, hgat::Variant::HG_NA,
                                               hgat::Variant::HG_IAA, hgat::Variant::HG_IGA,
                                               hgat::Variant::HG_IAGA};
  std::vector<std::string> paths;
  for (hgat::Variant v : variants) {
    const std::string path =
        (fs::path(cache_dir) / ("ablation_" + hgat::variant_name(v) + ".ckpt")).string();
    if (!fs::exists(path)) {
      trainer::TrainConfig tcfg = base;
      tcfg.variant = v;
      trainer::Trainer tr(wcfg, tcfg);
      tr.train();
      ckpt::save(path, tr, {{"purpose", "ablation"}, {"variant", hgat::variant_name(v)}});
    }
    paths.push_back(path);
  }

  const ckpt::Policy reference = ckpt::load_policy(paths.back());  // HG-IAGA
  std::vector<AblationEntry> table;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const ckpt::Policy vp = ckpt::load_policy(paths[i]);
    std::vector<PolicyHandle> handles = {
        PolicyHandle::trained(std::make_shared<policy::ActorStack>(vp.actors[0])),
        PolicyHandle::trained(std::make_shared<policy::ActorStack>(reference.actors[1]))};
    const EvalReport rep = cross_play(wcfg, handles, episodes, seeds);
    table.push_back({variants[i], rep.score_mean, rep.score_std});
  }
  return table;
}

}  // namespace hama::eval
