#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "hama/eval.hpp"

using namespace hama;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("hama_eval_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

trainer::TrainConfig small_config(std::uint64_t seed) {
  trainer::TrainConfig t;
  t.embed_dim = 8;
  t.hidden = 8;
  t.batch = 8;
  t.capacity = 200;
  t.warmup_fraction = 0.0;
  t.update_every = 50;
  t.episodes = 2;
  t.seed = seed;
  return t;
}

ckpt::Policy make_policy(world::Scenario s, const TempDir& tmp, std::uint64_t seed) {
  const auto wcfg = world::make_config(s, 3, 3);
  trainer::Trainer tr(wcfg, small_config(seed));
  const std::string path = tmp.file(world::scenario_name(s) + ".ckpt");
  ckpt::save(path, tr, {});
  return ckpt::load_policy(path);
}

}  // namespace

TEST_CASE("metric reductions on hand-built episode stats") {
  std::vector<eval::EpisodeStats> eps(2);
  eps[0].mean_penalty = 1.0;
  eps[1].mean_penalty = 3.0;
  CHECK(eval::metric_mean_penalty(eps) == doctest::Approx(2.0));

  eps[0].predator_positive = 30.0;
  eps[1].predator_positive = 20.0;
  // 50 scored over 2 episodes x 25 steps x 3 predators.
  CHECK(eval::metric_predator_score(eps, 25, 3) == doctest::Approx(50.0 / 150.0));

  eps[0].success = true;
  eps[1].success = false;
  CHECK(eval::metric_success_rate(eps) == doctest::Approx(0.5));

  eps[0].occupation = 1.0;
  eps[1].occupation = 1.0 / 3.0;
  CHECK(eval::metric_occupation(eps) == doctest::Approx(2.0 / 3.0));

  const std::vector<eval::EpisodeStats> none;
  CHECK(eval::metric_mean_penalty(none) == 0.0);
  CHECK(eval::metric_predator_score(none, 25, 3) == 0.0);
  CHECK(eval::metric_success_rate(none) == 0.0);
}

TEST_CASE("discounted return oracle") {
  CHECK(eval::discounted_return({1.0, 2.0, 3.0}, 0.5) == doctest::Approx(1.0 + 1.0 + 0.75));
  CHECK(eval::discounted_return({1.0, 2.0, 3.0}, 1.0) == doctest::Approx(6.0));
  CHECK(eval::discounted_return({5.0}, 0.9) == doctest::Approx(5.0));
  CHECK(eval::discounted_return({}, 0.9) == 0.0);
  const double g = 0.95;
  CHECK(eval::discounted_return({0, 0, 0, 10}, g) == doctest::Approx(10.0 * g * g * g));
}

TEST_CASE("hold-versus-hold play never scores") {
  const auto wcfg = world::make_config(world::Scenario::PP31);
  const std::vector<eval::PolicyHandle> handles = {
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Hold),
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Hold)};
  const auto eps = eval::run_episodes(wcfg, handles, 10, 1);
  REQUIRE(eps.size() == 10);
  for (const auto& e : eps) {
    CHECK(e.predator_positive == 0.0);
    CHECK(!e.success);
    CHECK(e.steps == wcfg.horizon);
    // Entities never move, so the prey keeps whatever in-bounds spawn it got.
    for (int i = 0; i < 3; ++i) CHECK(e.agent_return[static_cast<std::size_t>(i)] == 0.0);
  }
}

TEST_CASE("chasing heuristics capture a holding prey team") {
  auto wcfg = world::make_config(world::Scenario::PP33, 3, 3);
  wcfg.horizon = 300;
  const std::vector<eval::PolicyHandle> handles = {
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Heuristic2),
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Hold)};
  const auto eps = eval::run_episodes(wcfg, handles, 20, 2);
  CHECK(eval::metric_success_rate(eps) == doctest::Approx(1.0));
  for (const auto& e : eps) {
    CHECK(e.steps < wcfg.horizon);  // early termination on full capture
    CHECK(e.predator_positive > 0.0);
  }
}

TEST_CASE("run_episodes is deterministic in the seed") {
  const auto wcfg = world::make_config(world::Scenario::PP31);
  const std::vector<eval::PolicyHandle> handles = {
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Heuristic1),
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Random)};
  const auto a = eval::run_episodes(wcfg, handles, 5, 33);
  const auto b = eval::run_episodes(wcfg, handles, 5, 33);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].agent_return == b[i].agent_return);
    CHECK(a[i].steps == b[i].steps);
  }
  const auto c = eval::run_episodes(wcfg, handles, 5, 34);
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].agent_return == c[i].agent_return;
  CHECK(!same);
}

TEST_CASE("episode logs replay into the reported returns") {
  const auto wcfg = world::make_config(world::Scenario::MTS, 3, 3);
  const std::vector<eval::PolicyHandle> handles = {
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Heuristic2),
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Random)};
  std::vector<eval::EpisodeLog> logs;
  const auto eps =
      eval::run_episodes(wcfg, handles, 8, 3, nullptr, [&](const eval::EpisodeLog& l) {
        logs.push_back(l);
      });
  REQUIRE(logs.size() == eps.size());
  for (std::size_t e = 0; e < eps.size(); ++e) {
    CHECK(logs[e].episode == static_cast<int>(e));
    REQUIRE(static_cast<int>(logs[e].steps.size()) == eps[e].steps);
    std::vector<double> sums(eps[e].agent_return.size(), 0.0);
    for (const auto& sl : logs[e].steps)
      for (std::size_t i = 0; i < sl.rewards.size(); ++i) sums[i] += sl.rewards[i];
    for (std::size_t i = 0; i < sums.size(); ++i)
      CHECK(sums[i] == doctest::Approx(eps[e].agent_return[i]).epsilon(1e-12));
    CHECK(logs[e].steps.back().done == (eps[e].steps < wcfg.horizon || wcfg.horizon == eps[e].steps));
  }
}

TEST_CASE("trained policies load and play; arity mismatches are rejected") {
  TempDir tmp;
  const auto pol = make_policy(world::Scenario::PP33, tmp, 5);
  const auto wcfg = world::make_config(world::Scenario::PP33, 3, 3);
  const auto eps = eval::run_episodes(wcfg, eval::handles_from(pol), 3, 6);
  CHECK(eps.size() == 3);

  // Handle-count mismatch: two handles into a one-group scenario.
  CHECK_THROWS_AS(eval::run_episodes(world::make_config(world::Scenario::CoopNav),
                                     eval::handles_from(pol), 1, 1),
                  std::invalid_argument);

  // Group-arity mismatch: a three-group actor driving a two-group world.
  const std::vector<eval::PolicyHandle> bad = {
      eval::PolicyHandle::trained(std::make_shared<policy::ActorStack>(pol.actors[0]))};
  CHECK_THROWS_WITH_AS(eval::run_episodes(world::make_config(world::Scenario::CoopNav), bad, 1, 1),
                       doctest::Contains("arity"), std::runtime_error);
}

TEST_CASE("attention traces are simplex-valued with real neighbor ids") {
  TempDir tmp;
  const auto pol = make_policy(world::Scenario::PP33, tmp, 7);
  const auto wcfg = world::make_config(world::Scenario::PP33, 3, 3);
  world::World w(wcfg);

  int records = 0;
  eval::collect_attention(wcfg, eval::handles_from(pol), 2, 8, [&](const eval::TraceRecord& tr) {
    ++records;
    CHECK(tr.episode >= 0);
    CHECK(tr.step >= 0);
    CHECK(tr.step < wcfg.horizon);
    CHECK(tr.agent >= 0);
    CHECK(tr.agent < wcfg.num_entities());
    CHECK(tr.group >= 0);
    CHECK(tr.group < static_cast<int>(wcfg.groups.size()));
    REQUIRE(tr.neighbor_ids.size() == tr.alpha.size());
    if (!tr.alpha.empty()) {
      double sum = 0.0;
      for (double a : tr.alpha) {
        CHECK(a >= 0.0);
        sum += a;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    REQUIRE(tr.beta.size() == wcfg.groups.size());
    double bsum = 0.0;
    for (double b : tr.beta) {
      CHECK(b >= 0.0);
      bsum += b;
    }
    CHECK(bsum == doctest::Approx(1.0).epsilon(1e-9));
    for (int id : tr.neighbor_ids) {
      CHECK(id >= 0);
      CHECK(id < wcfg.num_entities());
      CHECK(id != tr.agent);
    }
  });
  // 6 acting agents x 3 groups x 25 steps x 2 episodes.
  CHECK(records == 6 * 3 * 25 * 2);
}

TEST_CASE("cross_play aggregates per-seed metrics with sample std") {
  const auto wcfg = world::make_config(world::Scenario::PP31);
  const std::vector<eval::PolicyHandle> handles = {
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Heuristic2),
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Random)};
  const std::vector<std::uint64_t> seeds = {11, 12, 13};
  const auto rep = eval::cross_play(wcfg, handles, 6, seeds);
  CHECK(rep.raw.size() == 18);
  REQUIRE(rep.seed_score.size() == 3);

  double mean = (rep.seed_score[0] + rep.seed_score[1] + rep.seed_score[2]) / 3.0;
  CHECK(rep.score_mean == doctest::Approx(mean));
  double ss = 0.0;
  for (double x : rep.seed_score) ss += (x - mean) * (x - mean);
  CHECK(rep.score_std == doctest::Approx(std::sqrt(ss / 2.0)));

  // Each per-seed slice reproduces independently.
  const auto again = eval::run_episodes(wcfg, handles, 6, 12);
  CHECK(eval::metric_predator_score(again, wcfg.horizon, 3) == doctest::Approx(rep.seed_score[1]));
}

TEST_CASE("coop-nav cross_play reports penalty and occupation") {
  const auto wcfg = world::make_config(world::Scenario::CoopNav);
  const std::vector<eval::PolicyHandle> handles = {
      eval::PolicyHandle::scripted(eval::PolicyHandle::Kind::Random)};
  const auto rep = eval::cross_play(wcfg, handles, 4, {21, 22});
  CHECK(rep.penalty_mean > 0.0);  // random walkers do not sit on landmarks
  CHECK(rep.occupation_mean >= 0.0);
  CHECK(rep.occupation_mean <= 1.0);
  for (const auto& e : rep.raw) {
    CHECK(e.mean_penalty > 0.0);
    CHECK(e.steps == wcfg.horizon);
  }
}

TEST_CASE("transfer_eval runs a fixed policy over the population grid") {
  TempDir tmp;
  const auto pol = make_policy(world::Scenario::PP33, tmp, 9);
  const auto rates = eval::transfer_eval(pol, 2, 2, 2, 10);
  REQUIRE(rates.size() == 2);
  for (const auto& row : rates) {
    REQUIRE(row.size() == 2);
    for (double r : row) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
  }

  const auto nav = make_policy(world::Scenario::CoopNav, tmp, 9);
  CHECK_THROWS_AS(eval::transfer_eval(nav, 2, 2, 1, 1), std::invalid_argument);
}

TEST_CASE("ablation grid trains, caches, and reuses checkpoints") {
  TempDir tmp;
  auto wcfg = world::make_config(world::Scenario::PP31);
  auto base = small_config(13);
  base.episodes = 2;
  const auto table = eval::ablation_grid(wcfg, base, tmp.file("cache"), 2, {1});
  REQUIRE(table.size() == 5);
  CHECK(table[0].predator_variant == hgat::Variant::SG_IAA);
  CHECK(table[4].predator_variant == hgat::Variant::HG_IAGA);
  for (const auto& e : table) CHECK(std::isfinite(e.score_mean));
  for (const char* v : {"SG-IAA", "HG-NA", "HG-IAA", "HG-IGA", "HG-IAGA"})
    CHECK(fs::exists(tmp.file("cache") + "/ablation_" + std::string(v) + ".ckpt"));

  // Second call must reuse the cache: checkpoint mtimes stay put.
  const auto before = fs::last_write_time(tmp.file("cache") + "/ablation_HG-IAGA.ckpt");
  const auto table2 = eval::ablation_grid(wcfg, base, tmp.file("cache"), 2, {1});
  CHECK(fs::last_write_time(tmp.file("cache") + "/ablation_HG-IAGA.ckpt") == before);
  for (std::size_t i = 0; i < 5; ++i)
    CHECK(table2[i].score_mean == doctest::Approx(table[i].score_mean));
}
