// Command-line entry point: train | eval | transfer | trace.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hama/checkpoint.hpp"
#include "hama/config.hpp"
#include "hama/eval.hpp"
#include "hama/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
};

hama::config::RunConfig resolve_config(const CommonOpts& opts) {
  hama::config::KeyValues kv;
  if (!opts.config_path.empty()) kv = hama::config::parse_file(opts.config_path);
  hama::config::apply_overrides(kv, opts.overrides);
  return hama::config::make_run_config(kv);
}

std::string output_root(const hama::config::RunConfig& rc) {
  if (const char* env = std::getenv("HAMA_OUTPUT_ROOT"))
    return (fs::path(env) / rc.outdir).string();
  return rc.outdir;
}

json make_manifest(const hama::config::RunConfig& rc) {
  return {{"tool", "hama"}, {"format", 1}, {"config", hama::config::to_json(rc)}};
}

void write_jsonl_header(std::ofstream& out, const json& manifest) {
  out << json{{"manifest", manifest}}.dump() << "\n";
}

void add_config_opts(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path, "run config file (key value lines)");
  cmd->add_option("--set", opts.overrides, "override a config field, key=value")
      ->take_all();
}

int cmd_train(const CommonOpts& opts) {
  const auto rc = resolve_config(opts);
  const auto wcfg = hama::config::world_config(rc);
  const json manifest = make_manifest(rc);
  const std::string root = output_root(rc);
  fs::create_directories(root);

  for (std::uint64_t seed : rc.seeds) {
    hama::trainer::TrainConfig tcfg = rc.train;
    tcfg.seed = seed;
    const std::string run_dir = (fs::path(root) / ("seed" + std::to_string(seed))).string();
    fs::create_directories(run_dir);

    std::ofstream metrics(run_dir + "/metrics.jsonl", std::ios::trunc);
    metrics << std::setprecision(17);
    write_jsonl_header(metrics, manifest);
    {
      std::ofstream mf(run_dir + "/manifest.json", std::ios::trunc);
      json m = manifest;
      m["seed"] = seed;
      mf << m.dump(2) << "\n";
    }

    hama::trainer::Trainer tr(wcfg, tcfg);
    tr.train(
        [&](const hama::trainer::Metrics& m) {
          metrics << json{{"step", m.step},
                          {"episode", m.episode},
                          {"group_reward", m.group_reward},
                          {"critic_loss", m.critic_loss},
                          {"actor_value", m.actor_value}}
                         .dump()
                  << "\n";
          metrics.flush();
        },
        [&](long episode) {
          json m = manifest;
          m["seed"] = seed;
          m["episode"] = episode;
          hama::ckpt::save(run_dir + "/checkpoint.ckpt", tr, m);
        });
    std::cout << "trained seed " << seed << " -> " << run_dir << "/checkpoint.ckpt\n";
  }
  return 0;
}

hama::eval::PolicyHandle scripted_handle(const std::string& name) {
  using K = hama::eval::PolicyHandle::Kind;
  if (name == "heuristic1") return hama::eval::PolicyHandle::scripted(K::Heuristic1);
  if (name == "heuristic2") return hama::eval::PolicyHandle::scripted(K::Heuristic2);
  if (name == "random") return hama::eval::PolicyHandle::scripted(K::Random);
  if (name == "hold") return hama::eval::PolicyHandle::scripted(K::Hold);
  throw CLI::ValidationError("policy", "unknown scripted policy '" + name + "'");
}

struct EvalOpts {
  CommonOpts common;
  std::string checkpoint;
  std::string predator_policy, prey_policy;  // scripted overrides
  int episodes = 200;
  std::string out;
  bool ablation = false;
  std::string cache_dir = "ablation_cache";
};

int cmd_eval(const EvalOpts& o) {
  const auto rc = resolve_config(o.common);
  const auto wcfg = hama::config::world_config(rc);
  const json manifest = make_manifest(rc);

  if (o.ablation) {
    const auto table =
        hama::eval::ablation_grid(wcfg, rc.train, o.cache_dir, o.episodes, rc.seeds);
    json rows = json::array();
    for (const auto& e : table) {
      rows.push_back({{"predator", hama::hgat::variant_name(e.predator_variant)},
                      {"prey", "HG-IAGA"},
                      {"score_mean", e.score_mean},
                      {"score_std", e.score_std}});
      std::cout << hama::hgat::variant_name(e.predator_variant) << " vs HG-IAGA: "
                << e.score_mean << " +- " << e.score_std << "\n";
    }
    if (!o.out.empty()) {
      std::ofstream f(o.out, std::ios::trunc);
      write_jsonl_header(f, manifest);
      for (const auto& r : rows) f << r.dump() << "\n";
    }
    return 0;
  }

  std::vector<hama::eval::PolicyHandle> handles;
  if (!o.checkpoint.empty()) {
    const auto p = hama::ckpt::load_policy(o.checkpoint);
    handles = hama::eval::handles_from(p);
  } else {
    hama::world::World probe(wcfg);
    std::size_t slots = 0;
    for (const auto& g : wcfg.groups) slots += g.acting ? 1 : 0;
    handles.assign(slots, hama::eval::PolicyHandle::scripted(
                              hama::eval::PolicyHandle::Kind::Hold));
  }
  if (!o.predator_policy.empty() && !handles.empty()) handles[0] = scripted_handle(o.predator_policy);
  if (!o.prey_policy.empty() && handles.size() > 1) handles[1] = scripted_handle(o.prey_policy);

  const auto rep = hama::eval::cross_play(wcfg, handles, o.episodes, rc.seeds);

  json summary = {{"scenario", hama::world::scenario_name(rep.scenario)},
                  {"episodes_per_seed", rep.episodes_per_seed},
                  {"seeds", rep.seeds},
                  {"score_mean", rep.score_mean},
                  {"score_std", rep.score_std},
                  {"penalty_mean", rep.penalty_mean},
                  {"penalty_std", rep.penalty_std},
                  {"success_mean", rep.success_mean},
                  {"success_std", rep.success_std},
                  {"occupation_mean", rep.occupation_mean},
                  {"occupation_std", rep.occupation_std}};
  std::cout << summary.dump(2) << "\n";

  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::trunc);
    f << std::setprecision(17);
    write_jsonl_header(f, manifest);
    f << json{{"summary", summary}}.dump() << "\n";
    for (const auto& e : rep.raw) {
      f << json{{"steps", e.steps},
                {"success", e.success},
                {"agent_return", e.agent_return},
                {"predator_positive", e.predator_positive},
                {"mean_penalty", e.mean_penalty},
                {"occupation", e.occupation}}
               .dump()
        << "\n";
    }
  }
  return 0;
}

struct TransferOpts {
  CommonOpts common;
  std::string checkpoint;
  int m_max = 6, n_max = 6;
  int episodes = 50;
  std::string out;
};

int cmd_transfer(const TransferOpts& o) {
  const auto rc = resolve_config(o.common);
  const json manifest = make_manifest(rc);

  if (rc.scenario == hama::world::Scenario::CoopNav) {
    // Large-population navigation: same policy, radii scaled down 25x.
    const auto p = hama::ckpt::load_policy(o.checkpoint);
    const auto wcfg = hama::config::world_config(rc);
    const auto eps =
        hama::eval::run_episodes(wcfg, hama::eval::handles_from(p), o.episodes, rc.seeds.front());
    json summary = {{"scenario", "coop-nav"},
                    {"agents", rc.n_agents},
                    {"radius_scale", rc.radius_scale},
                    {"mean_penalty", hama::eval::metric_mean_penalty(eps)},
                    {"occupation", hama::eval::metric_occupation(eps)}};
    std::cout << summary.dump(2) << "\n";
    if (!o.out.empty()) {
      std::ofstream f(o.out, std::ios::trunc);
      write_jsonl_header(f, manifest);
      f << summary.dump() << "\n";
    }
    return 0;
  }

  const auto p = hama::ckpt::load_policy(o.checkpoint);
  const auto rates = hama::eval::transfer_eval(p, o.m_max, o.n_max, o.episodes, rc.seeds.front());
  json rows = json::array();
  for (int m = 1; m <= o.m_max; ++m) {
    for (int n = 1; n <= o.n_max; ++n) {
      rows.push_back({{"predators", m},
                      {"preys", n},
                      {"success_rate", rates[static_cast<std::size_t>(m - 1)]
                                            [static_cast<std::size_t>(n - 1)]}});
    }
    std::cout << "m=" << m << ":";
    for (int n = 1; n <= o.n_max; ++n)
      std::cout << " " << rates[static_cast<std::size_t>(m - 1)][static_cast<std::size_t>(n - 1)];
    std::cout << "\n";
  }
  if (!o.out.empty()) {
    std::ofstream f(o.out, std::ios::trunc);
    write_jsonl_header(f, manifest);
    for (const auto& r : rows) f << r.dump() << "\n";
  }
  return 0;
}

struct TraceOpts {
  CommonOpts common;
  std::string checkpoint;
  int episodes = 1;
  std::string out = "trace.jsonl";
};

int cmd_trace(const TraceOpts& o) {
  const auto rc = resolve_config(o.common);
  const auto wcfg = hama::config::world_config(rc);
  const json manifest = make_manifest(rc);
  const auto p = hama::ckpt::load_policy(o.checkpoint);

  std::ofstream f(o.out, std::ios::trunc);
  if (!f) throw std::runtime_error("trace: cannot open " + o.out);
  f << std::setprecision(17);
  write_jsonl_header(f, manifest);
  long records = 0;
  hama::eval::collect_attention(wcfg, hama::eval::handles_from(p), o.episodes, rc.seeds.front(),
                                [&](const hama::eval::TraceRecord& r) {
                                  f << json{{"episode", r.episode},
                                            {"step", r.step},
                                            {"agent", r.agent},
                                            {"group", r.group},
                                            {"neighbor_ids", r.neighbor_ids},
                                            {"alpha", r.alpha},
                                            {"beta", r.beta}}
                                           .dump()
                                    << "\n";
                                  ++records;
                                });
  std::cout << "wrote " << records << " trace records to " << o.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HAMA: hierarchical-attention multi-agent actor-critic"};
  app.require_subcommand(1);

  CommonOpts train_opts;
  CLI::App* train = app.add_subcommand("train", "train policies by self-play");
  add_config_opts(train, train_opts);

  EvalOpts eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "evaluate frozen policies");
  add_config_opts(eval, eval_opts.common);
  eval->add_option("--checkpoint", eval_opts.checkpoint, "trained checkpoint for all roles");
  eval->add_option("--predator-policy", eval_opts.predator_policy,
                   "scripted override: heuristic1|heuristic2|random|hold");
  eval->add_option("--prey-policy", eval_opts.prey_policy, "scripted override for the prey slot");
  eval->add_option("--episodes", eval_opts.episodes, "episodes per seed");
  eval->add_option("--out", eval_opts.out, "report output file (jsonl)");
  eval->add_flag("--ablation", eval_opts.ablation, "run the encoder-variant ablation table");
  eval->add_option("--cache-dir", eval_opts.cache_dir, "checkpoint cache for --ablation");

  TransferOpts transfer_opts;
  CLI::App* transfer = app.add_subcommand("transfer", "run a trained policy on other populations");
  add_config_opts(transfer, transfer_opts.common);
  transfer->add_option("--checkpoint", transfer_opts.checkpoint, "trained checkpoint")->required();
  transfer->add_option("--m-max", transfer_opts.m_max, "max predators in the grid");
  transfer->add_option("--n-max", transfer_opts.n_max, "max preys in the grid");
  transfer->add_option("--episodes", transfer_opts.episodes, "episodes per cell");
  transfer->add_option("--out", transfer_opts.out, "matrix output file (jsonl)");

  TraceOpts trace_opts;
  CLI::App* trace = app.add_subcommand("trace", "export attention traces");
  add_config_opts(trace, trace_opts.common);
  trace->add_option("--checkpoint", trace_opts.checkpoint, "trained checkpoint")->required();
  trace->add_option("--episodes", trace_opts.episodes, "episodes to record");
  trace->add_option("--out", trace_opts.out, "trace output file (jsonl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train(train_opts);
    if (eval->parsed()) return cmd_eval(eval_opts);
    if (transfer->parsed()) return cmd_transfer(transfer_opts);
    if (trace->parsed()) return cmd_trace(trace_opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
