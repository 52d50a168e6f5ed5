#include "hama/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hama::config {

KeyValues parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  KeyValues kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key)) continue;
    std::getline(ls, value);
    const auto start = value.find_first_not_of(" \t");
    value = start == std::string::npos ? "" : value.substr(start);
    const auto end = value.find_last_not_of(" \t\r");
    if (end != std::string::npos) value.erase(end + 1);
    if (value.empty()) throw std::runtime_error("config: missing value for key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

void apply_overrides(KeyValues& kv, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::runtime_error("config: override must be key=value, got '" + ov + "'");
    kv[ov.substr(0, eq)] = ov.substr(eq + 1);
  }
}

namespace {

template <typename T>
T parse_num(const std::string& key, const std::string& s);

template <>
double parse_num<double>(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::runtime_error("config: field '" + key + "' expects a number, got '" + s + "'");
  }
}

template <>
long parse_num<long>(const std::string& key, const std::string& s) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::runtime_error("config: field '" + key + "' expects an integer, got '" + s + "'");
  }
}

class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  bool has(const std::string& key) {
    seen_.insert(key);
    return kv_.count(key) > 0;
  }
  std::string str(const std::string& key) { return kv_.at(key); }
  void get(const std::string& key, double& out) {
    if (has(key)) out = parse_num<double>(key, kv_.at(key));
  }
  void get(const std::string& key, int& out) {
    if (has(key)) out = static_cast<int>(parse_num<long>(key, kv_.at(key)));
  }
  void get(const std::string& key, long& out) {
    if (has(key)) out = parse_num<long>(key, kv_.at(key));
  }
  void get(const std::string& key, std::size_t& out) {
    if (has(key)) {
      const long v = parse_num<long>(key, kv_.at(key));
      if (v < 0) throw std::runtime_error("config: field '" + key + "' must be nonnegative");
      out = static_cast<std::size_t>(v);
    }
  }
  void get(const std::string& key, bool& out) {
    if (!has(key)) return;
    const std::string& s = kv_.at(key);
    if (s == "true" || s == "1") out = true;
    else if (s == "false" || s == "0") out = false;
    else throw std::runtime_error("config: field '" + key + "' expects true/false");
  }
  void check_unknown() const {
    for (const auto& [k, v] : kv_) {
      if (!seen_.count(k)) throw std::runtime_error("config: unknown field '" + k + "'");
    }
  }

 private:
  const KeyValues& kv_;
  std::set<std::string> seen_;
};

}  // namespace

RunConfig make_run_config(const KeyValues& kv) {
  RunConfig rc;
  Reader r(kv);

  if (!r.has("scenario")) throw std::runtime_error("config: missing required field 'scenario'");
  const auto scen = world::parse_scenario(r.str("scenario"));
  if (!scen)
    throw std::runtime_error("config: field 'scenario' must be one of coop-nav, pp-3v1, pp-3v3, mts");
  rc.scenario = *scen;
  rc.n_preys = rc.scenario == world::Scenario::PP31 ? 1 : 3;

  r.get("agents", rc.n_agents);
  r.get("preys", rc.n_preys);
  r.get("radius_scale", rc.radius_scale);
  r.get("horizon", rc.horizon);
  r.get("team_capture", rc.team_capture);

  auto& t = rc.train;
  r.get("gamma", t.gamma);
  r.get("tau", t.tau);
  r.get("lr_actor", t.lr_actor);
  r.get("lr_critic", t.lr_critic);
  r.get("batch", t.batch);
  r.get("update_every", t.update_every);
  r.get("capacity", t.capacity);
  r.get("warmup_fraction", t.warmup_fraction);
  r.get("episodes", t.episodes);
  r.get("max_steps", t.max_steps);
  r.get("noise_start", t.noise_start);
  r.get("noise_end", t.noise_end);
  r.get("embed_dim", t.embed_dim);
  r.get("hidden", t.hidden);
  r.get("checkpoint_every", t.checkpoint_every);
  r.get("metrics_window", t.metrics_window);
  if (r.has("variant")) {
    const auto v = hgat::parse_variant(r.str("variant"));
    if (!v)
      throw std::runtime_error(
          "config: field 'variant' must be one of SG-IAA, HG-NA, HG-IAA, HG-IGA, HG-IAGA");
    t.variant = *v;
  }
  if (r.has("seeds")) {
    rc.seeds.clear();
    std::istringstream ss(r.str("seeds"));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) rc.seeds.push_back(static_cast<std::uint64_t>(std::stoull(tok)));
    }
    if (rc.seeds.empty()) throw std::runtime_error("config: field 'seeds' is empty");
  }
  if (r.has("outdir")) rc.outdir = r.str("outdir");
  r.check_unknown();

  if (t.gamma < 0.0 || t.gamma > 1.0) throw std::runtime_error("config: field 'gamma' out of [0,1]");
  if (t.tau <= 0.0 || t.tau > 1.0) throw std::runtime_error("config: field 'tau' out of (0,1]");
  if (rc.horizon < 1) throw std::runtime_error("config: field 'horizon' must be >= 1");
  t.seed = rc.seeds.front();
  return rc;
}

world::WorldConfig world_config(const RunConfig& rc) {
  world::WorldConfig wcfg =
      world::make_config(rc.scenario, rc.n_agents, rc.n_preys, rc.radius_scale);
  wcfg.horizon = rc.horizon;
  wcfg.team_capture_reward = rc.team_capture;
  return wcfg;
}

nlohmann::json to_json(const RunConfig& rc) {
  const auto& t = rc.train;
  return {
      {"scenario", world::scenario_name(rc.scenario)},
      {"agents", rc.n_agents},
      {"preys", rc.n_preys},
      {"radius_scale", rc.radius_scale},
      {"horizon", rc.horizon},
      {"team_capture", rc.team_capture},
      {"gamma", t.gamma},
      {"tau", t.tau},
      {"lr_actor", t.lr_actor},
      {"lr_critic", t.lr_critic},
      {"batch", t.batch},
      {"update_every", t.update_every},
      {"capacity", t.capacity},
      {"warmup_fraction", t.warmup_fraction},
      {"episodes", t.episodes},
      {"max_steps", t.max_steps},
      {"noise_start", t.noise_start},
      {"noise_end", t.noise_end},
      {"embed_dim", t.embed_dim},
      {"hidden", t.hidden},
      {"variant", hgat::variant_name(t.variant)},
      {"checkpoint_every", t.checkpoint_every},
      {"metrics_window", t.metrics_window},
      {"seeds", rc.seeds},
      {"outdir", rc.outdir},
  };
}

}  // namespace hama::config
