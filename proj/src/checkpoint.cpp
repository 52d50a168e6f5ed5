#include "hama/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hama::ckpt {

namespace {

constexpr char kMagic[8] = {'H', 'A', 'M', 'A', 'C', 'K', 'P', '1'};

void write_f32(std::ostream& os, const nn::Vec& v) {
  std::vector<float> buf(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) buf[i] = static_cast<float>(v[i]);
  os.write(reinterpret_cast<const char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

nn::Vec read_f32(std::istream& is, std::size_t n) {
  std::vector<float> buf(n);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!is) throw std::runtime_error("checkpoint: truncated payload");
  nn::Vec v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(buf[i]);
  return v;
}

nlohmann::json header_and_seek(std::ifstream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in) throw std::runtime_error("checkpoint: truncated header in " + path);
  return nlohmann::json::parse(htext);
}

}  // namespace

void save(const std::string& path, trainer::Trainer& tr, const nlohmann::json& manifest) {
  const auto& wcfg = tr.world_config();
  const auto& tcfg = tr.train_config();

  nlohmann::json header;
  header["format_version"] = 1;
  header["manifest"] = manifest;
  header["scenario"] = world::scenario_name(wcfg.scenario);
  header["world_groups"] = wcfg.groups.size();
  header["variant"] = hgat::variant_name(tcfg.variant);
  header["embed_dim"] = tcfg.embed_dim;
  header["hidden"] = tcfg.hidden;
  header["global_step"] = tr.global_step();
  {
    std::ostringstream rs;
    rs << tr.rng();
    header["rng_state"] = rs.str();
  }

  std::vector<nn::Vec> payload;
  nlohmann::json groups = nlohmann::json::array();
  for (trainer::GroupAgent& ga : tr.agents()) {
    nlohmann::json g;
    g["world_group"] = ga.world_group;
    g["acting_indices"] = ga.acting_indices;
    g["actor_t"] = ga.actor_opt.t;
    g["critic_t"] = ga.critic_opt.t;
    nlohmann::json arrays = nlohmann::json::array();
    auto add = [&](const char* name, nn::Vec v) {
      arrays.push_back({{"name", name}, {"count", v.size()}});
      payload.push_back(std::move(v));
    };
    add("actor", policy::get_params(ga.actor));
    add("actor_target", policy::get_params(ga.actor_target));
    add("critic", policy::get_params(ga.critic));
    add("critic_target", policy::get_params(ga.critic_target));
    add("actor_m", ga.actor_opt.m);
    add("actor_v", ga.actor_opt.v);
    add("critic_m", ga.critic_opt.m);
    add("critic_v", ga.critic_opt.v);
    g["arrays"] = arrays;
    groups.push_back(g);
  }
  header["groups"] = groups;

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + tmp);
    out.write(kMagic, 8);
    const std::string htext = header.dump();
    const auto hlen = static_cast<std::uint32_t>(htext.size());
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const nn::Vec& v : payload) write_f32(out, v);
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  // Replace atomically so a failed save never corrupts a prior checkpoint.
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("checkpoint: rename failed for " + path);
}

nlohmann::json read_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  return header_and_seek(in, path);
}

void load_into(const std::string& path, trainer::Trainer& tr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  const nlohmann::json header = header_and_seek(in, path);

  if (header.at("groups").size() != tr.agents().size())
    throw std::runtime_error("checkpoint: group count mismatch");

  std::size_t gi = 0;
  for (trainer::GroupAgent& ga : tr.agents()) {
    const nlohmann::json& g = header["groups"][gi++];
    auto expect = [&](std::size_t slot, const char* name, std::size_t want) {
      const auto& a = g["arrays"][slot];
      if (a["name"] != name || a["count"].get<std::size_t>() != want) {
        throw std::runtime_error("checkpoint: arity mismatch for array '" +
                                 std::string(name) + "': file has " +
                                 a["count"].dump() + ", model needs " + std::to_string(want));
      }
    };
    const std::size_t na = policy::param_count(ga.actor);
    const std::size_t nc = policy::param_count(ga.critic);
    expect(0, "actor", na);
    expect(1, "actor_target", na);
    expect(2, "critic", nc);
    expect(3, "critic_target", nc);
    expect(4, "actor_m", na);
    expect(5, "actor_v", na);
    expect(6, "critic_m", nc);
    expect(7, "critic_v", nc);

    policy::set_params(ga.actor, read_f32(in, na));
    policy::set_params(ga.actor_target, read_f32(in, na));
    policy::set_params(ga.critic, read_f32(in, nc));
    policy::set_params(ga.critic_target, read_f32(in, nc));
    ga.actor_opt.m = read_f32(in, na);
    ga.actor_opt.v = read_f32(in, na);
    ga.critic_opt.m = read_f32(in, nc);
    ga.critic_opt.v = read_f32(in, nc);
    ga.actor_opt.t = g.at("actor_t").get<long>();
    ga.critic_opt.t = g.at("critic_t").get<long>();
  }

  std::istringstream rs(header.at("rng_state").get<std::string>());
  rs >> tr.rng();
  tr.set_global_step(header.at("global_step").get<long>());
}

Policy load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  const nlohmann::json header = header_and_seek(in, path);

  Policy p;
  const auto scen = world::parse_scenario(header.at("scenario").get<std::string>());
  const auto var = hgat::parse_variant(header.at("variant").get<std::string>());
  if (!scen || !var) throw std::runtime_error("checkpoint: unknown scenario/variant tag");
  p.scenario = *scen;
  p.variant = *var;
  p.world_groups = header.at("world_groups").get<std::size_t>();
  p.embed_dim = header.at("embed_dim").get<std::size_t>();
  p.hidden = header.at("hidden").get<std::size_t>();
  p.manifest = header.value("manifest", nlohmann::json::object());

  std::mt19937_64 scratch_rng(0);
  for (const nlohmann::json& g : header.at("groups")) {
    policy::ActorStack actor =
        policy::make_actor(p.variant, p.world_groups, p.embed_dim, p.hidden, scratch_rng);
    const std::size_t na = policy::param_count(actor);
    const std::size_t file_na = g["arrays"][0]["count"].get<std::size_t>();
    if (file_na != na)
      throw std::runtime_error("checkpoint: actor arity mismatch: file has " +
                               std::to_string(file_na) + ", model needs " + std::to_string(na));
    policy::set_params(actor, read_f32(in, na));
    // Skip the remaining arrays of this group.
    std::size_t skip = 0;
    for (std::size_t s = 1; s < g["arrays"].size(); ++s)
      skip += g["arrays"][s]["count"].get<std::size_t>();
    in.seekg(static_cast<std::streamoff>(skip * sizeof(float)), std::ios::cur);
    p.world_group.push_back(g.at("world_group").get<int>());
    p.actors.push_back(std::move(actor));
  }
  return p;
}

}  // namespace hama::ckpt
