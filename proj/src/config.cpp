#include "bioslam/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "bioslam/binary_io.hpp"
#include "bioslam/error.hpp"
#include "json.hpp"

namespace bioslam {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::invalid_config, msg); }

// One JSON object of the config. Every accessor records its key, and
// `finish` rejects whatever was never asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) bad("'" + (path_.empty() ? std::string("config") : path_) + "' must be an object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key);
  }

  const json& get(const std::string& key) {
    if (!has(key)) bad("missing required key '" + name(key) + "'");
    return j_.at(key);
  }

  std::uint64_t u64(const std::string& key) { return as_u64(get(key), name(key)); }
  std::uint64_t u64(const std::string& key, std::uint64_t fallback) {
    return has(key) ? as_u64(j_.at(key), name(key)) : fallback;
  }
  double f64(const std::string& key, double fallback) { return has(key) ? as_f64(j_.at(key), name(key)) : fallback; }
  std::string str(const std::string& key) { return as_str(get(key), name(key)); }
  std::string str(const std::string& key, const std::string& fallback) {
    return has(key) ? as_str(j_.at(key), name(key)) : fallback;
  }

  Section child(const std::string& key) {
    static const json empty = json::object();
    return Section(has(key) ? j_.at(key) : empty, name(key));
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!known_.count(key)) bad("unknown key '" + name(key) + "'");
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  static std::uint64_t as_u64(const json& v, const std::string& where) {
    if (!v.is_number_unsigned()) bad("'" + where + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  static double as_f64(const json& v, const std::string& where) {
    if (!v.is_number()) bad("'" + where + "' must be a number");
    return v.get<double>();
  }
  static std::string as_str(const json& v, const std::string& where) {
    if (!v.is_string()) bad("'" + where + "' must be a string");
    return v.get<std::string>();
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

Schedule parse_schedule(const json& j) {
  if (!j.is_array()) bad("'schedule' must be an array");
  Schedule out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "schedule[" + std::to_string(i) + "]";
    Section s(j[i], where);
    ScheduleEntry e;
    e.domain = static_cast<DomainId>(s.u64("domain"));
    const json& ranges = s.get("ranges");
    if (!ranges.is_array()) bad("'" + where + ".ranges' must be an array");
    for (std::size_t r = 0; r < ranges.size(); ++r) {
      const std::string rw = where + ".ranges[" + std::to_string(r) + "]";
      if (!ranges[r].is_array() || ranges[r].size() != 2) bad("'" + rw + "' must be a [first, last) pair");
      e.ranges.push_back({static_cast<std::size_t>(Section::as_u64(ranges[r][0], rw + "[0]")),
                          static_cast<std::size_t>(Section::as_u64(ranges[r][1], rw + "[1]"))});
    }
    s.finish();
    out.push_back(std::move(e));
  }
  return out;
}

RunConfig from_json(const json& root) {
  Section top(root, "");
  RunConfig c;
  c.seed = top.u64("seed");
  c.lifelong.strategy = parse_strategy(top.str("strategy"));
  c.output_dir = top.str("output_dir", c.output_dir);

  {
    Section w = top.child("world");
    WorldConfig& wc = c.world;
    wc.domains = w.u64("domains");
    wc.places = w.u64("places");
    c.world_seed = w.u64("seed", c.seed);
    wc.trajectories = w.u64("trajectories", wc.trajectories);
    wc.spacing = w.f64("spacing", wc.spacing);
    wc.trajectory_offset = w.f64("trajectory_offset", wc.trajectory_offset);
    wc.ring_width = w.u64("ring_width", wc.ring_width);
    wc.scene_dim = w.u64("scene_dim", wc.scene_dim);
    wc.obs_noise = w.f64("obs_noise", wc.obs_noise);
    wc.scene_correlation = w.f64("scene_correlation", wc.scene_correlation);
    wc.bias_scale = w.f64("bias_scale", wc.bias_scale);
    w.finish();
  }
  c.schedule = parse_schedule(top.get("schedule"));

  LifelongConfig& l = c.lifelong;
  l.dims.ring_width = c.world.ring_width;
  {
    Section m = top.child("model");
    l.dims.hidden = m.u64("hidden", l.dims.hidden);
    l.dims.latent = m.u64("latent", l.dims.latent);
    l.dims.descriptor = m.u64("descriptor", l.dims.descriptor);
    m.finish();
  }
  {
    Section t = top.child("train");
    TrainerHyper& h = l.hyper;
    h.margin = t.f64("margin", h.margin);
    h.learning_rate = t.f64("learning_rate", h.learning_rate);
    h.epochs = t.u64("epochs", h.epochs);
    h.real_batch = t.u64("real_batch", h.real_batch);
    h.replay_batch = t.u64("replay_batch", h.replay_batch);
    h.augment.noise = t.f64("aug_noise", h.augment.noise);
    h.augment.scale_min = t.f64("aug_scale_min", h.augment.scale_min);
    h.augment.scale_max = t.f64("aug_scale_max", h.augment.scale_max);
    h.early_stop_tol = t.f64("early_stop_tol", h.early_stop_tol);
    h.early_stop_patience = t.u64("early_stop_patience", h.early_stop_patience);
    t.finish();
  }
  {
    Section t = top.child("triplets");
    l.triplets.pos_radius = t.f64("pos_radius", l.triplets.pos_radius);
    l.triplets.neg_radius = t.f64("neg_radius", l.triplets.neg_radius);
    l.triplets.n_pos = t.u64("n_pos", l.triplets.n_pos);
    l.triplets.n_neg = t.u64("n_neg", l.triplets.n_neg);
    t.finish();
  }
  {
    Section m = top.child("memory");
    l.static_memory.max_clusters = m.u64("max_clusters", l.static_memory.max_clusters);
    l.static_memory.max_members = m.u64("max_members", l.static_memory.max_members);
    l.static_memory.spatial_weight = m.f64("spatial_weight", l.static_memory.spatial_weight);
    l.static_memory.max_new_clusters = m.u64("max_new_clusters", l.static_memory.max_new_clusters);
    l.static_memory.kmeans_iters = m.u64("kmeans_iters", l.static_memory.kmeans_iters);
    l.dynamic_memory.capacity = m.u64("dynamic_capacity", l.dynamic_memory.capacity);
    l.dynamic_memory.gamma = m.f64("gamma", l.dynamic_memory.gamma);
    m.finish();
  }
  {
    Section r = top.child("run");
    l.eval_interval = r.u64("eval_interval", l.eval_interval);
    l.refresh_interval = r.u64("refresh_interval", l.refresh_interval);
    l.match_radius = r.f64("match_radius", l.match_radius);
    c.snapshot_interval = r.u64("snapshot_interval", c.snapshot_interval);
    r.finish();
  }
  top.finish();
  l.seed = c.seed;
  c.validate();
  return c;
}

json world_json(const WorldConfig& w, std::uint64_t world_seed) {
  return json{{"seed", world_seed},
              {"domains", w.domains},
              {"places", w.places},
              {"trajectories", w.trajectories},
              {"spacing", w.spacing},
              {"trajectory_offset", w.trajectory_offset},
              {"ring_width", w.ring_width},
              {"scene_dim", w.scene_dim},
              {"obs_noise", w.obs_noise},
              {"scene_correlation", w.scene_correlation},
              {"bias_scale", w.bias_scale}};
}

json to_json(const RunConfig& c) {
  const LifelongConfig& l = c.lifelong;
  json schedule = json::array();
  for (const auto& e : c.schedule) {
    json ranges = json::array();
    for (const auto& r : e.ranges) ranges.push_back(json::array({r.first, r.last}));
    schedule.push_back(json{{"domain", e.domain}, {"ranges", ranges}});
  }
  return json{
      {"seed", c.seed},
      {"strategy", std::string(to_string(l.strategy))},
      {"output_dir", c.output_dir},
      {"world", world_json(c.world, c.world_seed)},
      {"schedule", schedule},
      {"model", {{"hidden", l.dims.hidden}, {"latent", l.dims.latent}, {"descriptor", l.dims.descriptor}}},
      {"train",
       {{"margin", l.hyper.margin},
        {"learning_rate", l.hyper.learning_rate},
        {"epochs", l.hyper.epochs},
        {"real_batch", l.hyper.real_batch},
        {"replay_batch", l.hyper.replay_batch},
        {"aug_noise", l.hyper.augment.noise},
        {"aug_scale_min", l.hyper.augment.scale_min},
        {"aug_scale_max", l.hyper.augment.scale_max},
        {"early_stop_tol", l.hyper.early_stop_tol},
        {"early_stop_patience", l.hyper.early_stop_patience}}},
      {"triplets",
       {{"pos_radius", l.triplets.pos_radius},
        {"neg_radius", l.triplets.neg_radius},
        {"n_pos", l.triplets.n_pos},
        {"n_neg", l.triplets.n_neg}}},
      {"memory",
       {{"max_clusters", l.static_memory.max_clusters},
        {"max_members", l.static_memory.max_members},
        {"spatial_weight", l.static_memory.spatial_weight},
        {"max_new_clusters", l.static_memory.max_new_clusters},
        {"kmeans_iters", l.static_memory.kmeans_iters},
        {"dynamic_capacity", l.dynamic_memory.capacity},
        {"gamma", l.dynamic_memory.gamma}}},
      {"run",
       {{"eval_interval", l.eval_interval},
        {"refresh_interval", l.refresh_interval},
        {"match_radius", l.match_radius},
        {"snapshot_interval", c.snapshot_interval}}},
  };
}

}  // namespace

void RunConfig::validate() const {
  world.validate();
  if (schedule.empty()) bad("'schedule' must list at least one segment");
  validate_schedule(schedule, world);
  lifelong.validate();
  if (lifelong.dims.ring_width != world.ring_width) bad("model ring width must equal world.ring_width");
  if (lifelong.dims.hidden == 0 || lifelong.dims.latent == 0 || lifelong.dims.descriptor == 0)
    bad("model dimensions must be >= 1");
  if (lifelong.seed != seed) bad("lifelong seed must equal the master seed");
}

RunConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(root);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void override_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.lifelong.seed = seed;
}

std::string canonical_json(const RunConfig& config) { return to_json(config).dump(); }

std::uint64_t config_digest(const RunConfig& config) {
  // Output location and snapshot cadence do not change results, so a run may
  // be resumed with different values.
  json j = to_json(config);
  j.erase("output_dir");
  j["run"].erase("snapshot_interval");
  return fnv1a64(j.dump());
}

std::uint64_t world_digest(const WorldConfig& world, std::uint64_t world_seed) {
  return fnv1a64(world_json(world, world_seed).dump());
}

}  // namespace bioslam
