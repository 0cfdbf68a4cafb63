#include "bioslam/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bioslam/error.hpp"
#include "bioslam/rng.hpp"

namespace bioslam {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::invalid_config, what);
}

double apply(Nonlinearity n, double v) {
  switch (n) {
    case Nonlinearity::identity: return v;
    case Nonlinearity::tanh: return std::tanh(v);
    case Nonlinearity::abs: return std::abs(v);
  }
  return v;
}

// Draws up to `n` distinct entries of `eligible` uniformly.
std::vector<std::size_t> sample_subset(std::vector<std::size_t> eligible, std::size_t n, Rng& rng) {
  const std::size_t take = std::min(n, eligible.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, eligible.size() - 1);
    std::swap(eligible[i], eligible[pick(rng)]);
  }
  eligible.resize(take);
  return eligible;
}

}  // namespace

void WorldConfig::validate() const {
  require(domains >= 1, "world.domains must be at least 1");
  require(places >= 2, "world.places must be at least 2");
  require(trajectories >= 1 && trajectories <= places, "world.trajectories must be in [1, places]");
  require(spacing > 0.0 && std::isfinite(spacing), "world.spacing must be positive");
  require(std::isfinite(trajectory_offset) && trajectory_offset >= 0.0, "world.trajectory_offset must be >= 0");
  require(ring_width >= 2 && ring_width % 2 == 0, "world.ring_width must be even and >= 2");
  require(scene_dim >= 1, "world.scene_dim must be at least 1");
  require(obs_noise >= 0.0 && std::isfinite(obs_noise), "world.obs_noise must be >= 0");
  require(scene_correlation > -1.0 && scene_correlation < 1.0, "world.scene_correlation must be in (-1, 1)");
  require(bias_scale >= 0.0 && std::isfinite(bias_scale), "world.bias_scale must be >= 0");
}

std::string_view to_string(Nonlinearity n) {
  switch (n) {
    case Nonlinearity::identity: return "identity";
    case Nonlinearity::tanh: return "tanh";
    case Nonlinearity::abs: return "abs";
  }
  return "identity";
}

World generate_world(const WorldConfig& config, std::uint64_t seed) {
  config.validate();
  World world;
  world.config = config;
  world.seed = seed;

  Rng rng(derive_seed(seed, {seed_tag::world}));
  std::normal_distribution<double> normal(0.0, 1.0);

  // Places are split evenly over parallel straight trajectories. Scenes follow
  // a stationary AR(1) process along each trajectory with N(0, 1) marginals.
  const double rho = config.scene_correlation;
  const double innovation = std::sqrt(1.0 - rho * rho);
  world.places.reserve(config.places);
  std::size_t per_traj = (config.places + config.trajectories - 1) / config.trajectories;
  for (std::size_t i = 0; i < config.places; ++i) {
    const std::size_t traj = i / per_traj;
    const std::size_t along = i % per_traj;
    Place p;
    p.trajectory = traj;
    p.pose = {static_cast<double>(along) * config.spacing, static_cast<double>(traj) * config.trajectory_offset};
    p.scene.resize(config.scene_dim);
    const bool starts_trajectory = along == 0;
    for (std::size_t k = 0; k < config.scene_dim; ++k) {
      const double e = normal(rng);
      p.scene[k] = starts_trajectory ? e : rho * world.places.back().scene[k] + innovation * e;
    }
    world.places.push_back(std::move(p));
  }

  const double map_scale = 1.0 / std::sqrt(static_cast<double>(config.scene_dim));
  world.renderers.reserve(config.domains);
  for (std::size_t d = 0; d < config.domains; ++d) {
    Renderer r;
    r.map = Matrix(config.ring_width, config.scene_dim);
    for (double& v : r.map.data) v = map_scale * normal(rng);
    r.bias.resize(config.ring_width);
    for (double& v : r.bias) v = config.bias_scale * normal(rng);
    r.nonlinearity = static_cast<Nonlinearity>(d % 3);
    world.renderers.push_back(std::move(r));
  }
  return world;
}

Vec render_clean(const World& world, DomainId domain, std::size_t place) {
  if (domain >= world.renderers.size()) throw Error(ErrorKind::invalid_argument, "domain out of range");
  if (place >= world.places.size()) throw Error(ErrorKind::invalid_argument, "place out of range");
  const Renderer& r = world.renderers[domain];
  Vec out(world.config.ring_width);
  affine(r.map, r.bias, world.places[place].scene, out);
  for (double& v : out) v = apply(r.nonlinearity, v);
  return out;
}

Vec circular_shift(std::span<const double> signal, std::size_t shift) {
  const std::size_t w = signal.size();
  Vec out(w);
  if (w == 0) return out;
  shift %= w;
  for (std::size_t i = 0; i < w; ++i) out[(i + shift) % w] = signal[i];
  return out;
}

Observation render(const World& world, DomainId domain, std::size_t place, std::uint64_t noise_seed,
                   std::uint64_t id) {
  const Vec clean = render_clean(world, domain, place);
  Rng rng(noise_seed);
  std::uniform_int_distribution<std::size_t> shift_dist(0, world.config.ring_width - 1);
  const std::size_t shift = shift_dist(rng);

  Observation obs;
  obs.id = id;
  obs.domain = domain;
  obs.place = place;
  obs.pose = world.places[place].pose;
  obs.signal = circular_shift(clean, shift);
  if (world.config.obs_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, world.config.obs_noise);
    for (double& v : obs.signal) v += noise(rng);
  }
  return obs;
}

std::size_t ScheduleEntry::size() const {
  std::size_t n = 0;
  for (const auto& r : ranges) n += r.size();
  return n;
}

void validate_schedule(const Schedule& schedule, const WorldConfig& config) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const ScheduleEntry& e = schedule[i];
    const std::string where = "schedule[" + std::to_string(i) + "]";
    require(e.domain < config.domains, where + ".domain out of range");
    require(!e.ranges.empty(), where + " has no place ranges");
    for (const auto& r : e.ranges) {
      require(r.first < r.last, where + " has an empty or inverted range");
      require(r.last <= config.places, where + " range exceeds world.places");
    }
    std::vector<PlaceRange> sorted = e.ranges;
    std::sort(sorted.begin(), sorted.end(), [](const PlaceRange& a, const PlaceRange& b) { return a.first < b.first; });
    for (std::size_t k = 1; k < sorted.size(); ++k)
      require(sorted[k].first >= sorted[k - 1].last, where + " has overlapping ranges");
  }
}

ObservationStream::ObservationStream(const World& world, Schedule schedule, std::uint64_t seed)
    : world_(&world), schedule_(std::move(schedule)), seed_(seed) {
  validate_schedule(schedule_, world.config);
}

std::optional<Segment> ObservationStream::next() {
  if (next_segment_ >= schedule_.size()) return std::nullopt;
  const ScheduleEntry& entry = schedule_[next_segment_];
  Segment seg;
  seg.index = next_segment_;
  seg.domain = entry.domain;
  seg.observations.reserve(entry.size());
  for (const auto& range : entry.ranges) {
    for (std::size_t p = range.first; p < range.last; ++p) {
      const std::uint64_t id = next_id_++;
      seg.observations.push_back(render(*world_, entry.domain, p, derive_seed(seed_, {seed_tag::train_render, id}), id));
      ++rendered_;
    }
  }
  ++next_segment_;
  return seg;
}

void ObservationStream::seek(std::size_t segment_index) {
  if (segment_index > schedule_.size()) throw Error(ErrorKind::invalid_argument, "seek past end of schedule");
  std::uint64_t id = 0;
  for (std::size_t i = 0; i < segment_index; ++i) id += schedule_[i].size();
  next_segment_ = segment_index;
  next_id_ = id;
}

std::vector<Segment> stream(const World& world, const Schedule& schedule, std::uint64_t seed) {
  ObservationStream s(world, schedule, seed);
  std::vector<Segment> out;
  while (auto seg = s.next()) out.push_back(std::move(*seg));
  return out;
}

bool mine_query(std::span<const Pose> poses, std::span<const DomainId> groups, std::size_t query,
                const TripletConfig& config, Rng& rng, TripletIndices& out) {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  for (std::size_t j = 0; j < poses.size(); ++j) {
    if (j == query) continue;
    if (!groups.empty() && groups[j] != groups[query]) continue;
    const double d = distance(poses[query], poses[j]);
    if (d <= config.pos_radius) pos.push_back(j);
    else if (d > config.neg_radius) neg.push_back(j);
  }
  if (pos.empty() || neg.empty()) return false;
  out.query = query;
  out.positives = sample_subset(std::move(pos), config.n_pos, rng);
  out.negatives = sample_subset(std::move(neg), config.n_neg, rng);
  return true;
}

TripletBatch mine_triplets(std::span<const Pose> poses, std::span<const DomainId> groups, const TripletConfig& config,
                           std::uint64_t seed) {
  if (!groups.empty() && groups.size() != poses.size())
    throw Error(ErrorKind::dimension_mismatch, "group labels must match pool size");
  Rng rng(seed);
  TripletBatch batch;
  for (std::size_t q = 0; q < poses.size(); ++q) {
    TripletIndices t;
    if (mine_query(poses, groups, q, config, rng, t)) batch.push_back(std::move(t));
  }
  return batch;
}

TripletBatch mine_triplets(std::span<const Observation> pool, const TripletConfig& config, std::uint64_t seed) {
  std::vector<Pose> poses;
  poses.reserve(pool.size());
  for (const auto& o : pool) poses.push_back(o.pose);
  return mine_triplets(poses, {}, config, seed);
}

}  // namespace bioslam
