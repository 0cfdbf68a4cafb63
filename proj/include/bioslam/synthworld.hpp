#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bioslam/matrix.hpp"
#include "bioslam/rng.hpp"
#include "bioslam/types.hpp"

namespace bioslam {

struct WorldConfig {
  std::size_t domains = 3;
  std::size_t places = 100;
  std::size_t trajectories = 1;
  double spacing = 2.0;              // meters between consecutive places
  double trajectory_offset = 50.0;   // meters between parallel trajectories
  std::size_t ring_width = 64;       // W
  std::size_t scene_dim = 8;         // d_s
  double obs_noise = 0.05;           // sigma_obs
  double scene_correlation = 0.0;    // AR(1) coefficient between consecutive places; 0 gives i.i.d. scenes
  double bias_scale = 0.5;

  void validate() const;
};

enum class Nonlinearity : std::uint8_t { identity = 0, tanh = 1, abs = 2 };

std::string_view to_string(Nonlinearity n);

/// Per-domain appearance model: signal = nl(map * scene + bias).
struct Renderer {
  Matrix map;  // W x d_s
  Vec bias;    // W
  Nonlinearity nonlinearity = Nonlinearity::identity;

  friend bool operator==(const Renderer&, const Renderer&) = default;
};

struct Place {
  Pose pose;
  Vec scene;
  std::size_t trajectory = 0;

  friend bool operator==(const Place&, const Place&) = default;
};

struct World {
  WorldConfig config;
  std::uint64_t seed = 0;
  std::vector<Place> places;
  std::vector<Renderer> renderers;
};

World generate_world(const WorldConfig& config, std::uint64_t seed);

/// Noise-free, unshifted rendering of a place in a domain.
Vec render_clean(const World& world, DomainId domain, std::size_t place);

/// Shifted, noisy rendering. Identical inputs give identical output.
Observation render(const World& world, DomainId domain, std::size_t place, std::uint64_t noise_seed,
                   std::uint64_t id = 0);

/// out[(i + shift) mod W] = signal[i]
Vec circular_shift(std::span<const double> signal, std::size_t shift);

struct PlaceRange {
  std::size_t first = 0;  // inclusive
  std::size_t last = 0;   // exclusive

  std::size_t size() const { return last - first; }
};

struct ScheduleEntry {
  DomainId domain = 0;
  std::vector<PlaceRange> ranges;

  std::size_t size() const;
};

using Schedule = std::vector<ScheduleEntry>;

void validate_schedule(const Schedule& schedule, const WorldConfig& config);

struct Segment {
  std::size_t index = 0;
  DomainId domain = 0;
  std::vector<Observation> observations;
};

/// Single-consumer, one-pass stream of segments. Observation ids are assigned
/// in emission order starting from zero; `seek` skips consumed segments
/// without rendering them.
class ObservationStream {
 public:
  ObservationStream(const World& world, Schedule schedule, std::uint64_t seed);

  std::optional<Segment> next();
  void seek(std::size_t segment_index);

  std::size_t position() const { return next_segment_; }
  std::size_t segment_count() const { return schedule_.size(); }
  std::uint64_t rendered() const { return rendered_; }

 private:
  const World* world_;
  Schedule schedule_;
  std::uint64_t seed_;
  std::size_t next_segment_ = 0;
  std::uint64_t next_id_ = 0;
  std::uint64_t rendered_ = 0;
};

/// Renders every scheduled segment in one go.
std::vector<Segment> stream(const World& world, const Schedule& schedule, std::uint64_t seed);

struct TripletConfig {
  double pos_radius = 3.0;
  double neg_radius = 10.0;
  std::size_t n_pos = 2;
  std::size_t n_neg = 8;
};

struct TripletIndices {
  std::size_t query = 0;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

using TripletBatch = std::vector<TripletIndices>;

/// Mines triplets over a pool of poses. Positives lie within pos_radius,
/// negatives beyond neg_radius; a query lacking either is dropped. When
/// `groups` is non-empty, partners are restricted to the query's group.
TripletBatch mine_triplets(std::span<const Pose> poses, std::span<const DomainId> groups, const TripletConfig& config,
                           std::uint64_t seed);

/// Mines partners for a single query of the pool; false if it lacks a
/// positive or a negative.
bool mine_query(std::span<const Pose> poses, std::span<const DomainId> groups, std::size_t query,
                const TripletConfig& config, Rng& rng, TripletIndices& out);

TripletBatch mine_triplets(std::span<const Observation> pool, const TripletConfig& config, std::uint64_t seed);

}  // namespace bioslam
