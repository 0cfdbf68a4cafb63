#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "bioslam/lifelong.hpp"
#include "bioslam/synthworld.hpp"

namespace bioslam {

/// Everything a run needs. Parsed from JSON; see README for the schema.
struct RunConfig {
  std::uint64_t seed = 0;        // master seed of the run
  std::uint64_t world_seed = 0;  // defaults to `seed`
  WorldConfig world;
  Schedule schedule;
  LifelongConfig lifelong;       // lifelong.seed mirrors `seed`
  std::string output_dir = "out";
  std::size_t snapshot_interval = 10;  // epochs between snapshots; 0 = only at the end

  void validate() const;
};

/// Parses and validates a JSON config. Unknown keys, missing required keys
/// and wrongly typed values raise Error(invalid_config) naming the key path.
/// Required: seed, strategy, world.domains, world.places, schedule.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::string& path);

/// Sets the run seed, leaving the world seed alone so one world file serves
/// several seeds.
void override_seed(RunConfig& config, std::uint64_t seed);

/// Fully resolved config as canonical JSON (sorted keys, every default
/// spelled out). Parsing it gives back an equivalent config.
std::string canonical_json(const RunConfig& config);

/// FNV-1a of the canonical JSON without output_dir and snapshot_interval;
/// snapshots are bound to it.
std::uint64_t config_digest(const RunConfig& config);

/// FNV-1a over the world section and world seed only; world files are bound
/// to it.
std::uint64_t world_digest(const WorldConfig& world, std::uint64_t world_seed);

}  // namespace bioslam
