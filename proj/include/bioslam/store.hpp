#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bioslam/lifelong.hpp"
#include "bioslam/synthworld.hpp"

namespace bioslam {

inline constexpr std::uint16_t kWorldFormatVersion = 1;
inline constexpr std::uint16_t kSnapshotFormatVersion = 1;

/// World file: "BSLW", u16 version, u64 world digest, u64 domain count,
/// u64 place count, then the world config, places and renderers. All
/// integers are little-endian u64 and all reals little-endian f64; a trailing
/// u64 FNV-1a checksum covers every preceding byte.
std::vector<std::uint8_t> serialize_world(const World& world, std::uint64_t digest);

struct LoadedWorld {
  World world;
  std::uint64_t digest = 0;
};

/// Throws Error(corrupt_file) on a bad magic, version, checksum or layout.
LoadedWorld deserialize_world(const std::vector<std::uint8_t>& bytes);

void save_world(const std::string& path, const World& world, std::uint64_t digest);
LoadedWorld load_world(const std::string& path);

/// Snapshot: "BSLM", u16 version, u64 config digest, then the RunState
/// (counters, parameters, static memory, dynamic memory, rehearsal buffer)
/// and a trailing u64 FNV-1a checksum.
std::vector<std::uint8_t> serialize_state(const RunState& state, std::uint64_t config_digest);

/// Restores into `blank`, which supplies the memory configurations (use the
/// trainer's initial_state()). Throws Error(corrupt_file) for damaged input
/// and Error(digest_mismatch) when the snapshot belongs to another config.
RunState deserialize_state(const std::vector<std::uint8_t>& bytes, std::uint64_t expected_digest, RunState blank);

/// Atomic: writes a temporary file, then renames it into place.
void save_snapshot(const std::string& path, const RunState& state, std::uint64_t config_digest);
RunState load_snapshot(const std::string& path, std::uint64_t expected_digest, RunState blank);

/// Serialized size of a trace with latent dimension d_z.
std::size_t serialized_trace_bytes(std::size_t latent_dim);

/// Largest possible snapshot for the given limits: K_max full clusters of
/// N_max traces, B_d dynamic traces and a full rehearsal buffer of
/// `rehearsal_capacity` entries.
std::size_t snapshot_size_bound(const ModelDims& dims, const StaticMemoryConfig& static_config,
                                std::size_t dynamic_capacity, std::size_t rehearsal_capacity);

}  // namespace bioslam
