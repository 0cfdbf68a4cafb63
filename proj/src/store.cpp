#include "bioslam/store.hpp"

#include <span>

#include "bioslam/binary_io.hpp"
#include "bioslam/error.hpp"

namespace bioslam {

namespace {

constexpr std::string_view kWorldMagic = "BSLW";
constexpr std::string_view kSnapshotMagic = "BSLM";

void seal(ByteWriter& w) { w.u64(fnv1a64(std::span<const std::uint8_t>(w.bytes()))); }

// Checks magic, version and trailing checksum; returns a reader positioned
// just after the version, limited to the checksummed payload.
ByteReader open_sealed(const std::vector<std::uint8_t>& bytes, std::string_view magic, std::uint16_t version,
                       const std::string& what) {
  if (bytes.size() < magic.size() + 2 + 8) throw Error(ErrorKind::corrupt_file, what + ": file too short");
  const std::span<const std::uint8_t> payload(bytes.data(), bytes.size() - 8);
  ByteReader tail(std::span<const std::uint8_t>(bytes).subspan(bytes.size() - 8), what);
  ByteReader r(payload, what);
  if (r.raw(magic.size()) != magic) throw Error(ErrorKind::corrupt_file, what + ": bad magic");
  const std::uint16_t v = r.u16();
  if (v != version)
    throw Error(ErrorKind::corrupt_file, what + ": unsupported format version " + std::to_string(v));
  if (tail.u64() != fnv1a64(payload)) throw Error(ErrorKind::corrupt_file, what + ": checksum mismatch");
  return r;
}

void put_trace(ByteWriter& w, const MemoryTrace& t) {
  w.vec(t.z.z);
  w.f64(t.pose.x);
  w.f64(t.pose.y);
  w.f64(t.reward);
  w.u64(t.replay_count);
  w.i64(t.birth_step);
  w.u64(t.domain);
  w.u64(t.segment);
  w.u64(t.id);
}

MemoryTrace get_trace(ByteReader& r) {
  MemoryTrace t;
  t.z.z = r.vec();
  t.pose.x = r.f64();
  t.pose.y = r.f64();
  t.reward = r.f64();
  t.replay_count = r.u64();
  t.birth_step = r.i64();
  t.domain = static_cast<DomainId>(r.u64());
  t.segment = static_cast<std::uint32_t>(r.u64());
  t.id = r.u64();
  return t;
}

void put_dense(ByteWriter& w, const Dense& d) {
  w.matrix(d.weight);
  w.vec(d.bias);
}

Dense get_dense(ByteReader& r, std::size_t in, std::size_t out) {
  Dense d;
  d.weight = r.matrix();
  d.bias = r.vec();
  if (d.weight.rows != out || d.weight.cols != in || d.bias.size() != out) r.fail("layer shape does not match dims");
  return d;
}

constexpr std::size_t kTraceFixedBytes = 8 * 8;  // pose(2) reward count birth domain segment id

}  // namespace

std::vector<std::uint8_t> serialize_world(const World& world, std::uint64_t digest) {
  const WorldConfig& c = world.config;
  ByteWriter w;
  w.raw(kWorldMagic);
  w.u16(kWorldFormatVersion);
  w.u64(digest);
  w.u64(c.domains);
  w.u64(c.places);
  w.u64(world.seed);
  w.u64(c.trajectories);
  w.f64(c.spacing);
  w.f64(c.trajectory_offset);
  w.u64(c.ring_width);
  w.u64(c.scene_dim);
  w.f64(c.obs_noise);
  w.f64(c.scene_correlation);
  w.f64(c.bias_scale);
  w.u64(world.places.size());
  for (const auto& p : world.places) {
    w.f64(p.pose.x);
    w.f64(p.pose.y);
    w.u64(p.trajectory);
    w.vec(p.scene);
  }
  w.u64(world.renderers.size());
  for (const auto& r : world.renderers) {
    w.u8(static_cast<std::uint8_t>(r.nonlinearity));
    w.matrix(r.map);
    w.vec(r.bias);
  }
  seal(w);
  return std::move(w.bytes());
}

LoadedWorld deserialize_world(const std::vector<std::uint8_t>& bytes) {
  ByteReader r = open_sealed(bytes, kWorldMagic, kWorldFormatVersion, "world file");
  LoadedWorld out;
  out.digest = r.u64();
  World& world = out.world;
  WorldConfig& c = world.config;
  c.domains = r.u64();
  c.places = r.u64();
  world.seed = r.u64();
  c.trajectories = r.u64();
  c.spacing = r.f64();
  c.trajectory_offset = r.f64();
  c.ring_width = r.u64();
  c.scene_dim = r.u64();
  c.obs_noise = r.f64();
  c.scene_correlation = r.f64();
  c.bias_scale = r.f64();
  try {
    c.validate();
  } catch (const Error& e) {
    r.fail(std::string("invalid world config: ") + e.what());
  }

  const std::size_t places = r.count(8 * 4);
  if (places != c.places) r.fail("place count does not match header");
  world.places.resize(places);
  for (auto& p : world.places) {
    p.pose.x = r.f64();
    p.pose.y = r.f64();
    p.trajectory = r.u64();
    p.scene = r.vec();
    if (p.scene.size() != c.scene_dim) r.fail("scene dimension does not match header");
  }
  const std::size_t renderers = r.count(1 + 8 * 3);
  if (renderers != c.domains) r.fail("renderer count does not match header");
  world.renderers.resize(renderers);
  for (auto& rd : world.renderers) {
    const std::uint8_t nl = r.u8();
    if (nl > static_cast<std::uint8_t>(Nonlinearity::abs)) r.fail("unknown nonlinearity tag");
    rd.nonlinearity = static_cast<Nonlinearity>(nl);
    rd.map = r.matrix();
    rd.bias = r.vec();
    if (rd.map.rows != c.ring_width || rd.map.cols != c.scene_dim || rd.bias.size() != c.ring_width)
      r.fail("renderer shape does not match header");
  }
  if (r.remaining() != 0) r.fail("trailing bytes");
  return out;
}

void save_world(const std::string& path, const World& world, std::uint64_t digest) {
  write_file_atomic(path, serialize_world(world, digest));
}

LoadedWorld load_world(const std::string& path) { return deserialize_world(read_file(path)); }

std::vector<std::uint8_t> serialize_state(const RunState& s, std::uint64_t config_digest) {
  ByteWriter w;
  w.raw(kSnapshotMagic);
  w.u16(kSnapshotFormatVersion);
  w.u64(config_digest);

  w.u64(s.master_seed);
  w.u64(s.epoch);
  w.u64(s.segment);
  w.u64(s.epoch_in_segment);
  w.u64(s.segment_start_epoch);
  w.f64(s.last_epoch_loss);
  w.u64(s.stall_epochs);
  w.u64(s.initial_evaluated);
  w.u64(s.metrics_rows);

  const ModelParams& p = s.params;
  w.u64(p.dims.ring_width);
  w.u64(p.dims.hidden);
  w.u64(p.dims.latent);
  w.u64(p.dims.descriptor);
  for (const Dense* d : {&p.enc1, &p.enc2, &p.head, &p.dec1, &p.dec2}) put_dense(w, *d);

  w.u64(s.static_memory.next_cluster_id());
  w.u64(s.static_memory.clusters().size());
  for (const auto& c : s.static_memory.clusters()) {
    w.u64(c.id);
    w.i64(c.creation_step);
    w.vec(c.centroid.c);
    w.u64(c.members.size());
    for (const auto& t : c.members) put_trace(w, t);
  }

  w.u64(s.dynamic_memory.traces().size());
  for (const auto& t : s.dynamic_memory.traces()) put_trace(w, t);

  w.u64(s.rehearsal.seen);
  w.u64(s.rehearsal.entries.size());
  for (const auto& e : s.rehearsal.entries) {
    w.vec(e.feature);
    w.f64(e.pose.x);
    w.f64(e.pose.y);
    w.u64(e.domain);
    w.u64(e.segment);
    w.u64(e.id);
  }
  seal(w);
  return std::move(w.bytes());
}

RunState deserialize_state(const std::vector<std::uint8_t>& bytes, std::uint64_t expected_digest, RunState s) {
  ByteReader r = open_sealed(bytes, kSnapshotMagic, kSnapshotFormatVersion, "snapshot");
  const std::uint64_t digest = r.u64();
  if (digest != expected_digest)
    throw Error(ErrorKind::digest_mismatch, "snapshot was written under a different config (digest " +
                                                std::to_string(digest) + ", expected " +
                                                std::to_string(expected_digest) + ")");

  s.master_seed = r.u64();
  s.epoch = r.u64();
  s.segment = r.u64();
  s.epoch_in_segment = r.u64();
  s.segment_start_epoch = r.u64();
  s.last_epoch_loss = r.f64();
  s.stall_epochs = r.u64();
  s.initial_evaluated = r.u64();
  s.metrics_rows = r.u64();

  ModelDims dims;
  dims.ring_width = r.u64();
  dims.hidden = r.u64();
  dims.latent = r.u64();
  dims.descriptor = r.u64();
  if (!(dims == s.params.dims)) r.fail("model dimensions differ from the config");
  ModelParams& p = s.params;
  const std::size_t f = dims.feature_dim();
  p.enc1 = get_dense(r, f, dims.hidden);
  p.enc2 = get_dense(r, dims.hidden, dims.latent);
  p.head = get_dense(r, dims.latent, dims.descriptor);
  p.dec1 = get_dense(r, dims.latent, dims.hidden);
  p.dec2 = get_dense(r, dims.hidden, f);

  const std::size_t trace_min = 8 + kTraceFixedBytes;
  const std::uint64_t next_id = r.u64();
  std::vector<Cluster> clusters(r.count(8 * 4));
  for (auto& c : clusters) {
    c.id = r.u64();
    c.creation_step = r.i64();
    c.centroid.c = r.vec();
    c.members.resize(r.count(trace_min));
    for (auto& t : c.members) t = get_trace(r);
  }
  s.static_memory.restore(std::move(clusters), next_id);

  std::vector<MemoryTrace> dynamic(r.count(trace_min));
  for (auto& t : dynamic) t = get_trace(r);
  s.dynamic_memory.restore(std::move(dynamic));

  s.rehearsal.seen = r.u64();
  s.rehearsal.entries.resize(r.count(8 * 6));
  for (auto& e : s.rehearsal.entries) {
    e.feature = r.vec();
    e.pose.x = r.f64();
    e.pose.y = r.f64();
    e.domain = static_cast<DomainId>(r.u64());
    e.segment = static_cast<std::uint32_t>(r.u64());
    e.id = r.u64();
  }
  if (r.remaining() != 0) r.fail("trailing bytes");
  if (!p.finite()) r.fail("non-finite parameters");
  return s;
}

void save_snapshot(const std::string& path, const RunState& state, std::uint64_t config_digest) {
  write_file_atomic(path, serialize_state(state, config_digest));
}

RunState load_snapshot(const std::string& path, std::uint64_t expected_digest, RunState blank) {
  return deserialize_state(read_file(path), expected_digest, std::move(blank));
}

std::size_t serialized_trace_bytes(std::size_t latent_dim) { return 8 + 8 * latent_dim + kTraceFixedBytes; }

std::size_t snapshot_size_bound(const ModelDims& dims, const StaticMemoryConfig& static_config,
                                std::size_t dynamic_capacity, std::size_t rehearsal_capacity) {
  const std::size_t f = dims.feature_dim();
  auto dense = [](std::size_t in, std::size_t out) { return 16 + 8 * in * out + 8 + 8 * out; };
  std::size_t n = 4 + 2 + 8;  // magic, version, digest
  n += 9 * 8;                 // counters
  n += 4 * 8;                 // dims
  n += dense(f, dims.hidden) + dense(dims.hidden, dims.latent) + dense(dims.latent, dims.descriptor) +
       dense(dims.latent, dims.hidden) + dense(dims.hidden, f);
  const std::size_t trace = serialized_trace_bytes(dims.latent);
  const std::size_t cluster_header = 8 + 8 + (8 + 8 * (dims.latent + 2)) + 8;
  n += 8 + 8 + static_config.max_clusters * (cluster_header + static_config.max_members * trace);
  n += 8 + dynamic_capacity * trace;
  n += 8 + 8 + rehearsal_capacity * (8 + 8 * f + 5 * 8);
  n += 8;  // checksum
  return n;
}

}  // namespace bioslam
