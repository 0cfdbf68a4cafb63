#include "bioslam/model.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>

#include "bioslam/error.hpp"
#include "bioslam/rng.hpp"
#include "bioslam/synthworld.hpp"

namespace bioslam {

namespace {

// The FFTW planner is not thread-safe; plan creation and destruction are
// serialized, execution through the new-array interface is not.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct RealFft {
  explicit RealFft(std::size_t n) : n(n) {
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t n;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
};

RealFft& fft_for(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::unique_ptr<RealFft>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

void fill_normal(std::span<double> v, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (double& x : v) x = normal(rng);
}

constexpr double kStandardizeEps = 1e-8;

// Forward caches for manual backpropagation.
struct EncoderPass {
  Vec input;  // standardized feature
  double inv_scale = 0.0;
  Vec hidden;  // tanh activations
  Vec z;
};

struct DecoderPass {
  Vec z;
  Vec hidden;
  Vec out;
};

struct SamplePass {
  bool decoded = false;
  DecoderPass dec;
  EncoderPass enc;
  Vec raw;  // head output before normalization
  double norm = 0.0;
  Vec f;    // descriptor
};

void check_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) throw Error(ErrorKind::non_finite, std::string("non-finite ") + what);
}

DecoderPass run_decoder(const ModelParams& p, std::span<const double> z) {
  if (z.size() != p.dims.latent) throw Error(ErrorKind::dimension_mismatch, "latent code has wrong dimension");
  DecoderPass d;
  d.z.assign(z.begin(), z.end());
  d.hidden.resize(p.dims.hidden);
  affine(p.dec1.weight, p.dec1.bias, d.z, d.hidden);
  for (double& v : d.hidden) v = std::tanh(v);
  d.out.resize(p.dims.feature_dim());
  affine(p.dec2.weight, p.dec2.bias, d.hidden, d.out);
  check_finite(d.out, "decoder output");
  return d;
}

EncoderPass run_encoder(const ModelParams& p, std::span<const double> feature) {
  if (feature.size() != p.dims.feature_dim())
    throw Error(ErrorKind::dimension_mismatch, "invariant feature has wrong dimension");
  EncoderPass e;
  // Per-sample standardization of the non-DC bins. The DC bin is dropped: it
  // carries the mean signal level, which dominates rectified renderings and
  // makes every input nearly collinear. Standardizing also removes the overall
  // gain, so amplitude changes do not move the code.
  const std::size_t n = feature.size();
  const double m = static_cast<double>(n - 1);
  double mean = 0.0;
  for (std::size_t i = 1; i < n; ++i) mean += feature[i];
  mean /= m;
  double var = 0.0;
  for (std::size_t i = 1; i < n; ++i) var += (feature[i] - mean) * (feature[i] - mean);
  var /= m;
  e.inv_scale = 1.0 / std::sqrt(var + kStandardizeEps);
  e.input.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) e.input[i] = (feature[i] - mean) * e.inv_scale;
  e.hidden.resize(p.dims.hidden);
  affine(p.enc1.weight, p.enc1.bias, e.input, e.hidden);
  for (double& v : e.hidden) v = std::tanh(v);
  e.z.resize(p.dims.latent);
  affine(p.enc2.weight, p.enc2.bias, e.hidden, e.z);
  check_finite(e.z, "latent code");
  return e;
}

SamplePass run_sample(const ModelParams& p, const InputRef& input) {
  SamplePass s;
  if (input.kind == InputKind::latent) {
    s.decoded = true;
    s.dec = run_decoder(p, input.values);
    s.enc = run_encoder(p, s.dec.out);
  } else {
    s.enc = run_encoder(p, input.values);
  }
  s.raw.resize(p.dims.descriptor);
  affine(p.head.weight, p.head.bias, s.enc.z, s.raw);
  s.norm = l2_norm(s.raw);
  if (s.norm == 0.0) throw Error(ErrorKind::degenerate_descriptor, "descriptor head output is zero");
  check_finite(s.raw, "descriptor");
  s.f = s.raw;
  for (double& v : s.f) v /= s.norm;
  return s;
}

void backward_decoder(const ModelParams& p, const DecoderPass& d, std::span<const double> d_out, ModelParams& g,
                      double scale) {
  add_outer(g.dec2.weight, scale, d_out, d.hidden);
  for (std::size_t i = 0; i < d_out.size(); ++i) g.dec2.bias[i] += scale * d_out[i];
  Vec d_hidden(p.dims.hidden, 0.0);
  add_transpose_product(p.dec2.weight, d_out, d_hidden);
  for (std::size_t i = 0; i < d_hidden.size(); ++i) d_hidden[i] *= 1.0 - d.hidden[i] * d.hidden[i];
  add_outer(g.dec1.weight, scale, d_hidden, d.z);
  for (std::size_t i = 0; i < d_hidden.size(); ++i) g.dec1.bias[i] += scale * d_hidden[i];
}

// Backpropagates dL/dz through the encoder; when the pass was decoded, keeps
// going into the decoder.
void backward_from_latent(const ModelParams& p, const SamplePass& s, std::span<const double> d_z, ModelParams& g,
                          double scale) {
  add_outer(g.enc2.weight, scale, d_z, s.enc.hidden);
  for (std::size_t i = 0; i < d_z.size(); ++i) g.enc2.bias[i] += scale * d_z[i];
  Vec d_hidden(p.dims.hidden, 0.0);
  add_transpose_product(p.enc2.weight, d_z, d_hidden);
  for (std::size_t i = 0; i < d_hidden.size(); ++i) d_hidden[i] *= 1.0 - s.enc.hidden[i] * s.enc.hidden[i];
  add_outer(g.enc1.weight, scale, d_hidden, s.enc.input);
  for (std::size_t i = 0; i < d_hidden.size(); ++i) g.enc1.bias[i] += scale * d_hidden[i];
  if (!s.decoded) return;
  Vec d_input(p.dims.feature_dim(), 0.0);
  add_transpose_product(p.enc1.weight, d_hidden, d_input);
  const std::size_t n = d_input.size();
  const double m = static_cast<double>(n - 1);
  double mean_d = 0.0;
  double mean_dy = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    mean_d += d_input[i];
    mean_dy += d_input[i] * s.enc.input[i];
  }
  mean_d /= m;
  mean_dy /= m;
  Vec d_feature(n, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    d_feature[i] = s.enc.inv_scale * (d_input[i] - mean_d - s.enc.input[i] * mean_dy);
  backward_decoder(p, s.dec, d_feature, g, scale);
}

void backward_from_descriptor(const ModelParams& p, const SamplePass& s, std::span<const double> d_f,
                              ModelParams& g, double scale) {
  // f = u / |u|  =>  du = (df - f (f . df)) / |u|
  const double proj = dot(s.f, d_f);
  Vec d_raw(s.f.size());
  for (std::size_t i = 0; i < d_raw.size(); ++i) d_raw[i] = (d_f[i] - s.f[i] * proj) / s.norm;
  add_outer(g.head.weight, scale, d_raw, s.enc.z);
  for (std::size_t i = 0; i < d_raw.size(); ++i) g.head.bias[i] += scale * d_raw[i];
  Vec d_z(p.dims.latent, 0.0);
  add_transpose_product(p.head.weight, d_raw, d_z);
  backward_from_latent(p, s, d_z, g, scale);
}

}  // namespace

ModelParams ModelParams::zeros(const ModelDims& dims) {
  if (dims.ring_width < 2 || dims.ring_width % 2 != 0 || dims.hidden == 0 || dims.latent == 0 ||
      dims.descriptor == 0)
    throw Error(ErrorKind::invalid_argument, "invalid model dimensions");
  ModelParams p;
  p.dims = dims;
  const std::size_t f = dims.feature_dim();
  p.enc1 = Dense(f, dims.hidden);
  p.enc2 = Dense(dims.hidden, dims.latent);
  p.head = Dense(dims.latent, dims.descriptor);
  p.dec1 = Dense(dims.latent, dims.hidden);
  p.dec2 = Dense(dims.hidden, f);
  return p;
}

ModelParams ModelParams::random(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p = zeros(dims);
  Rng rng(seed);
  const double f = static_cast<double>(dims.feature_dim());
  const double w = static_cast<double>(dims.ring_width);
  const double h = static_cast<double>(dims.hidden);
  const double z = static_cast<double>(dims.latent);
  fill_normal(p.enc1.weight.data, 1.0 / std::sqrt(f), rng);
  fill_normal(p.enc2.weight.data, 1.0 / std::sqrt(h), rng);
  fill_normal(p.head.weight.data, 1.0 / std::sqrt(z), rng);
  fill_normal(p.dec1.weight.data, 1.0 / std::sqrt(z), rng);
  fill_normal(p.dec2.weight.data, std::sqrt(w / h), rng);
  return p;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for_each_tensor([&](std::span<const double> t) { n += t.size(); });
  return n;
}

Vec ModelParams::flatten() const {
  Vec out;
  out.reserve(parameter_count());
  for_each_tensor([&](std::span<const double> t) { out.insert(out.end(), t.begin(), t.end()); });
  return out;
}

void ModelParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw Error(ErrorKind::dimension_mismatch, "flat parameter size");
  std::size_t off = 0;
  for_each_tensor([&](std::span<double> t) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), t.size(), t.begin());
    off += t.size();
  });
}

bool ModelParams::finite() const {
  bool ok = true;
  for_each_tensor([&](std::span<const double> t) { ok = ok && all_finite(t); });
  return ok;
}

void ModelParams::axpy(double scale, const ModelParams& other) {
  std::vector<std::span<const double>> src;
  other.for_each_tensor([&](std::span<const double> t) { src.push_back(t); });
  std::size_t k = 0;
  for_each_tensor([&](std::span<double> t) {
    const auto s = src[k++];
    if (s.size() != t.size()) throw Error(ErrorKind::dimension_mismatch, "axpy on differently shaped params");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += scale * s[i];
  });
}

Vec invariant_transform(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n < 2 || n % 2 != 0) throw Error(ErrorKind::dimension_mismatch, "ring signal length must be even");
  RealFft& fft = fft_for(n);
  std::copy(signal.begin(), signal.end(), fft.in);
  fftw_execute_dft_r2c(fft.plan, fft.in, fft.out);
  Vec mag(n / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::hypot(fft.out[k][0], fft.out[k][1]);
  return mag;
}

Vec invariant_transform(std::span<const double> signal, std::size_t ring_width) {
  if (signal.size() != ring_width)
    throw Error(ErrorKind::dimension_mismatch, "ring signal length " + std::to_string(signal.size()) +
                                                   " != W = " + std::to_string(ring_width));
  return invariant_transform(signal);
}

LatentCode encode(const ModelParams& params, std::span<const double> signal) {
  return encode_feature(params, invariant_transform(signal, params.dims.ring_width));
}

LatentCode encode_feature(const ModelParams& params, std::span<const double> feature) {
  return LatentCode{run_encoder(params, feature).z};
}

Descriptor describe(const ModelParams& params, const LatentCode& z) {
  if (z.z.size() != params.dims.latent) throw Error(ErrorKind::dimension_mismatch, "latent code has wrong dimension");
  Vec raw(params.dims.descriptor);
  affine(params.head.weight, params.head.bias, z.z, raw);
  return Descriptor::from_raw(std::move(raw));
}

Vec decode(const ModelParams& params, const LatentCode& z) { return run_decoder(params, z.z).out; }

Vec augment(std::span<const double> signal, const AugmentConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> shift_dist(0, signal.empty() ? 0 : signal.size() - 1);
  std::uniform_real_distribution<double> scale_dist(config.scale_min, config.scale_max);
  const std::size_t shift = shift_dist(rng);
  const double scale = config.scale_min == config.scale_max ? config.scale_min : scale_dist(rng);
  Vec out = circular_shift(signal, shift);
  for (double& v : out) v *= scale;
  if (config.noise > 0.0) {
    std::normal_distribution<double> noise(0.0, config.noise);
    for (double& v : out) v += noise(rng);
  }
  return out;
}

double loc_loss(const ModelParams& params, const TripletSample& sample, double margin, ModelParams* grad,
                double scale) {
  if (sample.positives.empty() || sample.negatives.empty())
    throw Error(ErrorKind::invalid_argument, "loc_loss needs at least one positive and one negative");

  const SamplePass q = run_sample(params, sample.query);
  std::vector<SamplePass> pos;
  std::vector<SamplePass> neg;
  pos.reserve(sample.positives.size());
  neg.reserve(sample.negatives.size());
  for (const auto& in : sample.positives) pos.push_back(run_sample(params, in));
  for (const auto& in : sample.negatives) neg.push_back(run_sample(params, in));

  // max over (i, j) of d_pos_i + margin - d_neg_j separates into the hardest
  // positive and the hardest negative.
  std::size_t hard_pos = 0;
  double d_pos = -1.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const double d = squared_euclidean(q.f, pos[i].f);
    if (d > d_pos) {
      d_pos = d;
      hard_pos = i;
    }
  }
  std::size_t hard_neg = 0;
  double d_neg = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < neg.size(); ++j) {
    const double d = squared_euclidean(q.f, neg[j].f);
    if (d < d_neg) {
      d_neg = d;
      hard_neg = j;
    }
  }

  const double loss = std::max(d_pos + margin - d_neg, 0.0);
  if (grad == nullptr || loss <= 0.0) return loss;

  const std::size_t n = q.f.size();
  const SamplePass& p = pos[hard_pos];
  const SamplePass& ng = neg[hard_neg];
  Vec d_q(n), d_p(n), d_n(n);
  for (std::size_t i = 0; i < n; ++i) {
    d_q[i] = 2.0 * (ng.f[i] - p.f[i]);
    d_p[i] = -2.0 * (q.f[i] - p.f[i]);
    d_n[i] = 2.0 * (q.f[i] - ng.f[i]);
  }
  backward_from_descriptor(params, q, d_q, *grad, scale);
  backward_from_descriptor(params, p, d_p, *grad, scale);
  backward_from_descriptor(params, ng, d_n, *grad, scale);
  return loss;
}

double rec_loss(const ModelParams& params, const LatentCode& z, ModelParams* grad, double scale) {
  SamplePass s;
  s.decoded = true;
  s.dec = run_decoder(params, z.z);
  s.enc = run_encoder(params, s.dec.out);
  Vec r(z.z.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = s.enc.z[i] - z.z[i];
  const double loss = l2_norm(r);
  if (grad == nullptr || loss == 0.0) return loss;
  for (double& v : r) v /= loss;
  backward_from_latent(params, s, r, *grad, scale);
  return loss;
}

void TrainerHyper::validate() const {
  if (!(margin > 0.0)) throw Error(ErrorKind::invalid_config, "margin must be > 0");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw Error(ErrorKind::invalid_config, "learning_rate must be >= 0");
  if (epochs == 0) throw Error(ErrorKind::invalid_config, "epochs must be >= 1");
  if (real_batch == 0) throw Error(ErrorKind::invalid_config, "real_batch must be >= 1");
  if (augment.noise < 0.0 || !(augment.scale_min > 0.0) || augment.scale_max < augment.scale_min)
    throw Error(ErrorKind::invalid_config, "invalid augmentation settings");
}

JointLoss joint_loss(const ModelParams& params, std::span<const TripletSample> real,
                     std::span<const TripletSample> replayed, std::span<const LatentCode> rec_codes, double margin,
                     ModelParams* grad) {
  JointLoss out;
  if (!real.empty()) {
    const double w = 1.0 / static_cast<double>(real.size());
    for (const auto& s : real) out.loc_real += loc_loss(params, s, margin, grad, w);
    out.loc_real *= w;
  }
  if (!replayed.empty()) {
    const double w = 1.0 / static_cast<double>(replayed.size());
    for (const auto& s : replayed) out.loc_replay += loc_loss(params, s, margin, grad, w);
    out.loc_replay *= w;
  }
  if (!rec_codes.empty()) {
    const double w = 1.0 / static_cast<double>(rec_codes.size());
    for (const auto& z : rec_codes) out.rec += rec_loss(params, z, grad, w);
    out.rec *= w;
  }
  out.total = out.loc_real + out.loc_replay + out.rec;
  return out;
}

JointLoss joint_loss_step(ModelParams& params, std::span<const TripletSample> real,
                          std::span<const TripletSample> replayed, std::span<const LatentCode> rec_codes,
                          const TrainerHyper& hyper) {
  ModelParams grad = ModelParams::zeros(params.dims);
  const JointLoss loss = joint_loss(params, real, replayed, rec_codes, hyper.margin, &grad);
  if (!std::isfinite(loss.total) || !grad.finite()) throw Error(ErrorKind::non_finite, "joint loss or gradient");
  params.axpy(-hyper.learning_rate, grad);
  return loss;
}

}  // namespace bioslam
