#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bioslam/matrix.hpp"
#include "bioslam/types.hpp"

namespace bioslam {

struct ModelDims {
  std::size_t ring_width = 64;  // W
  std::size_t hidden = 32;      // h
  std::size_t latent = 16;      // d_z
  std::size_t descriptor = 32;  // d_f

  /// Dimension of the shift-invariant feature, W/2 + 1.
  std::size_t feature_dim() const { return ring_width / 2 + 1; }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct Dense {
  Matrix weight;  // out x in
  Vec bias;       // out

  Dense() = default;
  Dense(std::size_t in, std::size_t out) : weight(out, in), bias(out, 0.0) {}

  friend bool operator==(const Dense&, const Dense&) = default;
};

/// Encoder (two affine layers, tanh between), descriptor head (affine) and
/// decoder (two affine layers, tanh between). Gradients reuse this type.
struct ModelParams {
  ModelDims dims;
  Dense enc1;  // feature_dim -> hidden
  Dense enc2;  // hidden -> latent
  Dense head;  // latent -> descriptor
  Dense dec1;  // latent -> hidden
  Dense dec2;  // hidden -> feature_dim

  static ModelParams zeros(const ModelDims& dims);
  static ModelParams random(const ModelDims& dims, std::uint64_t seed);

  /// Visits every weight and bias array in a fixed order.
  template <class F>
  void for_each_tensor(F&& f) {
    for (Dense* d : {&enc1, &enc2, &head, &dec1, &dec2}) {
      f(std::span<double>(d->weight.data));
      f(std::span<double>(d->bias));
    }
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    for (const Dense* d : {&enc1, &enc2, &head, &dec1, &dec2}) {
      f(std::span<const double>(d->weight.data));
      f(std::span<const double>(d->bias));
    }
  }

  std::size_t parameter_count() const;
  Vec flatten() const;
  void assign(std::span<const double> flat);
  bool finite() const;

  /// this += scale * other
  void axpy(double scale, const ModelParams& other);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Magnitude spectrum |DFT(signal)[k]| for k = 0..W/2. Invariant to circular
/// shifts of the input. Throws on odd or mismatched length.
Vec invariant_transform(std::span<const double> signal);
Vec invariant_transform(std::span<const double> signal, std::size_t ring_width);

LatentCode encode(const ModelParams& params, std::span<const double> signal);
/// Encoder applied to an already-transformed feature (used for decoded replays).
LatentCode encode_feature(const ModelParams& params, std::span<const double> feature);
Descriptor describe(const ModelParams& params, const LatentCode& z);
/// Synthetic sample in invariant-feature space.
Vec decode(const ModelParams& params, const LatentCode& z);

struct AugmentConfig {
  double noise = 0.05;
  double scale_min = 0.8;
  double scale_max = 1.25;
};

/// Random circular shift, amplitude scale and additive Gaussian noise.
Vec augment(std::span<const double> signal, const AugmentConfig& config, std::uint64_t seed);

/// How a loss input enters the network: a real invariant feature goes through
/// the encoder; a latent code is first decoded.
enum class InputKind { feature, latent };

struct InputRef {
  InputKind kind = InputKind::feature;
  std::span<const double> values;
};

struct TripletSample {
  InputRef query;
  std::vector<InputRef> positives;
  std::vector<InputRef> negatives;
};

/// Lazy-hardest triplet hinge: max(max_i d(q,p_i) + alpha - min_j d(q,n_j), 0)
/// with squared descriptor distances. When `grad` is given, scale * dL/dtheta
/// is accumulated into it.
double loc_loss(const ModelParams& params, const TripletSample& sample, double margin, ModelParams* grad = nullptr,
                double scale = 1.0);

/// ||E(G(z)) - z||_2 where E bypasses the invariant transform.
double rec_loss(const ModelParams& params, const LatentCode& z, ModelParams* grad = nullptr, double scale = 1.0);

struct TrainerHyper {
  double margin = 0.5;         // alpha
  double learning_rate = 1e-2; // eta
  std::size_t epochs = 30;     // per segment
  std::size_t real_batch = 20;
  std::size_t replay_batch = 20;
  AugmentConfig augment;
  double early_stop_tol = 1e-4;
  std::size_t early_stop_patience = 3;

  void validate() const;
};

struct JointLoss {
  double loc_real = 0.0;
  double loc_replay = 0.0;
  double rec = 0.0;
  double total = 0.0;
};

/// Mean loc loss over real samples + mean loc loss over replayed samples +
/// mean rec loss over replayed codes. Empty batches contribute zero.
JointLoss joint_loss(const ModelParams& params, std::span<const TripletSample> real,
                     std::span<const TripletSample> replayed, std::span<const LatentCode> rec_codes, double margin,
                     ModelParams* grad = nullptr);

/// One SGD step on the joint loss. On a non-finite loss or gradient throws
/// Error(non_finite) and leaves params untouched.
JointLoss joint_loss_step(ModelParams& params, std::span<const TripletSample> real,
                          std::span<const TripletSample> replayed, std::span<const LatentCode> rec_codes,
                          const TrainerHyper& hyper);

}  // namespace bioslam
