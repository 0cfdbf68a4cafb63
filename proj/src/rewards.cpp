#include "bioslam/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "bioslam/error.hpp"

namespace bioslam {

double external_reward(const ModelParams& params, const TripletSample& sample, double margin) {
  return loc_loss(params, sample, margin);
}

double internal_reward(const LatentCode& original, const LatentCode& augmented) {
  const double na = l2_norm(original.z);
  const double nb = l2_norm(augmented.z);
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::degenerate_descriptor, "zero-norm latent code in internal reward");
  const double cosine = dot(original.z, augmented.z) / (na * nb);
  return std::clamp(1.0 - cosine, 0.0, 2.0);
}

double internal_reward(const ModelParams& params, std::span<const double> signal, const AugmentConfig& augment_config,
                       std::uint64_t seed) {
  const LatentCode z = encode(params, signal);
  const LatentCode z_aug = encode(params, augment(signal, augment_config, seed));
  return internal_reward(z, z_aug);
}

RewardBreakdown total_reward(double external, double internal) {
  if (external < 0.0) throw Error(ErrorKind::invalid_argument, "external reward must be non-negative");
  return RewardBreakdown{external, internal, external + internal};
}

Vec reward_ratio(std::span<const double> group_means) {
  if (group_means.empty()) throw Error(ErrorKind::invalid_argument, "reward_ratio needs at least one group");
  double sum = 0.0;
  for (double m : group_means) {
    if (m < 0.0 || !std::isfinite(m)) throw Error(ErrorKind::invalid_argument, "group means must be finite and >= 0");
    sum += m;
  }
  Vec out(group_means.size());
  if (sum == 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = group_means[i] / sum;
  return out;
}

}  // namespace bioslam
