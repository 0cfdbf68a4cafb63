#pragma once

#include <cstdint>
#include <span>

#include "bioslam/model.hpp"
#include "bioslam/types.hpp"

namespace bioslam {

/// R_ex: the localization loss of a query against its triplet partners.
double external_reward(const ModelParams& params, const TripletSample& sample, double margin);

/// R_in = 1 - cos(E(q), E(A(q))), computed on latent codes.
double internal_reward(const ModelParams& params, std::span<const double> signal, const AugmentConfig& augment,
                       std::uint64_t seed);

/// 1 - cos(a, b); throws Error(degenerate_descriptor) for a zero-norm code.
double internal_reward(const LatentCode& original, const LatentCode& augmented);

/// R = R_ex + R_in.
RewardBreakdown total_reward(double external, double internal);

/// Per-group share of the summed mean reward. All-zero means give uniform
/// shares.
Vec reward_ratio(std::span<const double> group_means);

}  // namespace bioslam
