#pragma once

#include <filesystem>
#include <string>

#include "domac/trainer.hpp"

namespace domac {

/// YAML run configuration. Top-level keys:
///   variant, preset, seed, episodes
/// and one level of sections:
///   env:            grid_size, n_predators, n_preys, view_size, max_steps, mask_opponent_obs
///   rollout:        episodes_per_update, forward_steps, n_envs
///   algorithm:      gamma, alpha, kappa, n_quantiles, quantile_levels, opponent_samples,
///                   enumeration_cap, critic_steps
///   optimizer:      lr_actor, lr_opponent, lr_critic
///   network:        hidden, activation
///   opponent_model: dim, frozen, checkpoint
///   evaluation:     every, episodes
///   logging:        checkpoint_every, record_wall_time
/// `preset` is applied before every other key, whatever its position.
/// Unknown keys and out-of-range values raise ConfigError with the line number.
TrainConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
TrainConfig parse_config(const std::filesystem::path& path);

/// Every field written explicitly; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const TrainConfig& config);

}  // namespace domac
