#pragma once

#include <string>
#include <vector>

#include "domac/rng.hpp"

namespace domac {

/// Max relative gradient error over every parameter block of one random draw.
/// Each draw builds small random networks and inputs from `rng`.
double mlp_gradient_error(Rng& rng);
/// Actor surrogate with the coefficients held fixed; policy and opponent-model blocks.
double actor_gradient_error(Rng& rng);
/// Quantile Huber loss through a random critic.
double quantile_critic_gradient_error(Rng& rng);
/// Squared TD loss through a random single-output critic.
double scalar_critic_gradient_error(Rng& rng);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Fast gradient and oracle checks behind `domac selftest`.
std::vector<CheckResult> run_selftest_checks();

}  // namespace domac
