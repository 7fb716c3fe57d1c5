#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "domac/env.hpp"
#include "domac/oppmodel.hpp"

namespace domac {

/// Predicted probabilities are floored at this value inside logarithms.
inline constexpr double kProbabilityFloor = 1e-12;

/// KL(truth || predicted).
double kld(const Eigen::Ref<const VectorXd>& truth, const Eigen::Ref<const VectorXd>& predicted);

/// Index of the largest entry, lowest index on ties.
int argmax(const Eigen::Ref<const VectorXd>& v);

/// Fraction of rows whose argmax equals the realised action.
double prediction_accuracy(std::span<const int> true_actions, const Eigen::Ref<const RowMatrix>& predicted);

/// What an evaluation rollout saw, kept for metrics only: the world state before
/// each step, every predator's observation of it and the realised prey actions.
struct EvalTrace {
    std::vector<GridState> states;
    std::vector<std::vector<VectorXd>> observations;
    std::vector<std::vector<Action>> prey_actions;

    void clear();
};

struct OpponentDiagnostics {
    /// unset when the model's output size differs from the prey action count
    std::optional<double> kld;
    double entropy = 0.0;
    std::optional<double> accuracy;
    std::int64_t samples = 0;
};

/// One entry per (agent, opponent) in row-major order. Averages over every
/// visited step at which the opponent was alive.
std::vector<OpponentDiagnostics> collect_diagnostics(std::span<const std::vector<OpponentModel>> models,
                                                     const EvalTrace& trace, const PredatorPrey& env);

/// Mean of each field over the entries that define it.
OpponentDiagnostics average_diagnostics(std::span<const OpponentDiagnostics> entries);

}  // namespace domac
