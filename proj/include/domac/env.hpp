#pragma once

#include <compare>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "domac/rng.hpp"

namespace domac {

/// Shared by predators and preys.
enum class Action : int { Up = 0, Down = 1, Left = 2, Right = 3, NoOp = 4 };
inline constexpr int kNumActions = 5;

struct Cell {
    int row = 0;
    int col = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct GridConfig {
    int grid_size = 5;
    int n_predators = 2;
    int n_preys = 1;
    int view_size = 5;
    int max_steps = 100;
    bool mask_opponent_obs = false;

    static GridConfig pp2v1();
    static GridConfig pp4v2();

    void validate() const;
    /// own coordinates (2) + one-hot predator index + two relative coordinates per prey.
    int observation_size() const { return 2 + n_predators + 2 * n_preys; }

    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct GridState {
    std::vector<Cell> predators;
    std::vector<Cell> preys;
    std::vector<bool> prey_alive;
    int step_count = 0;

    bool all_preys_dead() const;
    friend bool operator==(const GridState&, const GridState&) = default;
};

struct CatchEvent {
    int prey = 0;
    int n_catchers = 0;
    bool killed = false;

    friend bool operator==(const CatchEvent&, const CatchEvent&) = default;
};

struct StepResult {
    std::vector<Eigen::VectorXd> observations;
    double reward = 0.0;
    bool done = false;
    std::vector<CatchEvent> catches;
};

inline constexpr double kStepCost = -0.01;
inline constexpr double kTeamCatchReward = 5.0;
inline constexpr double kSoloCatchPenalty = -0.5;
/// Prey slot value when the prey is out of view, dead, or masked.
inline constexpr double kHiddenPreySentinel = -1.0;

/// Fixed opponent policy. The default is state-independent uniform over the five
/// actions; the interface lets alternative prey behaviours be plugged in.
class PreyPolicy {
public:
    virtual ~PreyPolicy() = default;
    virtual Eigen::VectorXd distribution(const GridState& state, int prey) const = 0;
};

class UniformPreyPolicy final : public PreyPolicy {
public:
    Eigen::VectorXd distribution(const GridState& state, int prey) const override;
};

Cell apply_move(Cell cell, Action action, int grid_size);

/// Partially observable predator-prey game. The object itself is immutable;
/// episode state lives in GridState and randomness comes from the caller's Rng,
/// so independent instances can be stepped from different threads.
class PredatorPrey {
public:
    explicit PredatorPrey(GridConfig config,
                          std::shared_ptr<const PreyPolicy> prey_policy = std::make_shared<UniformPreyPolicy>());

    const GridConfig& config() const { return config_; }

    /// Places every agent on a distinct uniformly chosen cell.
    GridState reset(Rng& rng) const;
    GridState reset(std::uint64_t seed) const;

    Eigen::VectorXd observe(const GridState& state, int predator) const;
    std::vector<Eigen::VectorXd> observe_all(const GridState& state) const;

    /// Ground-truth opponent distribution; throws for a dead prey.
    Eigen::VectorXd prey_policy(const GridState& state, int prey) const;

    /// One action per prey (dead preys get NoOp, and consume no randomness).
    std::vector<Action> draw_prey_actions(const GridState& state, Rng& rng) const;

    /// Simultaneous move, boundary clipping, catch detection, reward, termination.
    StepResult step(GridState& state, const std::vector<Action>& predator_actions,
                    const std::vector<Action>& prey_actions) const;
    StepResult step(GridState& state, const std::vector<Action>& predator_actions, Rng& rng) const;

private:
    GridConfig config_;
    std::shared_ptr<const PreyPolicy> prey_policy_;
};

/// Line-delimited JSON trajectory log. Field order per record:
/// episode, step, predators [[r,c],...], preys [[r,c],...], prey_alive,
/// predator_actions, prey_actions, reward, done.
class TrajectoryDump {
public:
    explicit TrajectoryDump(std::ostream& out) : out_(out) {}

    void record(int episode, const GridState& before, const std::vector<Action>& predator_actions,
                const std::vector<Action>& prey_actions, double reward, bool done);

private:
    std::ostream& out_;
};

}  // namespace domac
