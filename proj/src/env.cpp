#include "domac/env.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>

#include "json.hpp"

#include "domac/errors.hpp"

namespace domac {

GridConfig GridConfig::pp2v1() { return GridConfig{5, 2, 1, 5, 100, false}; }
GridConfig GridConfig::pp4v2() { return GridConfig{7, 4, 2, 5, 100, false}; }

void GridConfig::validate() const {
    if (grid_size < 2) throw ConfigError("grid_size must be >= 2");
    if (n_predators < 1) throw ConfigError("n_predators must be >= 1");
    if (n_preys < 1) throw ConfigError("n_preys must be >= 1");
    if (view_size < 1 || view_size % 2 == 0) throw ConfigError("view_size must be a positive odd integer");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (n_predators + n_preys > grid_size * grid_size)
        throw ConfigError("grid too small to place every agent on a distinct cell");
}

bool GridState::all_preys_dead() const {
    return std::none_of(prey_alive.begin(), prey_alive.end(), [](bool a) { return a; });
}

Eigen::VectorXd UniformPreyPolicy::distribution(const GridState&, int) const {
    return Eigen::VectorXd::Constant(kNumActions, 1.0 / kNumActions);
}

Cell apply_move(Cell cell, Action action, int grid_size) {
    switch (action) {
        case Action::Up: cell.row -= 1; break;
        case Action::Down: cell.row += 1; break;
        case Action::Left: cell.col -= 1; break;
        case Action::Right: cell.col += 1; break;
        case Action::NoOp: break;
    }
    cell.row = std::clamp(cell.row, 0, grid_size - 1);
    cell.col = std::clamp(cell.col, 0, grid_size - 1);
    return cell;
}

PredatorPrey::PredatorPrey(GridConfig config, std::shared_ptr<const PreyPolicy> prey_policy)
    : config_(config), prey_policy_(std::move(prey_policy)) {
    config_.validate();
    if (!prey_policy_) throw ConfigError("PredatorPrey: prey policy is null");
}

GridState PredatorPrey::reset(Rng& rng) const {
    const int x = config_.grid_size;
    std::vector<int> free_cells(x * x);
    for (int i = 0; i < x * x; ++i) free_cells[i] = i;
    auto take = [&] {
        const int k = rng.uniform_int(static_cast<int>(free_cells.size()));
        const int id = free_cells[k];
        free_cells.erase(free_cells.begin() + k);
        return Cell{id / x, id % x};
    };
    GridState state;
    for (int i = 0; i < config_.n_predators; ++i) state.predators.push_back(take());
    for (int i = 0; i < config_.n_preys; ++i) state.preys.push_back(take());
    state.prey_alive.assign(config_.n_preys, true);
    return state;
}

GridState PredatorPrey::reset(std::uint64_t seed) const {
    Rng rng(seed);
    return reset(rng);
}

Eigen::VectorXd PredatorPrey::observe(const GridState& state, int predator) const {
    if (predator < 0 || predator >= config_.n_predators) throw ConfigError("observe: predator index out of range");
    const int x = config_.grid_size;
    const int half = (config_.view_size - 1) / 2;
    const double coord_scale = 1.0 / (x - 1);
    const double offset_scale = 1.0 / std::max(1, config_.view_size - 1);

    Eigen::VectorXd obs = Eigen::VectorXd::Zero(config_.observation_size());
    const Cell me = state.predators[predator];
    obs(0) = me.row * coord_scale;
    obs(1) = me.col * coord_scale;
    obs(2 + predator) = 1.0;
    const int base = 2 + config_.n_predators;
    for (int k = 0; k < config_.n_preys; ++k) {
        const int dr = state.preys[k].row - me.row;
        const int dc = state.preys[k].col - me.col;
        const bool visible = !config_.mask_opponent_obs && state.prey_alive[k] && std::abs(dr) <= half &&
                             std::abs(dc) <= half;
        obs(base + 2 * k) = visible ? dr * offset_scale : kHiddenPreySentinel;
        obs(base + 2 * k + 1) = visible ? dc * offset_scale : kHiddenPreySentinel;
    }
    return obs;
}

std::vector<Eigen::VectorXd> PredatorPrey::observe_all(const GridState& state) const {
    std::vector<Eigen::VectorXd> all;
    all.reserve(config_.n_predators);
    for (int i = 0; i < config_.n_predators; ++i) all.push_back(observe(state, i));
    return all;
}

Eigen::VectorXd PredatorPrey::prey_policy(const GridState& state, int prey) const {
    if (prey < 0 || prey >= config_.n_preys) throw ConfigError("prey_policy: prey index out of range");
    if (!state.prey_alive[prey]) throw ConfigError("prey_policy: prey " + std::to_string(prey) + " is dead");
    return prey_policy_->distribution(state, prey);
}

std::vector<Action> PredatorPrey::draw_prey_actions(const GridState& state, Rng& rng) const {
    std::vector<Action> actions(config_.n_preys, Action::NoOp);
    for (int k = 0; k < config_.n_preys; ++k)
        if (state.prey_alive[k]) actions[k] = static_cast<Action>(rng.categorical(prey_policy(state, k)));
    return actions;
}

StepResult PredatorPrey::step(GridState& state, const std::vector<Action>& predator_actions,
                              const std::vector<Action>& prey_actions) const {
    if (predator_actions.size() != static_cast<std::size_t>(config_.n_predators))
        throw ConfigError("step: expected " + std::to_string(config_.n_predators) + " predator actions, got " +
                          std::to_string(predator_actions.size()));
    if (prey_actions.size() != static_cast<std::size_t>(config_.n_preys))
        throw ConfigError("step: prey action count mismatch");
    if (state.step_count >= config_.max_steps || state.all_preys_dead())
        throw ConfigError("step: episode already finished");

    const int x = config_.grid_size;
    for (int i = 0; i < config_.n_predators; ++i) state.predators[i] = apply_move(state.predators[i], predator_actions[i], x);
    for (int k = 0; k < config_.n_preys; ++k)
        if (state.prey_alive[k]) state.preys[k] = apply_move(state.preys[k], prey_actions[k], x);

    StepResult result;
    result.reward = kStepCost;
    for (int k = 0; k < config_.n_preys; ++k) {
        if (!state.prey_alive[k]) continue;
        int catchers = 0;
        for (const Cell& p : state.predators)
            if (std::abs(p.row - state.preys[k].row) + std::abs(p.col - state.preys[k].col) == 1) ++catchers;
        if (catchers == 0) continue;
        const bool killed = catchers >= 2;
        result.reward += killed ? kTeamCatchReward : kSoloCatchPenalty;
        result.catches.push_back({k, catchers, killed});
    }
    for (const auto& c : result.catches)
        if (c.killed) state.prey_alive[c.prey] = false;

    state.step_count += 1;
    result.done = state.all_preys_dead() || state.step_count >= config_.max_steps;
    result.observations = observe_all(state);
    return result;
}

StepResult PredatorPrey::step(GridState& state, const std::vector<Action>& predator_actions, Rng& rng) const {
    return step(state, predator_actions, draw_prey_actions(state, rng));
}

void TrajectoryDump::record(int episode, const GridState& before, const std::vector<Action>& predator_actions,
                            const std::vector<Action>& prey_actions, double reward, bool done) {
    auto cells = [](const std::vector<Cell>& cs) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& c : cs) arr.push_back({c.row, c.col});
        return arr;
    };
    auto actions = [](const std::vector<Action>& as) {
        std::vector<int> ids;
        for (Action a : as) ids.push_back(static_cast<int>(a));
        return ids;
    };
    nlohmann::ordered_json rec;
    rec["episode"] = episode;
    rec["step"] = before.step_count;
    rec["predators"] = cells(before.predators);
    rec["preys"] = cells(before.preys);
    rec["prey_alive"] = std::vector<bool>(before.prey_alive);
    rec["predator_actions"] = actions(predator_actions);
    rec["prey_actions"] = actions(prey_actions);
    rec["reward"] = reward;
    rec["done"] = done;
    out_ << rec.dump() << '\n';
}

}  // namespace domac
