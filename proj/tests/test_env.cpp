#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "domac/env.hpp"
#include "domac/errors.hpp"

using namespace domac;

namespace {

const std::vector<Action> kStay2{Action::NoOp, Action::NoOp};

double reward_after_noop(const PredatorPrey& env, std::vector<Cell> preds, Cell prey, GridState* out = nullptr) {
    GridState s{std::move(preds), {prey}, {true}, 0};
    const double r = env.step(s, kStay2, {Action::NoOp}).reward;
    if (out) *out = s;
    return r;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("three reward cases") {
    const PredatorPrey env(GridConfig::pp2v1());
    GridState s;
    CHECK(reward_after_noop(env, {{0, 0}, {4, 4}}, {2, 2}, &s) == -0.01);
    CHECK(s.prey_alive[0]);

    CHECK(reward_after_noop(env, {{1, 2}, {4, 4}}, {2, 2}, &s) == -0.01 + -0.5);
    CHECK(s.prey_alive[0]);

    const StepResult kill = [&] {
        GridState k{{{1, 2}, {2, 3}}, {{2, 2}}, {true}, 0};
        return env.step(k, kStay2, {Action::NoOp});
    }();
    CHECK(kill.reward == -0.01 + 5.0);
    CHECK(kill.done);
    REQUIRE(kill.catches.size() == 1);
    CHECK(kill.catches[0].killed);
    CHECK(kill.catches[0].n_catchers == 2);
}

TEST_CASE("diagonal is not adjacent and sharing a cell does not catch") {
    const PredatorPrey env(GridConfig::pp2v1());
    CHECK(reward_after_noop(env, {{1, 1}, {3, 3}}, {2, 2}) == -0.01);
    CHECK(reward_after_noop(env, {{2, 2}, {4, 4}}, {2, 2}) == -0.01);
}

TEST_CASE("catch is judged after moving") {
    const PredatorPrey env(GridConfig::pp2v1());
    GridState s{{{0, 2}, {4, 4}}, {{2, 2}}, {true}, 0};
    // predator steps down next to the prey
    CHECK(env.step(s, {Action::Down, Action::NoOp}, {Action::NoOp}).reward == -0.01 + -0.5);
}

TEST_CASE("two preys in one step add up") {
    const PredatorPrey env(GridConfig::pp4v2());
    GridState s{{{0, 1}, {1, 0}, {6, 5}, {5, 5}}, {{0, 0}, {6, 6}}, {true, true}, 0};
    const StepResult r = env.step(s, {Action::NoOp, Action::NoOp, Action::NoOp, Action::NoOp},
                                  {Action::NoOp, Action::NoOp});
    // prey 0 has two catchers, prey 1 has one (5,5 is diagonal)
    CHECK(r.reward == doctest::Approx(-0.01 + 5.0 - 0.5).epsilon(1e-15));
    CHECK_FALSE(r.done);
    CHECK(s.prey_alive == std::vector<bool>{false, true});
}

TEST_CASE("episode ends at the step cap") {
    const PredatorPrey env(GridConfig::pp2v1());
    GridState s{{{0, 0}, {0, 4}}, {{4, 2}}, {true}, 0};
    for (int t = 1; t <= 100; ++t) {
        const StepResult r = env.step(s, kStay2, {Action::NoOp});
        CHECK(r.done == (t == 100));
    }
    CHECK(s.step_count == 100);
    CHECK_THROWS_AS(env.step(s, kStay2, {Action::NoOp}), ConfigError);
}

TEST_CASE("boundary clipping") {
    CHECK(apply_move({0, 0}, Action::Up, 5) == Cell{0, 0});
    CHECK(apply_move({0, 0}, Action::Left, 5) == Cell{0, 0});
    CHECK(apply_move({4, 4}, Action::Down, 5) == Cell{4, 4});
    CHECK(apply_move({4, 4}, Action::Right, 5) == Cell{4, 4});
    CHECK(apply_move({2, 2}, Action::Up, 5) == Cell{1, 2});
    CHECK(apply_move({2, 2}, Action::Down, 5) == Cell{3, 2});
    CHECK(apply_move({2, 2}, Action::Left, 5) == Cell{2, 1});
    CHECK(apply_move({2, 2}, Action::Right, 5) == Cell{2, 3});
    CHECK(apply_move({2, 2}, Action::NoOp, 5) == Cell{2, 2});
}

TEST_CASE("reset determinism and distinct cells") {
    const PredatorPrey env(GridConfig::pp4v2());
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const GridState a = env.reset(seed);
        CHECK(a == env.reset(seed));
        std::vector<Cell> all = a.predators;
        all.insert(all.end(), a.preys.begin(), a.preys.end());
        std::sort(all.begin(), all.end());
        CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
        for (const Cell& c : all) CHECK((c.row >= 0 && c.row < 7 && c.col >= 0 && c.col < 7));
    }
    CHECK(env.reset(std::uint64_t{1}) != env.reset(std::uint64_t{2}));
}

TEST_CASE("seeded rollouts are identical") {
    const PredatorPrey env(GridConfig::pp2v1());
    auto rollout = [&](std::uint64_t seed) {
        Rng rng(seed);
        GridState s = env.reset(rng);
        std::vector<GridState> states{s};
        std::vector<double> rewards;
        for (int t = 0; t < 100; ++t) {
            const std::vector<Action> acts{static_cast<Action>(rng.uniform_int(5)), static_cast<Action>(rng.uniform_int(5))};
            const StepResult r = env.step(s, acts, rng);
            states.push_back(s);
            rewards.push_back(r.reward);
            if (r.done) break;
        }
        return std::make_pair(states, rewards);
    };
    CHECK(rollout(9) == rollout(9));
}

TEST_CASE("observation length") {
    const PredatorPrey small(GridConfig::pp2v1());
    const PredatorPrey big(GridConfig::pp4v2());
    CHECK(small.observe(small.reset(std::uint64_t{0}), 0).size() == 2 + 2 + 2);
    CHECK(big.observe(big.reset(std::uint64_t{0}), 3).size() == 2 + 4 + 4);
}

TEST_CASE("observation contents") {
    const PredatorPrey env(GridConfig::pp2v1());
    const GridState s{{{1, 2}, {4, 4}}, {{1, 2}}, {true}, 0};
    const Eigen::VectorXd o0 = env.observe(s, 0);
    CHECK(o0(0) == 1.0 / 4.0);
    CHECK(o0(1) == 2.0 / 4.0);
    CHECK(o0(2) == 1.0);
    CHECK(o0(3) == 0.0);
    // prey in the predator's own cell: zero offset
    CHECK(o0(4) == 0.0);
    CHECK(o0(5) == 0.0);

    const Eigen::VectorXd o1 = env.observe(s, 1);
    CHECK(o1(3) == 1.0);
    // prey at Chebyshev distance 3 > 2: hidden
    CHECK(o1(4) == kHiddenPreySentinel);
    CHECK(o1(5) == kHiddenPreySentinel);

    const GridState edge{{{0, 0}, {4, 4}}, {{2, 0}}, {true}, 0};
    const Eigen::VectorXd oe = env.observe(edge, 0);
    CHECK(oe(4) == 2.0 / 4.0);
    CHECK(oe(5) == 0.0);
}

TEST_CASE("window membership") {
    GridConfig cfg = GridConfig::pp4v2();
    const PredatorPrey env(cfg);
    for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 7; ++c) {
            if (r == 3 && c == 3) continue;
            const GridState s{{{3, 3}, {0, 0}, {0, 6}, {6, 0}}, {{r, c}, {6, 6}}, {true, true}, 0};
            const bool inside = std::max(std::abs(r - 3), std::abs(c - 3)) <= 2;
            const Eigen::VectorXd o = env.observe(s, 0);
            CHECK((o(6) != kHiddenPreySentinel) == inside);
        }
    }
}

TEST_CASE("masking hides every prey") {
    GridConfig cfg = GridConfig::pp2v1();
    cfg.mask_opponent_obs = true;
    const PredatorPrey env(cfg);
    const GridState s{{{2, 2}, {2, 3}}, {{2, 1}}, {true}, 0};
    for (int i = 0; i < 2; ++i) {
        const Eigen::VectorXd o = env.observe(s, i);
        CHECK(o(4) == kHiddenPreySentinel);
        CHECK(o(5) == kHiddenPreySentinel);
    }
}

TEST_CASE("dead prey is hidden") {
    const PredatorPrey env(GridConfig::pp2v1());
    const GridState s{{{2, 2}, {0, 0}}, {{2, 1}}, {false}, 3};
    CHECK(env.observe(s, 0)(4) == kHiddenPreySentinel);
}

TEST_CASE("prey policy is uniform and stateless") {
    const PredatorPrey env(GridConfig::pp2v1());
    const GridState s = env.reset(std::uint64_t{3});
    const Eigen::VectorXd p = env.prey_policy(s, 0);
    for (int a = 0; a < 5; ++a) CHECK(p(a) == 0.2);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(p == env.prey_policy(s, 0));
    GridState dead = s;
    dead.prey_alive[0] = false;
    CHECK_THROWS_AS(env.prey_policy(dead, 0), ConfigError);
}

TEST_CASE("shared reward and wrong action count") {
    const PredatorPrey env(GridConfig::pp2v1());
    GridState s = env.reset(std::uint64_t{4});
    CHECK_THROWS_AS(env.step(s, {Action::NoOp}, {Action::NoOp}), ConfigError);
    CHECK_THROWS_AS(GridConfig({5, 2, 1, 4, 100, false}).validate(), ConfigError);
    CHECK_THROWS_AS(GridConfig({1, 2, 1, 5, 100, false}).validate(), ConfigError);
}

TEST_CASE("trajectory dump field order") {
    const PredatorPrey env(GridConfig::pp2v1());
    std::ostringstream out;
    TrajectoryDump dump(out);
    const GridState s{{{1, 2}, {4, 4}}, {{2, 2}}, {true}, 7};
    dump.record(3, s, {Action::Up, Action::NoOp}, {Action::Left}, -0.51, false);
    const auto j = nlohmann::ordered_json::parse(out.str());
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"episode", "step", "predators", "preys", "prey_alive", "predator_actions",
                                           "prey_actions", "reward", "done"});
    CHECK(j["step"] == 7);
    CHECK(j["predators"][0][1] == 2);
    CHECK(j["prey_actions"][0] == 2);
}

}  // TEST_SUITE
