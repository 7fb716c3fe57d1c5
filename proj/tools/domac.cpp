// domac: train, evaluate and inspect predator-prey agents.
//
//   domac train   [--config f] [--preset pp2v1|pp4v2] [--variant V] [--seed n] [--episodes n]
//                 [--out-dir d] [--mask-obs] [--om-dim d] [--om-frozen none|random|trained]
//                 [--om-checkpoint f] [--quantiles k] [--resume ckpt]
//   domac eval    --checkpoint f [--episodes n] [--seed n] [--dump-trajectory f]
//   domac inspect --checkpoint f
//   domac selftest
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "domac/checks.hpp"
#include "domac/checkpoint.hpp"
#include "domac/config.hpp"
#include "domac/metrics_log.hpp"
#include "domac/trainer.hpp"

namespace {

using namespace domac;

struct TrainArgs {
    std::string config;
    std::optional<std::string> preset;
    std::optional<std::string> variant;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> episodes;
    std::string out_dir;
    bool mask_obs = false;
    std::optional<int> om_dim;
    std::optional<std::string> om_frozen;
    std::optional<std::string> om_checkpoint;
    std::optional<int> quantiles;
    std::string resume;
    bool quiet = false;
};

TrainConfig build_config(const TrainArgs& a) {
    TrainConfig c = a.config.empty() ? TrainConfig{} : parse_config(a.config);
    if (a.preset) {
        const bool mask = c.env.mask_opponent_obs;
        c.apply_preset(*a.preset);
        c.env.mask_opponent_obs = mask;
    }
    if (a.variant) c.variant = parse_variant(*a.variant);
    if (a.seed) c.seed = *a.seed;
    if (a.episodes) c.episodes = *a.episodes;
    if (a.mask_obs) c.env.mask_opponent_obs = true;
    if (a.om_dim) c.om_dim = *a.om_dim;
    if (a.om_frozen) c.om_mode = parse_opponent_model_mode(*a.om_frozen);
    if (a.om_checkpoint) c.om_checkpoint = *a.om_checkpoint;
    if (a.quantiles) c.n_quantiles = *a.quantiles;
    c.validate();
    return c;
}

int run_train(const TrainArgs& a) {
    std::ostream* log = a.quiet ? nullptr : &std::cout;
    if (!a.resume.empty()) {
        Trainer t = Trainer::from_checkpoint(a.resume);
        if (a.episodes) t.set_episode_budget(*a.episodes);
        const std::string out = a.out_dir.empty() ? std::filesystem::path(a.resume).parent_path().parent_path().string()
                                                  : a.out_dir;
        t.run(out, log);
        std::cout << "run directory: " << out << '\n';
        return 0;
    }
    const TrainConfig c = build_config(a);
    const std::string out = a.out_dir.empty()
                                ? "runs/" + std::string(to_string(c.variant)) + "_seed" + std::to_string(c.seed)
                                : a.out_dir;
    Trainer t(c);
    t.run(out, log);
    std::cout << "run directory: " << out << '\n';
    return 0;
}

int run_eval(const std::string& checkpoint, int episodes, std::uint64_t seed, const std::string& dump_path) {
    const Trainer t = Trainer::from_checkpoint(checkpoint);
    std::ofstream dump_file;
    std::optional<TrajectoryDump> dump;
    if (!dump_path.empty()) {
        dump_file.open(dump_path);
        if (!dump_file) throw std::runtime_error("cannot open " + dump_path);
        dump.emplace(dump_file);
    }
    const EvalRecord rec = evaluate(t.agents(), t.config(), episodes, seed, dump ? &*dump : nullptr);
    std::cout << "return " << format_metric(rec.mean_return) << " +- " << format_metric(rec.std_return) << " over "
              << episodes << " episodes\n";
    std::cout << "policy entropy " << format_metric(rec.policy_entropy) << '\n';
    if (t.config().flags().opponent_models) {
        std::cout << "om kld " << format_metric(rec.average.kld) << ", om entropy "
                  << format_metric(rec.average.entropy) << ", om accuracy " << format_metric(rec.average.accuracy)
                  << '\n';
    }
    return 0;
}

int run_inspect(const std::string& checkpoint) {
    const Trainer t = Trainer::from_checkpoint(checkpoint);
    std::cout << "format " << kCheckpointMagic << '\n'
              << "variant " << to_string(t.config().variant) << '\n'
              << "episode " << t.episode() << '\n'
              << "update_step " << t.update_step() << '\n'
              << "evaluations " << t.eval_index() << '\n';
    for (std::size_t i = 0; i < t.agents().size(); ++i) {
        const Agent& a = t.agents()[i];
        auto show = [](const std::vector<ParamBlock>& blocks) {
            for (const auto& b : blocks) {
                std::cout << "  " << b.name << " [";
                for (std::size_t d = 0; d < b.shape.size(); ++d) std::cout << (d ? "x" : "") << b.shape[d];
                std::cout << "]\n";
            }
        };
        std::cout << "agent " << i << " policy hash " << std::hex << a.policy_hash() << " critic hash "
                  << a.critic_hash();
        if (!a.models.empty()) std::cout << " opponent-model hash " << a.opponent_model_hash();
        std::cout << std::dec << '\n';
        show(a.policy.net().params());
        for (const auto& m : a.models) show(m.net().params());
        show(a.critic.net().params());
    }
    std::cout << "config:\n" << serialize_config(t.config());
    return 0;
}

int run_selftest() {
    const auto results = run_selftest_checks();
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
        ok = ok && r.passed;
    }
    std::cout << (ok ? "selftest passed\n" : "selftest FAILED\n");
    return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Opponent-model-aided distributional actor-critic on predator-prey"};
    app.require_subcommand(1);

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "train a team of predators");
    train->add_option("--config", ta.config, "YAML run configuration")->check(CLI::ExistingFile);
    train->add_option("--preset", ta.preset, "grid preset")->check(CLI::IsMember({"pp2v1", "pp4v2"}));
    train->add_option("--variant", ta.variant, "DOMAC, MAAC, OMAC, DMAC or UB");
    train->add_option("--seed", ta.seed, "master seed");
    train->add_option("--episodes", ta.episodes, "episode budget")->check(CLI::PositiveNumber);
    train->add_option("--out-dir", ta.out_dir, "run directory");
    train->add_flag("--mask-obs", ta.mask_obs, "hide prey positions from every observation");
    train->add_option("--om-dim", ta.om_dim, "opponent-model output size")->check(CLI::Range(2, 1000));
    train->add_option("--om-frozen", ta.om_frozen, "keep opponent models fixed")
        ->check(CLI::IsMember({"none", "random", "trained"}));
    train->add_option("--om-checkpoint", ta.om_checkpoint, "checkpoint supplying trained opponent models");
    train->add_option("--quantiles", ta.quantiles, "critic quantile count")->check(CLI::PositiveNumber);
    train->add_option("--resume", ta.resume, "continue from a checkpoint")->check(CLI::ExistingFile);
    train->add_flag("--quiet", ta.quiet, "no progress lines");

    std::string checkpoint;
    int eval_episodes = 100;
    std::uint64_t eval_seed = 0;
    std::string dump;
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
    ev->add_option("--episodes", eval_episodes, "evaluation episodes")->check(CLI::PositiveNumber);
    ev->add_option("--seed", eval_seed, "evaluation seed");
    ev->add_option("--dump-trajectory", dump, "write every step as JSON lines");

    auto* inspect = app.add_subcommand("inspect", "print checkpoint metadata");
    inspect->add_option("--checkpoint,checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);

    auto* selftest = app.add_subcommand("selftest", "run gradient and oracle checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*train) return run_train(ta);
        if (*ev) return run_eval(checkpoint, eval_episodes, eval_seed, dump);
        if (*inspect) return run_inspect(checkpoint);
        if (*selftest) return run_selftest();
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 2;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
