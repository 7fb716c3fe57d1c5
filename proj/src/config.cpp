#include "domac/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace domac {

namespace {

std::string compact(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

struct Ctx {
    const std::string& origin;
    const YAML::Node& node;
    std::string key;

    [[noreturn]] void fail(const std::string& what) const {
        const auto m = node.Mark();
        const std::string pos = m.line < 0 ? origin : origin + ":" + std::to_string(m.line + 1);
        throw ConfigError(pos + ": '" + key + "' " + what);
    }

    template <typename T>
    T get() const {
        if (!node.IsScalar()) fail("must be a scalar");
        try {
            return node.as<T>();
        } catch (const YAML::Exception&) {
            fail("has an invalid value '" + node.Scalar() + "'");
        }
    }

    int positive_int() const {
        const auto v = get<long long>();
        if (v < 1 || v > 1'000'000'000) fail("must be a positive integer");
        return static_cast<int>(v);
    }

    int non_negative_int() const {
        const auto v = get<long long>();
        if (v < 0 || v > 1'000'000'000) fail("must be a non-negative integer");
        return static_cast<int>(v);
    }

    double in_range(double lo, double hi, bool hi_open) const {
        const double v = get<double>();
        if (!(v >= lo && (hi_open ? v < hi : v <= hi)))
            fail("must lie in [" + compact(lo) + ", " + compact(hi) + (hi_open ? ")" : "]"));
        return v;
    }

    double positive_double() const {
        const double v = get<double>();
        if (!(v > 0.0) || !std::isfinite(v)) fail("must be a positive number");
        return v;
    }

    template <typename Enum>
    Enum choice(Enum (*parse)(std::string_view)) const {
        try {
            return parse(get<std::string>());
        } catch (const ConfigError& e) {
            fail(std::string("is invalid: ") + e.what());
        }
    }
};

using Handler = std::function<void(TrainConfig&, const Ctx&)>;
using Section = std::map<std::string, Handler>;

const std::map<std::string, Section>& schema() {
    static const std::map<std::string, Section> s = {
        {"env",
         {
             {"grid_size", [](TrainConfig& c, const Ctx& x) { c.env.grid_size = x.positive_int(); }},
             {"n_predators", [](TrainConfig& c, const Ctx& x) { c.env.n_predators = x.positive_int(); }},
             {"n_preys", [](TrainConfig& c, const Ctx& x) { c.env.n_preys = x.positive_int(); }},
             {"view_size",
              [](TrainConfig& c, const Ctx& x) {
                  c.env.view_size = x.positive_int();
                  if (c.env.view_size % 2 == 0) x.fail("must be odd");
              }},
             {"max_steps", [](TrainConfig& c, const Ctx& x) { c.env.max_steps = x.positive_int(); }},
             {"mask_opponent_obs", [](TrainConfig& c, const Ctx& x) { c.env.mask_opponent_obs = x.get<bool>(); }},
         }},
        {"rollout",
         {
             {"episodes_per_update", [](TrainConfig& c, const Ctx& x) { c.episodes_per_update = x.positive_int(); }},
             {"forward_steps", [](TrainConfig& c, const Ctx& x) { c.forward_steps = x.non_negative_int(); }},
             {"n_envs", [](TrainConfig& c, const Ctx& x) { c.n_envs = x.positive_int(); }},
         }},
        {"algorithm",
         {
             {"gamma", [](TrainConfig& c, const Ctx& x) { c.gamma = x.in_range(0.0, 1.0, true); }},
             {"alpha", [](TrainConfig& c, const Ctx& x) { c.alpha = x.in_range(0.0, 1e6, false); }},
             {"kappa", [](TrainConfig& c, const Ctx& x) { c.kappa = x.positive_double(); }},
             {"n_quantiles", [](TrainConfig& c, const Ctx& x) { c.n_quantiles = x.positive_int(); }},
             {"quantile_levels",
              [](TrainConfig& c, const Ctx& x) { c.quantile_levels = x.choice(parse_quantile_levels); }},
             {"opponent_samples", [](TrainConfig& c, const Ctx& x) { c.opponent_samples = x.non_negative_int(); }},
             {"enumeration_cap", [](TrainConfig& c, const Ctx& x) { c.enumeration_cap = x.positive_int(); }},
             {"critic_steps", [](TrainConfig& c, const Ctx& x) { c.critic_steps = x.positive_int(); }},
         }},
        {"optimizer",
         {
             {"lr_actor", [](TrainConfig& c, const Ctx& x) { c.lr_actor = x.positive_double(); }},
             {"lr_opponent", [](TrainConfig& c, const Ctx& x) { c.lr_opponent = x.positive_double(); }},
             {"lr_critic", [](TrainConfig& c, const Ctx& x) { c.lr_critic = x.positive_double(); }},
         }},
        {"network",
         {
             {"hidden",
              [](TrainConfig& c, const Ctx& x) {
                  if (!x.node.IsSequence() || x.node.size() == 0) x.fail("must be a non-empty list of sizes");
                  c.hidden.clear();
                  for (const auto& item : x.node) c.hidden.push_back(Ctx{x.origin, item, x.key}.positive_int());
              }},
             {"activation", [](TrainConfig& c, const Ctx& x) { c.activation = x.choice(parse_activation); }},
         }},
        {"opponent_model",
         {
             {"dim",
              [](TrainConfig& c, const Ctx& x) {
                  c.om_dim = x.positive_int();
                  if (c.om_dim < 2) x.fail("must be >= 2");
              }},
             {"frozen", [](TrainConfig& c, const Ctx& x) { c.om_mode = x.choice(parse_opponent_model_mode); }},
             {"checkpoint", [](TrainConfig& c, const Ctx& x) { c.om_checkpoint = x.get<std::string>(); }},
         }},
        {"evaluation",
         {
             {"every", [](TrainConfig& c, const Ctx& x) { c.eval_every = x.positive_int(); }},
             {"episodes", [](TrainConfig& c, const Ctx& x) { c.eval_episodes = x.positive_int(); }},
         }},
        {"logging",
         {
             {"checkpoint_every", [](TrainConfig& c, const Ctx& x) { c.checkpoint_every = x.non_negative_int(); }},
             {"record_wall_time", [](TrainConfig& c, const Ctx& x) { c.record_wall_time = x.get<bool>(); }},
         }},
    };
    return s;
}

const Section& top_level() {
    static const Section s = {
        {"variant", [](TrainConfig& c, const Ctx& x) { c.variant = x.choice(parse_variant); }},
        {"seed",
         [](TrainConfig& c, const Ctx& x) {
             const auto v = x.get<long long>();
             if (v < 0) x.fail("must be non-negative");
             c.seed = static_cast<std::uint64_t>(v);
         }},
        {"episodes",
         [](TrainConfig& c, const Ctx& x) {
             const auto v = x.get<long long>();
             if (v < 1) x.fail("must be a positive integer");
             c.episodes = v;
         }},
    };
    return s;
}

std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

}  // namespace

TrainConfig parse_config_text(const std::string& text, const std::string& origin) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(origin + ":" + std::to_string(e.mark.line + 1) + ": malformed YAML: " + e.msg);
    }
    TrainConfig config;
    if (root.IsNull()) {
        config.validate();
        return config;
    }
    if (!root.IsMap()) throw ConfigError(origin + ": top level must be a mapping");

    if (const auto preset = root["preset"]) {
        const Ctx x{origin, preset, "preset"};
        try {
            config.apply_preset(x.get<std::string>());
        } catch (const ConfigError& e) {
            x.fail(std::string("is invalid: ") + e.what());
        }
    }

    for (const auto& kv : root) {
        const std::string key = kv.first.as<std::string>();
        if (key == "preset") continue;
        if (const auto it = top_level().find(key); it != top_level().end()) {
            it->second(config, Ctx{origin, kv.second, key});
            continue;
        }
        const auto sec = schema().find(key);
        if (sec == schema().end()) Ctx{origin, kv.first, key}.fail("is not a known key");
        if (kv.second.IsNull()) continue;
        if (!kv.second.IsMap()) Ctx{origin, kv.second, key}.fail("must be a mapping");
        for (const auto& item : kv.second) {
            const std::string sub = item.first.as<std::string>();
            const auto h = sec->second.find(sub);
            if (h == sec->second.end()) Ctx{origin, item.first, key + "." + sub}.fail("is not a known key");
            h->second(config, Ctx{origin, item.second, key + "." + sub});
        }
    }
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    return config;
}

TrainConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

std::string serialize_config(const TrainConfig& c) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "variant" << YAML::Value << std::string(to_string(c.variant));
    out << YAML::Key << "preset" << YAML::Value << c.preset;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::Key << "episodes" << YAML::Value << c.episodes;

    auto section = [&](const char* name) { out << YAML::Key << name << YAML::Value << YAML::BeginMap; };
    auto end = [&] { out << YAML::EndMap; };
    auto num = [&](const char* key, double v) { out << YAML::Key << key << YAML::Value << fmt_double(v); };

    section("env");
    out << YAML::Key << "grid_size" << YAML::Value << c.env.grid_size;
    out << YAML::Key << "n_predators" << YAML::Value << c.env.n_predators;
    out << YAML::Key << "n_preys" << YAML::Value << c.env.n_preys;
    out << YAML::Key << "view_size" << YAML::Value << c.env.view_size;
    out << YAML::Key << "max_steps" << YAML::Value << c.env.max_steps;
    out << YAML::Key << "mask_opponent_obs" << YAML::Value << c.env.mask_opponent_obs;
    end();

    section("rollout");
    out << YAML::Key << "episodes_per_update" << YAML::Value << c.episodes_per_update;
    out << YAML::Key << "forward_steps" << YAML::Value << c.forward_steps;
    out << YAML::Key << "n_envs" << YAML::Value << c.n_envs;
    end();

    section("algorithm");
    num("gamma", c.gamma);
    num("alpha", c.alpha);
    num("kappa", c.kappa);
    out << YAML::Key << "n_quantiles" << YAML::Value << c.n_quantiles;
    out << YAML::Key << "quantile_levels" << YAML::Value << std::string(to_string(c.quantile_levels));
    out << YAML::Key << "opponent_samples" << YAML::Value << c.opponent_samples;
    out << YAML::Key << "enumeration_cap" << YAML::Value << c.enumeration_cap;
    out << YAML::Key << "critic_steps" << YAML::Value << c.critic_steps;
    end();

    section("optimizer");
    num("lr_actor", c.lr_actor);
    num("lr_opponent", c.lr_opponent);
    num("lr_critic", c.lr_critic);
    end();

    section("network");
    out << YAML::Key << "hidden" << YAML::Value << YAML::Flow << c.hidden;
    out << YAML::Key << "activation" << YAML::Value << std::string(to_string(c.activation));
    end();

    section("opponent_model");
    out << YAML::Key << "dim" << YAML::Value << c.om_dim;
    out << YAML::Key << "frozen" << YAML::Value << std::string(to_string(c.om_mode));
    out << YAML::Key << "checkpoint" << YAML::Value << YAML::DoubleQuoted << c.om_checkpoint;
    end();

    section("evaluation");
    out << YAML::Key << "every" << YAML::Value << c.eval_every;
    out << YAML::Key << "episodes" << YAML::Value << c.eval_episodes;
    end();

    section("logging");
    out << YAML::Key << "checkpoint_every" << YAML::Value << c.checkpoint_every;
    out << YAML::Key << "record_wall_time" << YAML::Value << c.record_wall_time;
    end();

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace domac
