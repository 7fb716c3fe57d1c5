#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace domac {

/// metrics.csv columns, in order:
///   wall_time, episode, update_step, variant, seed, eval_return_mean, eval_return_std,
///   critic_loss, actor_loss, policy_entropy, om_kld, om_entropy, om_accuracy
/// Losses and entropies are means over the team's agents. Reals use 9
/// significant digits; a metric that does not apply is an empty field.
struct MetricsRow {
    std::optional<double> wall_time;
    std::int64_t episode = 0;
    std::int64_t update_step = 0;
    std::string variant;
    std::uint64_t seed = 0;
    std::optional<double> eval_return_mean;
    std::optional<double> eval_return_std;
    std::optional<double> critic_loss;
    std::optional<double> actor_loss;
    std::optional<double> policy_entropy;
    std::optional<double> om_kld;
    std::optional<double> om_entropy;
    std::optional<double> om_accuracy;
};

inline constexpr const char* kMetricsHeader =
    "wall_time,episode,update_step,variant,seed,eval_return_mean,eval_return_std,"
    "critic_loss,actor_loss,policy_entropy,om_kld,om_entropy,om_accuracy";

std::string format_metric(const std::optional<double>& v);
std::string format_row(const MetricsRow& row);

class MetricsLog {
public:
    /// Starts a fresh file with the header.
    static MetricsLog create(const std::filesystem::path& path);
    /// Keeps the header and every row with update_step <= last_update, then appends.
    static MetricsLog resume(const std::filesystem::path& path, std::int64_t last_update);

    void write(const MetricsRow& row);

private:
    explicit MetricsLog(const std::filesystem::path& path, std::ios::openmode mode);
    std::ofstream out_;
};

}  // namespace domac
