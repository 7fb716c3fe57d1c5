#include "domac/metrics_log.hpp"

#include <cstdio>
#include <sstream>
#include <vector>

#include "domac/errors.hpp"

namespace domac {

std::string format_metric(const std::optional<double>& v) {
    if (!v) return {};
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", *v);
    return buf;
}

std::string format_row(const MetricsRow& r) {
    std::ostringstream s;
    s << format_metric(r.wall_time) << ',' << r.episode << ',' << r.update_step << ',' << r.variant << ',' << r.seed
      << ',' << format_metric(r.eval_return_mean) << ',' << format_metric(r.eval_return_std) << ','
      << format_metric(r.critic_loss) << ',' << format_metric(r.actor_loss) << ','
      << format_metric(r.policy_entropy) << ',' << format_metric(r.om_kld) << ',' << format_metric(r.om_entropy)
      << ',' << format_metric(r.om_accuracy);
    return s.str();
}

MetricsLog::MetricsLog(const std::filesystem::path& path, std::ios::openmode mode) : out_(path, mode) {
    if (!out_) throw std::runtime_error("cannot open metrics file " + path.string());
}

MetricsLog MetricsLog::create(const std::filesystem::path& path) {
    MetricsLog log(path, std::ios::out | std::ios::trunc);
    log.out_ << kMetricsHeader << '\n';
    log.out_.flush();
    return log;
}

MetricsLog MetricsLog::resume(const std::filesystem::path& path, std::int64_t last_update) {
    std::vector<std::string> keep;
    {
        std::ifstream in(path);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (first) {
                first = false;
                continue;
            }
            // update_step is the third field
            const auto a = line.find(',');
            const auto b = a == std::string::npos ? a : line.find(',', a + 1);
            const auto c = b == std::string::npos ? b : line.find(',', b + 1);
            if (c == std::string::npos) continue;
            if (std::stoll(line.substr(b + 1, c - b - 1)) <= last_update) keep.push_back(line);
        }
    }
    MetricsLog log(path, std::ios::out | std::ios::trunc);
    log.out_ << kMetricsHeader << '\n';
    for (const auto& l : keep) log.out_ << l << '\n';
    log.out_.flush();
    return log;
}

void MetricsLog::write(const MetricsRow& row) {
    out_ << format_row(row) << '\n';
    out_.flush();
    if (!out_) throw std::runtime_error("write to metrics file failed");
}

}  // namespace domac
