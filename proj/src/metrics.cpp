#include "domac/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "domac/oma.hpp"

namespace domac {

double kld(const Eigen::Ref<const VectorXd>& truth, const Eigen::Ref<const VectorXd>& predicted) {
    if (truth.size() != predicted.size()) throw ConfigError("kld: distributions differ in size");
    double d = 0.0;
    for (Eigen::Index a = 0; a < truth.size(); ++a) {
        if (truth(a) <= 0.0) continue;
        d += truth(a) * (std::log(truth(a)) - std::log(std::max(predicted(a), kProbabilityFloor)));
    }
    return std::max(d, 0.0);
}

int argmax(const Eigen::Ref<const VectorXd>& v) {
    Eigen::Index i = 0;
    v.maxCoeff(&i);
    return static_cast<int>(i);
}

double prediction_accuracy(std::span<const int> true_actions, const Eigen::Ref<const RowMatrix>& predicted) {
    if (true_actions.empty()) throw ConfigError("prediction_accuracy: no samples");
    if (static_cast<Eigen::Index>(true_actions.size()) != predicted.rows())
        throw ConfigError("prediction_accuracy: sample count mismatch");
    std::size_t hits = 0;
    for (std::size_t t = 0; t < true_actions.size(); ++t) {
        if (true_actions[t] < 0 || true_actions[t] >= predicted.cols())
            throw ConfigError("prediction_accuracy: action outside the model's output space");
        if (argmax(predicted.row(static_cast<Eigen::Index>(t)).transpose()) == true_actions[t]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(true_actions.size());
}

void EvalTrace::clear() {
    states.clear();
    observations.clear();
    prey_actions.clear();
}

std::vector<OpponentDiagnostics> collect_diagnostics(std::span<const std::vector<OpponentModel>> models,
                                                     const EvalTrace& trace, const PredatorPrey& env) {
    std::vector<OpponentDiagnostics> out;
    const std::size_t steps = trace.states.size();
    for (std::size_t i = 0; i < models.size(); ++i) {
        for (const OpponentModel& model : models[i]) {
            const int k = model.opponent_id();
            const bool comparable = model.output_dim() == kNumActions;

            std::vector<std::size_t> visited;
            for (std::size_t t = 0; t < steps; ++t)
                if (trace.states[t].prey_alive[k]) visited.push_back(t);

            OpponentDiagnostics d;
            d.samples = static_cast<std::int64_t>(visited.size());
            if (!visited.empty()) {
                RowMatrix obs(static_cast<Eigen::Index>(visited.size()), model.obs_dim());
                for (std::size_t r = 0; r < visited.size(); ++r)
                    obs.row(static_cast<Eigen::Index>(r)) = trace.observations[visited[r]][i].transpose();
                const RowMatrix predicted = model.predict_batch(obs);

                double kl = 0.0;
                double h = 0.0;
                std::vector<int> realised;
                for (std::size_t r = 0; r < visited.size(); ++r) {
                    const VectorXd p = predicted.row(static_cast<Eigen::Index>(r)).transpose();
                    h += entropy(p);
                    if (comparable) {
                        kl += kld(env.prey_policy(trace.states[visited[r]], k), p);
                        realised.push_back(static_cast<int>(trace.prey_actions[visited[r]][k]));
                    }
                }
                const double n = static_cast<double>(visited.size());
                d.entropy = h / n;
                if (comparable) {
                    d.kld = kl / n;
                    d.accuracy = prediction_accuracy(realised, predicted);
                }
            }
            out.push_back(d);
        }
    }
    return out;
}

OpponentDiagnostics average_diagnostics(std::span<const OpponentDiagnostics> entries) {
    OpponentDiagnostics avg;
    double kl = 0.0, acc = 0.0, h = 0.0;
    int n_kl = 0, n_acc = 0, n_h = 0;
    for (const auto& e : entries) {
        if (e.samples == 0) continue;
        avg.samples += e.samples;
        h += e.entropy;
        ++n_h;
        if (e.kld) kl += *e.kld, ++n_kl;
        if (e.accuracy) acc += *e.accuracy, ++n_acc;
    }
    if (n_h > 0) avg.entropy = h / n_h;
    if (n_kl > 0) avg.kld = kl / n_kl;
    if (n_acc > 0) avg.accuracy = acc / n_acc;
    return avg;
}

}  // namespace domac
