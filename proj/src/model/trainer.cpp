#include "promptforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "promptforge/errors.hpp"

namespace promptforge {

TrainResult train_seq2seq(const std::vector<TrainingExample> &examples, const ModelConfig &config,
                          const TrainOptions &options, const EpochCallback &on_epoch) {
    if (examples.empty()) {
        throw ArgumentError("training set is empty");
    }
    if (options.batch_size == 0) {
        throw ArgumentError("batch_size must be positive");
    }
    const ParameterLayout layout(config);
    std::vector<double> params = FrozenSeq2Seq::initial_parameters(config);
    std::vector<double> grads(params.size(), 0.0);

    const auto mean_loss = [&](const std::vector<double> &values) {
        std::vector<double> scratch(values.size(), 0.0);
        double total = 0.0;
        for (const auto &ex : examples) {
            // Gradients are discarded; the scratch buffer keeps the call uniform.
            total += accumulate_parameter_gradients(config, layout, values, ex.input, ex.target, scratch);
        }
        return total / static_cast<double>(examples.size());
    };

    std::vector<double> curve{mean_loss(params)};
    if (options.epochs == 0) {
        return {FrozenSeq2Seq(config, std::move(params)), std::move(curve)};
    }

    std::vector<double> m(params.size(), 0.0);
    std::vector<double> v(params.size(), 0.0);
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    std::size_t step = 0;

    std::mt19937_64 rng(static_cast<std::uint64_t>(options.seed));
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            std::fill(grads.begin(), grads.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                const auto &ex = examples[order[i]];
                batch_loss += accumulate_parameter_gradients(config, layout, params, ex.input, ex.target, grads);
            }
            if (!std::isfinite(batch_loss)) {
                throw TrainingError(epoch, "non-finite loss");
            }
            epoch_loss += batch_loss;
            const double inv = 1.0 / static_cast<double>(end - start);
            double norm_sq = 0.0;
            for (double &g : grads) {
                g *= inv;
                norm_sq += g * g;
            }
            const double norm = std::sqrt(norm_sq);
            if (!std::isfinite(norm)) {
                throw TrainingError(epoch, "non-finite gradient");
            }
            const double clip =
                options.max_grad_norm > 0.0 && norm > options.max_grad_norm ? options.max_grad_norm / norm : 1.0;
            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t j = 0; j < params.size(); ++j) {
                const double g = grads[j] * clip;
                m[j] = beta1 * m[j] + (1.0 - beta1) * g;
                v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
                params[j] -= options.learning_rate * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps);
            }
        }
        const double mean = epoch_loss / static_cast<double>(examples.size());
        if (!std::isfinite(mean)) {
            throw TrainingError(epoch, "non-finite loss");
        }
        curve.push_back(mean);
        if (on_epoch) {
            on_epoch(epoch, mean);
        }
    }
    return {FrozenSeq2Seq(config, std::move(params)), std::move(curve)};
}

} // namespace promptforge
