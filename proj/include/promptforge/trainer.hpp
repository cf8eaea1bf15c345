#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "promptforge/seq2seq.hpp"

namespace promptforge {

struct TrainingExample {
    std::vector<TokenId> input;
    std::vector<TokenId> target;
};

struct TrainOptions {
    std::size_t epochs = 20;
    double learning_rate = 3e-3;
    std::size_t batch_size = 16;
    double max_grad_norm = 5.0;
    std::int64_t seed = 0;
};

struct TrainResult {
    FrozenSeq2Seq model;
    // [0] is the mean per-example loss of the initialization; [e] the mean
    // loss observed during epoch e.
    std::vector<double> loss_curve;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

// Adam on the summed next-token NLL. Parameters start from
// FrozenSeq2Seq::initial_parameters(config); shuffling uses options.seed.
// Single-threaded; identical inputs give bitwise-identical parameters.
TrainResult train_seq2seq(const std::vector<TrainingExample> &examples, const ModelConfig &config,
                          const TrainOptions &options, const EpochCallback &on_epoch = {});

} // namespace promptforge
