#pragma once

#include <random>
#include <vector>

#include "promptforge/seq2seq.hpp"

namespace fixtures {

inline promptforge::ModelConfig toy_config(std::size_t vocab, std::size_t dim = 16, std::size_t heads = 4,
                                           std::int64_t seed = 1) {
    promptforge::ModelConfig c;
    c.vocab_size = vocab;
    c.embed_dim = dim;
    c.num_encoder_layers = 2;
    c.num_decoder_layers = 2;
    c.num_heads = heads;
    c.feedforward_dim = 2 * dim;
    c.max_seq_len = 32;
    c.seed = seed;
    return c;
}

// Seeded initialization with every parameter jittered, so norms and biases
// are not at their trivial starting values.
inline promptforge::FrozenSeq2Seq jittered_model(const promptforge::ModelConfig &config, double scale = 0.1) {
    auto params = promptforge::FrozenSeq2Seq::initial_parameters(config);
    std::mt19937_64 rng(static_cast<std::uint64_t>(config.seed) * 7919 + 17);
    std::normal_distribution<double> noise(0.0, scale);
    for (double &p : params) {
        p += noise(rng);
    }
    return promptforge::FrozenSeq2Seq(config, std::move(params));
}

inline std::vector<promptforge::TokenId> random_ids(std::mt19937_64 &rng, std::size_t n, std::size_t vocab,
                                                    promptforge::TokenId lo = 0) {
    std::uniform_int_distribution<promptforge::TokenId> pick(lo, static_cast<promptforge::TokenId>(vocab) - 1);
    std::vector<promptforge::TokenId> ids(n);
    for (auto &id : ids) {
        id = pick(rng);
    }
    return ids;
}

} // namespace fixtures
