#pragma once

// Small end-to-end fixture: synthetic log, sequential split and a briefly
// trained backbone. Cheap enough for unit tests.

#include "promptforge/backbone.hpp"
#include "promptforge/data.hpp"
#include "promptforge/evaluate.hpp"

namespace fixtures {

struct TinyPipeline {
    promptforge::InteractionLog log;
    promptforge::Vocab vocab;
    promptforge::SplitDataset split;
    promptforge::EvalContext ctx;
    promptforge::FrozenSeq2Seq model;
};

inline TinyPipeline tiny_pipeline(std::size_t users = 24, std::size_t epochs = 3, std::int64_t seed = 0) {
    using namespace promptforge;
    SynthOptions so;
    so.num_users = users;
    so.num_items = 30;
    so.min_len = 5;
    so.max_len = 8;
    so.seed = seed;
    auto log = synth_generate(so);
    auto vocab = build_vocab(log);
    auto split = leave_one_out_split(log, vocab, TaskKind::Sequential);
    ModelConfig mc;
    mc.vocab_size = vocab.size();
    mc.embed_dim = 16;
    mc.num_heads = 2;
    mc.feedforward_dim = 32;
    mc.num_encoder_layers = 1;
    mc.num_decoder_layers = 1;
    mc.seed = seed;
    TrainOptions to;
    to.epochs = epochs;
    to.learning_rate = 1e-2;
    BootstrapOptions bo;
    bo.variants = 1;
    auto trained = train_backbone(split.train, vocab, mc, to, bo);
    auto ctx = EvalContext::from_split(split, vocab.size());
    return TinyPipeline{std::move(log), std::move(vocab), std::move(split), std::move(ctx), std::move(trained.model)};
}

} // namespace fixtures
