#include "promptforge/backbone.hpp"

#include <random>

#include "promptforge/data.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

const std::vector<std::string> &task_word_pool(TaskKind kind) {
    static const std::vector<std::string> sequential = {
        "next",   "recommend", "predict",  "buy",     "purchase", "later",   "future", "after",
        "then",   "following", "upcoming", "soon",    "sequence", "history", "continue", "will"};
    static const std::vector<std::string> matching = {
        "?",    "which", "choose", "select", "pick",   "among", "candidates", "from",
        "these", "list", "option", "prefer", "would", "like",  "interested", "one"};
    static const std::vector<std::string> explanation = {
        "?",       "why",   "explain", "explanation", "describe", "reason", "review",  "opinion",
        "think",   "feel",  "what",    "say",         "comment",  "write",  "generate", "words"};
    switch (kind) {
    case TaskKind::Sequential:
        return sequential;
    case TaskKind::Matching:
        return matching;
    case TaskKind::Explanation:
        return explanation;
    }
    return sequential;
}

std::vector<TrainingExample> bootstrap_examples(const std::vector<TaskInstance> &instances, const Vocab &vocab,
                                                const BootstrapOptions &options) {
    if (options.min_words == 0 || options.max_words < options.min_words) {
        throw ArgumentError("bootstrap word counts must satisfy 1 <= min_words <= max_words");
    }
    std::mt19937_64 rng(static_cast<std::uint64_t>(options.seed));
    std::uniform_int_distribution<std::size_t> length(options.min_words, options.max_words);
    std::vector<TrainingExample> examples;
    examples.reserve(instances.size() * options.variants);
    for (std::size_t v = 0; v < options.variants; ++v) {
        for (const auto &inst : instances) {
            const auto &pool = task_word_pool(inst.kind);
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            PromptTemplate tmpl;
            tmpl.task_kind = inst.kind;
            tmpl.num_task_slots = length(rng);
            TriggerAssignment words;
            for (std::size_t i = 0; i < tmpl.num_task_slots; ++i) {
                words.task_tokens.push_back(vocab.id(pool[pick(rng)]));
            }
            examples.push_back({render(tmpl, inst.args, words).ids, decoder_target(inst)});
        }
    }
    return examples;
}

TriggerAssignment manual_assignment(const PromptTemplate &tmpl, const Vocab &vocab) {
    const auto &pool = task_word_pool(tmpl.task_kind);
    TriggerAssignment a = default_assignment(tmpl, vocab, {});
    for (std::size_t i = 0; i < tmpl.num_task_slots; ++i) {
        a.task_tokens[i] = vocab.id(pool[i % pool.size()]);
    }
    return a;
}

TrainResult train_backbone(const std::vector<TaskInstance> &instances, const Vocab &vocab, const ModelConfig &config,
                           const TrainOptions &train, const BootstrapOptions &bootstrap,
                           const EpochCallback &on_epoch) {
    if (instances.empty()) {
        throw ArgumentError("backbone training set is empty");
    }
    if (config.vocab_size != vocab.size()) {
        throw ArgumentError("model vocab_size " + std::to_string(config.vocab_size) + " != vocabulary size " +
                            std::to_string(vocab.size()));
    }
    return train_seq2seq(bootstrap_examples(instances, vocab, bootstrap), config, train, on_epoch);
}

} // namespace promptforge
