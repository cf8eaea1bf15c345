#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "promptforge/prompt.hpp"
#include "promptforge/trainer.hpp"

namespace promptforge {

struct TaskInstance;

// Instruction words the backbone sees after the task arguments during
// pre-training, one pool per task. Matching and explanation prompts are
// phrased as questions and therefore contain "?"; sequential prompts do not.
const std::vector<std::string> &task_word_pool(TaskKind kind);

struct BootstrapOptions {
    std::size_t min_words = 3;
    std::size_t max_words = 7;
    // rendered copies of each instance, each with freshly sampled words
    std::size_t variants = 3;
    std::int64_t seed = 0;
};

// Renders instances as "args w1 .. wn" with words drawn from the task pool.
std::vector<TrainingExample> bootstrap_examples(const std::vector<TaskInstance> &instances, const Vocab &vocab,
                                                const BootstrapOptions &options);

// Fixed manual-style prompt: the first l words of the task pool.
TriggerAssignment manual_assignment(const PromptTemplate &tmpl, const Vocab &vocab);

// Trains the frozen backbone on bootstrap-rendered instances.
TrainResult train_backbone(const std::vector<TaskInstance> &instances, const Vocab &vocab, const ModelConfig &config,
                           const TrainOptions &train, const BootstrapOptions &bootstrap,
                           const EpochCallback &on_epoch = {});

} // namespace promptforge
