#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "promptforge/data.hpp"
#include "promptforge/metrics.hpp"
#include "promptforge/prompt.hpp"
#include "promptforge/seq2seq.hpp"

namespace promptforge {

// Task-independent facts the evaluator needs to parse decoder output.
struct EvalContext {
    std::vector<bool> item_mask; // indexed by token id
    std::size_t explanation_max_len = 12;

    static EvalContext from_split(const SplitDataset &split, std::size_t vocab_size);
    bool is_item(TokenId id) const {
        return id >= 0 && static_cast<std::size_t>(id) < item_mask.size() && item_mask[static_cast<std::size_t>(id)];
    }
};

struct EvalOptions {
    std::size_t beam = 20;
    // Largest cutoff for HR@k / NDCG@k; metrics with k > max_k are omitted.
    std::size_t max_k = 10;
    std::size_t repeats = 1;
    std::int64_t seed = 0;
    double alpha = 1.0;
};

// Decoder output per instance: ranked item ids (ranking tasks) or the top
// generated sentence (explanation).
struct DecodedOutputs {
    std::vector<RankedList> ranked;
    std::vector<TokenSentence> generated;
};

// A hypothesis names an item only if it is exactly one item token followed by
// end-of-sequence (or the length cap); matching outputs must also be one of
// the instance's candidates. Other hypotheses are dropped.
RankedList parse_ranked(std::span<const BeamHypothesis> beams, const TaskInstance &instance, const EvalContext &ctx);

DecodedOutputs decode_outputs(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                              const PromptTemplate &tmpl, const TriggerAssignment &assignment,
                              std::size_t beam, std::size_t num_outputs, const EvalContext &ctx);

MetricsReport compute_metrics(const DecodedOutputs &decoded, std::span<const TaskInstance> dataset, TaskKind kind,
                              std::size_t max_k, double alpha);

MetricsReport evaluate_prompt(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                              const PromptTemplate &tmpl, const TriggerAssignment &assignment,
                              const EvalOptions &options, const EvalContext &ctx);

} // namespace promptforge
