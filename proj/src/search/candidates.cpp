#include <algorithm>
#include <numeric>

#include "promptforge/errors.hpp"
#include "promptforge/search.hpp"

namespace promptforge {

double approx_loss_change(const Vector &grad, const Vector &e_old, const Vector &e_new) {
    if (grad.size() != e_old.size() || grad.size() != e_new.size()) {
        throw ArgumentError("approx_loss_change: dimension mismatch");
    }
    return (e_new - e_old).dot(grad);
}

CandidateSet candidate_tokens(const Vector &grad, ConstMatrixMap embedding_table, std::size_t k,
                              const std::set<TokenId> &exclude) {
    if (k == 0) {
        throw ArgumentError("k must be at least 1");
    }
    if (grad.size() != embedding_table.cols()) {
        throw ArgumentError("gradient width does not match the embedding table");
    }
    const Vector scores = -(embedding_table * grad);
    std::vector<TokenId> eligible;
    for (TokenId t = 0; t < static_cast<TokenId>(embedding_table.rows()); ++t) {
        if (!Vocab::is_special(t) && !exclude.contains(t)) {
            eligible.push_back(t);
        }
    }
    if (eligible.empty()) {
        throw ArgumentError("no eligible candidate tokens");
    }
    if (k > eligible.size()) {
        throw ArgumentError("k exceeds the eligible vocabulary");
    }
    std::partial_sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(k), eligible.end(),
                      [&](TokenId a, TokenId b) {
                          if (scores(a) != scores(b)) {
                              return scores(a) > scores(b);
                          }
                          return a < b;
                      });
    CandidateSet set;
    set.entries.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        set.entries.emplace_back(eligible[i], scores(eligible[i]));
    }
    return set;
}

Vector accumulate_task_gradient(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                                const PromptTemplate &tmpl, const TriggerAssignment &assignment, std::size_t slot,
                                std::optional<std::size_t> subsample, std::int64_t seed) {
    if (dataset.empty()) {
        throw ArgumentError("gradient accumulation needs at least one instance");
    }
    if (slot >= tmpl.num_task_slots) {
        throw IndexError("task slot " + std::to_string(slot) + " out of range");
    }
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    if (subsample && *subsample < dataset.size()) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::shuffle(order.begin(), order.end(), rng);
        order.resize(*subsample);
        std::sort(order.begin(), order.end());
    }
    Vector total = Vector::Zero(static_cast<Eigen::Index>(model.config().embed_dim));
    for (std::size_t i : order) {
        const auto &inst = dataset[i];
        const TokenSequence seq = render(tmpl, inst.args, assignment);
        const std::size_t pos = seq.trigger_positions[slot];
        total += model.input_embedding_gradients(seq, decoder_target(inst), std::span(&pos, 1)).front();
    }
    return total;
}

Vector accumulate_user_gradient(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                                const PromptTemplate &tmpl, const TriggerAssignment &assignment) {
    if (!tmpl.has_user_slot) {
        throw ArgumentError("template has no user slot");
    }
    Vector total = Vector::Zero(static_cast<Eigen::Index>(model.config().embed_dim));
    for (const auto &inst : dataset) {
        const TokenSequence seq = render(tmpl, inst.args, assignment);
        const std::size_t pos = *seq.user_position;
        total += model.input_embedding_gradients(seq, decoder_target(inst), std::span(&pos, 1)).front();
    }
    return total;
}

} // namespace promptforge
