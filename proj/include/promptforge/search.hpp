#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "promptforge/data.hpp"
#include "promptforge/evaluate.hpp"
#include "promptforge/metrics.hpp"
#include "promptforge/prompt.hpp"
#include "promptforge/seq2seq.hpp"

namespace promptforge {

enum class Criterion { TrainLoss, SurrogateMetric, FullMetric };

std::string_view to_string(Criterion criterion);
Criterion parse_criterion(std::string_view text);

struct SearchConfig {
    std::size_t k = 5;
    std::size_t max_epochs = 50;
    Criterion criterion = Criterion::SurrogateMetric;
    std::size_t surrogate_beam = 5;
    std::size_t test_beam = 20;
    double alpha = 1.0;
    bool include_current_token = true;
    std::optional<std::size_t> train_subsample;
    std::int64_t seed = 0;

    void validate() const;
};

// Slot a candidate set refers to: a task slot index or the user slot.
struct SlotRef {
    enum class Kind { Task, User };
    Kind kind = Kind::Task;
    std::size_t index = 0; // task slot index, or the user id token for Kind::User
    bool operator==(const SlotRef &) const = default;
};

struct CandidateSet {
    SlotRef position;
    // (token, -e_token . grad), best first; ties by ascending token id
    std::vector<std::pair<TokenId, double>> entries;
};

// First-order loss change of swapping e_old for e_new: (e_new - e_old) . grad
double approx_loss_change(const Vector &grad, const Vector &e_old, const Vector &e_new);

// Top-k tokens by -e_t . grad over the vocabulary minus `exclude`; special
// tokens are always excluded.
CandidateSet candidate_tokens(const Vector &grad, ConstMatrixMap embedding_table, std::size_t k,
                              const std::set<TokenId> &exclude = {});

// Sum over instances of the input-embedding gradient at task slot `slot`.
// With `subsample`, a seeded sample of that many instances is used instead.
Vector accumulate_task_gradient(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                                const PromptTemplate &tmpl, const TriggerAssignment &assignment, std::size_t slot,
                                std::optional<std::size_t> subsample = std::nullopt, std::int64_t seed = 0);

// Same, at the user slot.
Vector accumulate_user_gradient(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                                const PromptTemplate &tmpl, const TriggerAssignment &assignment);

// Higher is better: -mean loss, surrogate M~ at surrogate_beam, or the full
// metric suite at test_beam.
double evaluate_criterion(Criterion criterion, const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                          const PromptTemplate &tmpl, const TriggerAssignment &assignment, const SearchConfig &config,
                          const EvalContext &ctx, MetricsReport *report = nullptr);

// Validation surrogate M~ (HR@5 + alpha NDCG@5 or BLEU-4 + alpha ROUGE-L).
MetricsReport validation_report(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                                const PromptTemplate &tmpl, const TriggerAssignment &assignment,
                                const SearchConfig &config, const EvalContext &ctx);

enum class EpochKind { TaskTokenEpoch, UserTokenEpoch };

struct EpochLog {
    std::size_t epoch = 0;
    EpochKind kind = EpochKind::TaskTokenEpoch;
    SlotRef position;
    TokenId old_token = kDefaultTriggerId;
    TokenId chosen_token = kDefaultTriggerId;
    double criterion_score = 0.0;
    std::vector<std::pair<TokenId, double>> candidates;
    MetricsReport val_metrics;
};

struct BestPromptCheckpoint {
    TriggerAssignment assignment;
    double val_score = 0.0;
    std::size_t epoch = 0;
};

struct SearchSplits {
    std::span<const TaskInstance> train;
    std::span<const TaskInstance> val;
};

struct TaskUpdate {
    TriggerAssignment assignment;
    EpochLog log;
};

// One task-token round: random slot, gradient candidates, criterion argmax.
// `incumbent_score` may carry the already known criterion value of the
// current assignment to avoid re-evaluating it.
TaskUpdate update_task_token(const FrozenSeq2Seq &model, const SearchSplits &data, const PromptTemplate &tmpl,
                             const TriggerAssignment &assignment, const SearchConfig &config, const EvalContext &ctx,
                             std::mt19937_64 &rng, std::optional<double> incumbent_score = std::nullopt);

struct UserUpdate {
    TriggerAssignment assignment;
    std::vector<EpochLog> logs; // one per updated user, ascending user id
};

UserUpdate update_user_tokens(const FrozenSeq2Seq &model, const SearchSplits &data, const PromptTemplate &tmpl,
                              const TriggerAssignment &assignment, const SearchConfig &config,
                              const EvalContext &ctx);

struct SearchResult {
    BestPromptCheckpoint best;
    std::vector<EpochLog> log;
    MetricsReport initial_val;
    // validation surrogate after each epoch (index 0 = initial assignment)
    std::vector<double> val_curve;
};

SearchResult run_search(const FrozenSeq2Seq &model, const SearchSplits &data, const PromptTemplate &tmpl,
                        const TriggerAssignment &initial, const SearchConfig &config, const EvalContext &ctx);

// Line-delimited JSON records: one "init" record, then one per EpochLog.
std::string format_search_report(const SearchResult &result, const Vocab &vocab);

} // namespace promptforge
