#include "promptforge/search.hpp"

#include <algorithm>
#include <map>

#include "promptforge/errors.hpp"

namespace promptforge {

std::string_view to_string(Criterion criterion) {
    switch (criterion) {
    case Criterion::TrainLoss:
        return "train_loss";
    case Criterion::SurrogateMetric:
        return "surrogate";
    case Criterion::FullMetric:
        return "full_metric";
    }
    return "unknown";
}

Criterion parse_criterion(std::string_view text) {
    for (auto c : {Criterion::TrainLoss, Criterion::SurrogateMetric, Criterion::FullMetric}) {
        if (text == to_string(c)) {
            return c;
        }
    }
    throw ArgumentError("unknown criterion '" + std::string(text) + "'");
}

void SearchConfig::validate() const {
    if (k == 0) {
        throw ValidationError("search k must be at least 1");
    }
    if (max_epochs == 0) {
        throw ValidationError("max_epochs must be at least 1");
    }
    if (surrogate_beam == 0 || surrogate_beam > test_beam) {
        throw ValidationError("surrogate_beam must lie in [1, test_beam]");
    }
    if (train_subsample && *train_subsample == 0) {
        throw ValidationError("train_subsample must be positive when set");
    }
}

namespace {

constexpr std::size_t kSurrogateCutoff = 5;
constexpr std::size_t kFullCutoff = 10;

// Candidate list for one slot: gradient candidates plus, optionally, the
// incumbent token; scored by the criterion and reduced to the argmax with
// ascending-id tie-breaking.
struct Selection {
    TokenId token;
    double score;
    std::optional<MetricsReport> report;
};

template <typename Apply>
Selection select_token(const CandidateSet &cands, TokenId incumbent, bool include_incumbent,
                       std::optional<double> incumbent_score, Apply &&score_of) {
    std::vector<TokenId> tokens;
    for (const auto &[tok, s] : cands.entries) {
        tokens.push_back(tok);
    }
    if (include_incumbent && std::find(tokens.begin(), tokens.end(), incumbent) == tokens.end()) {
        tokens.push_back(incumbent);
    }
    std::sort(tokens.begin(), tokens.end());
    std::optional<Selection> best;
    for (TokenId tok : tokens) {
        Selection sel{tok, 0.0, std::nullopt};
        if (tok == incumbent && incumbent_score) {
            sel.score = *incumbent_score;
        } else {
            MetricsReport report;
            sel.score = score_of(tok, &report);
            sel.report = std::move(report);
        }
        // ascending iteration: strict > keeps the smallest id among ties
        if (!best || sel.score > best->score) {
            best = std::move(sel);
        }
    }
    return *best;
}

} // namespace

double evaluate_criterion(Criterion criterion, const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                          const PromptTemplate &tmpl, const TriggerAssignment &assignment, const SearchConfig &config,
                          const EvalContext &ctx, MetricsReport *report) {
    if (dataset.empty()) {
        throw ArgumentError("criterion needs at least one instance");
    }
    switch (criterion) {
    case Criterion::TrainLoss: {
        double total = 0.0;
        for (const auto &inst : dataset) {
            total += model.forward_loss(render(tmpl, inst.args, assignment), decoder_target(inst));
        }
        const double score = -total / static_cast<double>(dataset.size());
        if (report) {
            report->values.clear();
            report->surrogate = score;
        }
        return score;
    }
    case Criterion::SurrogateMetric: {
        MetricsReport r = validation_report(model, dataset, tmpl, assignment, config, ctx);
        const double score = r.surrogate;
        if (report) {
            *report = std::move(r);
        }
        return score;
    }
    case Criterion::FullMetric: {
        EvalOptions options;
        options.beam = config.test_beam;
        options.max_k = kFullCutoff;
        options.alpha = config.alpha;
        MetricsReport r = evaluate_prompt(model, dataset, tmpl, assignment, options, ctx);
        double score = 0.0;
        if (tmpl.task_kind == TaskKind::Explanation) {
            score = r.at("BLEU-4") + config.alpha * (r.at("ROUGE-1") + r.at("ROUGE-2") + r.at("ROUGE-L"));
        } else {
            score = r.at("HR@5") + config.alpha * r.at("NDCG@5") + r.at("HR@10") + config.alpha * r.at("NDCG@10");
        }
        if (report) {
            *report = std::move(r);
        }
        return score;
    }
    }
    return 0.0;
}

MetricsReport validation_report(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                                const PromptTemplate &tmpl, const TriggerAssignment &assignment,
                                const SearchConfig &config, const EvalContext &ctx) {
    EvalOptions options;
    options.beam = config.surrogate_beam;
    options.max_k = kSurrogateCutoff;
    options.alpha = config.alpha;
    return evaluate_prompt(model, dataset, tmpl, assignment, options, ctx);
}

TaskUpdate update_task_token(const FrozenSeq2Seq &model, const SearchSplits &data, const PromptTemplate &tmpl,
                             const TriggerAssignment &assignment, const SearchConfig &config, const EvalContext &ctx,
                             std::mt19937_64 &rng, std::optional<double> incumbent_score) {
    tmpl.validate();
    std::uniform_int_distribution<std::size_t> pick(0, tmpl.num_task_slots - 1);
    const std::size_t slot = pick(rng);
    const auto subsample_seed = static_cast<std::int64_t>(rng() >> 1);

    const Vector grad =
        accumulate_task_gradient(model, data.train, tmpl, assignment, slot, config.train_subsample, subsample_seed);
    CandidateSet cands = candidate_tokens(grad, model.embedding_table(), config.k);
    cands.position = {SlotRef::Kind::Task, slot};

    const auto eval_set = config.criterion == Criterion::TrainLoss ? data.train : data.val;
    const TokenId incumbent = assignment.task_tokens[slot];
    TriggerAssignment trial = assignment;
    const auto sel = select_token(cands, incumbent, config.include_current_token, incumbent_score,
                                  [&](TokenId tok, MetricsReport *report) {
                                      trial.task_tokens[slot] = tok;
                                      return evaluate_criterion(config.criterion, model, eval_set, tmpl, trial,
                                                                config, ctx, report);
                                  });

    TaskUpdate update{assignment, {}};
    update.assignment.task_tokens[slot] = sel.token;
    update.log.kind = EpochKind::TaskTokenEpoch;
    update.log.position = cands.position;
    update.log.old_token = incumbent;
    update.log.chosen_token = sel.token;
    update.log.criterion_score = sel.score;
    update.log.candidates = cands.entries;
    if (config.criterion == Criterion::SurrogateMetric && sel.report) {
        update.log.val_metrics = *sel.report;
    }
    return update;
}

UserUpdate update_user_tokens(const FrozenSeq2Seq &model, const SearchSplits &data, const PromptTemplate &tmpl,
                              const TriggerAssignment &assignment, const SearchConfig &config,
                              const EvalContext &ctx) {
    if (!tmpl.has_user_slot) {
        throw ArgumentError("user-token epochs need a template with a user slot");
    }
    std::map<TokenId, std::vector<TaskInstance>> train_by_user, val_by_user;
    for (const auto &inst : data.train) {
        train_by_user[inst.user].push_back(inst);
    }
    for (const auto &inst : data.val) {
        val_by_user[inst.user].push_back(inst);
    }

    UserUpdate update{assignment, {}};
    // Each user's loss and metric depend only on that user's own token, so the
    // updates are independent; iterate in ascending user id.
    for (const auto &[user, train_u] : train_by_user) {
        auto val_it = val_by_user.find(user);
        if (val_it == val_by_user.end() || val_it->second.empty() || train_u.empty()) {
            continue;
        }
        const Vector grad = accumulate_user_gradient(model, train_u, tmpl, assignment);
        CandidateSet cands = candidate_tokens(grad, model.embedding_table(), config.k);
        cands.position = {SlotRef::Kind::User, static_cast<std::size_t>(user)};

        const std::vector<TaskInstance> &eval_set = config.criterion == Criterion::TrainLoss ? train_u : val_it->second;
        const TokenId incumbent = assignment.user_token(user);
        TriggerAssignment trial = assignment;
        const auto sel = select_token(cands, incumbent, config.include_current_token, std::nullopt,
                                      [&](TokenId tok, MetricsReport *report) {
                                          trial.user_tokens[user] = tok;
                                          return evaluate_criterion(config.criterion, model, eval_set, tmpl, trial,
                                                                    config, ctx, report);
                                      });
        update.assignment.user_tokens[user] = sel.token;

        EpochLog log;
        log.kind = EpochKind::UserTokenEpoch;
        log.position = cands.position;
        log.old_token = incumbent;
        log.chosen_token = sel.token;
        log.criterion_score = sel.score;
        log.candidates = cands.entries;
        update.logs.push_back(std::move(log));
    }
    return update;
}

SearchResult run_search(const FrozenSeq2Seq &model, const SearchSplits &data, const PromptTemplate &tmpl,
                        const TriggerAssignment &initial, const SearchConfig &config, const EvalContext &ctx) {
    config.validate();
    tmpl.validate();
    if (data.train.empty() || data.val.empty()) {
        throw ArgumentError("search needs non-empty train and validation sets");
    }
    if (initial.task_tokens.size() != tmpl.num_task_slots) {
        throw ArgumentError("initial assignment does not match the template");
    }

    std::mt19937_64 rng(static_cast<std::uint64_t>(config.seed));
    TriggerAssignment current = initial;
    MetricsReport current_val = validation_report(model, data.val, tmpl, current, config, ctx);

    SearchResult result;
    result.initial_val = current_val;
    result.best = {current, current_val.surrogate, 0};
    result.val_curve.push_back(current_val.surrogate);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const bool user_epoch = tmpl.has_user_slot && epoch % 2 == 0;
        if (!user_epoch) {
            // Under the surrogate criterion the incumbent's score on the
            // validation set is the current validation surrogate.
            std::optional<double> incumbent;
            if (config.criterion == Criterion::SurrogateMetric) {
                incumbent = current_val.surrogate;
            }
            TaskUpdate update = update_task_token(model, data, tmpl, current, config, ctx, rng, incumbent);
            if (update.assignment != current) {
                current = std::move(update.assignment);
                if (config.criterion == Criterion::SurrogateMetric && !update.log.val_metrics.values.empty()) {
                    current_val = update.log.val_metrics;
                } else {
                    current_val = validation_report(model, data.val, tmpl, current, config, ctx);
                }
            }
            update.log.epoch = epoch;
            update.log.val_metrics = current_val;
            result.log.push_back(std::move(update.log));
        } else {
            UserUpdate update = update_user_tokens(model, data, tmpl, current, config, ctx);
            if (update.assignment != current) {
                current = std::move(update.assignment);
                current_val = validation_report(model, data.val, tmpl, current, config, ctx);
            }
            for (auto &log : update.logs) {
                log.epoch = epoch;
                log.val_metrics = current_val;
                result.log.push_back(std::move(log));
            }
        }
        result.val_curve.push_back(current_val.surrogate);
        if (current_val.surrogate > result.best.val_score) {
            result.best = {current, current_val.surrogate, epoch};
        }
    }
    return result;
}

} // namespace promptforge
