#include "promptforge/evaluate.hpp"

#include <algorithm>

#include "promptforge/errors.hpp"

namespace promptforge {

EvalContext EvalContext::from_split(const SplitDataset &split, std::size_t vocab_size) {
    EvalContext ctx;
    ctx.item_mask.assign(vocab_size, false);
    for (TokenId item : split.items) {
        if (item >= 0 && static_cast<std::size_t>(item) < vocab_size) {
            ctx.item_mask[static_cast<std::size_t>(item)] = true;
        }
    }
    return ctx;
}

RankedList parse_ranked(std::span<const BeamHypothesis> beams, const TaskInstance &instance, const EvalContext &ctx) {
    RankedList ranked;
    for (const auto &hyp : beams) {
        std::size_t len = hyp.ids.size();
        if (len > 0 && hyp.ids.back() == kEosId) {
            --len;
        }
        if (len != 1) {
            continue;
        }
        const TokenId item = hyp.ids.front();
        if (!ctx.is_item(item)) {
            continue;
        }
        if (instance.kind == TaskKind::Matching &&
            std::find(instance.args.items.begin(), instance.args.items.end(), item) == instance.args.items.end()) {
            continue;
        }
        if (std::find(ranked.begin(), ranked.end(), item) == ranked.end()) {
            ranked.push_back(item);
        }
    }
    return ranked;
}

DecodedOutputs decode_outputs(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                              const PromptTemplate &tmpl, const TriggerAssignment &assignment,
                              std::size_t beam, std::size_t num_outputs, const EvalContext &ctx) {
    DecodedOutputs out;
    const bool text = tmpl.task_kind == TaskKind::Explanation;
    BeamOptions options;
    options.beam_size = beam;
    options.num_outputs = text ? 1 : std::min(num_outputs, beam);
    options.max_len = text ? ctx.explanation_max_len : 2;
    for (const auto &inst : dataset) {
        const auto beams = model.beam_search(render(tmpl, inst.args, assignment), options);
        if (text) {
            TokenSentence sentence;
            if (!beams.empty()) {
                sentence = beams.front().ids;
                if (!sentence.empty() && sentence.back() == kEosId) {
                    sentence.pop_back();
                }
            }
            out.generated.push_back(std::move(sentence));
        } else {
            out.ranked.push_back(parse_ranked(beams, inst, ctx));
        }
    }
    return out;
}

MetricsReport compute_metrics(const DecodedOutputs &decoded, std::span<const TaskInstance> dataset, TaskKind kind,
                              std::size_t max_k, double alpha) {
    MetricsReport report;
    if (kind == TaskKind::Explanation) {
        std::vector<TokenSentence> refs;
        refs.reserve(dataset.size());
        for (const auto &inst : dataset) {
            refs.push_back(inst.target);
        }
        report.values["BLEU-4"] = bleu4(decoded.generated, refs);
        report.values["ROUGE-1"] = rouge(decoded.generated, refs, RougeVariant::R1);
        report.values["ROUGE-2"] = rouge(decoded.generated, refs, RougeVariant::R2);
        report.values["ROUGE-L"] = rouge(decoded.generated, refs, RougeVariant::RL);
        report.surrogate = surrogate_score(report, kind, alpha);
        return report;
    }
    std::vector<TokenId> targets;
    targets.reserve(dataset.size());
    for (const auto &inst : dataset) {
        targets.push_back(inst.target.front());
    }
    for (std::size_t k : {1, 5, 10}) {
        if (k > max_k) {
            continue;
        }
        report.values["HR@" + std::to_string(k)] = hit_rate_at_k(decoded.ranked, targets, k);
        if (k > 1) {
            report.values["NDCG@" + std::to_string(k)] = ndcg_at_k(decoded.ranked, targets, k);
        }
    }
    if (report.has("HR@5")) {
        report.surrogate = surrogate_score(report, kind, alpha);
    }
    return report;
}

MetricsReport evaluate_prompt(const FrozenSeq2Seq &model, std::span<const TaskInstance> dataset,
                              const PromptTemplate &tmpl, const TriggerAssignment &assignment,
                              const EvalOptions &options, const EvalContext &ctx) {
    if (dataset.empty()) {
        throw ArgumentError("evaluation set is empty");
    }
    if (options.beam == 0 || options.repeats == 0) {
        throw ArgumentError("beam and repeats must be positive");
    }
    const bool text = tmpl.task_kind == TaskKind::Explanation;
    if (!text && options.beam < options.max_k) {
        throw ArgumentError("beam " + std::to_string(options.beam) + " cannot produce " +
                            std::to_string(options.max_k) + " ranked outputs");
    }
    MetricsReport mean;
    for (std::size_t r = 0; r < options.repeats; ++r) {
        // Beam decoding is deterministic, so repetitions differ only if a
        // stochastic decoder is introduced. Running means keep identical
        // repetitions bitwise equal to a single run.
        const auto decoded = decode_outputs(model, dataset, tmpl, assignment, options.beam, options.beam, ctx);
        const auto report = compute_metrics(decoded, dataset, tmpl.task_kind, options.max_k, options.alpha);
        const double weight = 1.0 / static_cast<double>(r + 1);
        for (const auto &[name, value] : report.values) {
            double &m = mean.values[name];
            m += (value - m) * weight;
        }
        mean.surrogate += (report.surrogate - mean.surrogate) * weight;
    }
    return mean;
}

} // namespace promptforge
