#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "promptforge/prompt.hpp"
#include "promptforge/vocab.hpp"

namespace promptforge {

// Per-instance ranked item ids, best first, duplicate-free.
using RankedList = std::vector<TokenId>;
using TokenSentence = std::vector<TokenId>;

// Named metric values on the fractional [0, 1] scale plus the surrogate score.
struct MetricsReport {
    std::map<std::string, double> values;
    double surrogate = 0.0;

    double at(const std::string &name) const;
    bool has(const std::string &name) const { return values.contains(name); }
    bool operator==(const MetricsReport &) const = default;
};

// 1-based rank of target in ranked, or 0 when absent.
std::size_t rank_of(const RankedList &ranked, TokenId target);

double hit_rate_at_k(std::span<const RankedList> ranked, std::span<const TokenId> targets, std::size_t k);

// Single relevant item: 1 / log2(rank + 1) for rank <= k, else 0; averaged.
double ndcg_at_k(std::span<const RankedList> ranked, std::span<const TokenId> targets, std::size_t k);

// Corpus BLEU-4, uniform weights, brevity penalty, no smoothing.
double bleu4(std::span<const TokenSentence> hypotheses, std::span<const TokenSentence> references);

enum class RougeVariant { R1, R2, RL };

// Mean per-pair F1 of unigram / bigram overlap or longest common subsequence.
double rouge(std::span<const TokenSentence> hypotheses, std::span<const TokenSentence> references,
             RougeVariant variant);

// HR@5 + alpha * NDCG@5 for ranking tasks, BLEU-4 + alpha * ROUGE-L for explanation.
double surrogate_score(const MetricsReport &report, TaskKind kind, double alpha);

double default_alpha(TaskKind kind);

} // namespace promptforge
