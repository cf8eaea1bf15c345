#include "promptforge/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "promptforge/errors.hpp"

namespace promptforge {

namespace {

using NgramCounts = std::map<std::vector<TokenId>, std::size_t>;

NgramCounts ngrams(const TokenSentence &s, std::size_t n) {
    NgramCounts counts;
    if (s.size() < n) {
        return counts;
    }
    for (std::size_t i = 0; i + n <= s.size(); ++i) {
        ++counts[std::vector<TokenId>(s.begin() + static_cast<std::ptrdiff_t>(i),
                                      s.begin() + static_cast<std::ptrdiff_t>(i + n))];
    }
    return counts;
}

std::size_t clipped_overlap(const NgramCounts &hyp, const NgramCounts &ref) {
    std::size_t total = 0;
    for (const auto &[gram, count] : hyp) {
        if (auto it = ref.find(gram); it != ref.end()) {
            total += std::min(count, it->second);
        }
    }
    return total;
}

double f1(double overlap, double hyp_total, double ref_total) {
    if (overlap == 0.0 || hyp_total == 0.0 || ref_total == 0.0) {
        return 0.0;
    }
    const double p = overlap / hyp_total;
    const double r = overlap / ref_total;
    return 2.0 * p * r / (p + r);
}

std::size_t lcs_length(const TokenSentence &a, const TokenSentence &b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

void check_pairs(std::size_t hyps, std::size_t refs) {
    if (hyps != refs) {
        throw ArgumentError("hypothesis and reference counts differ");
    }
    if (hyps == 0) {
        throw ArgumentError("empty corpus");
    }
}

} // namespace

double MetricsReport::at(const std::string &name) const {
    auto it = values.find(name);
    if (it == values.end()) {
        throw ArgumentError("metric " + name + " not in report");
    }
    return it->second;
}

std::size_t rank_of(const RankedList &ranked, TokenId target) {
    auto it = std::find(ranked.begin(), ranked.end(), target);
    return it == ranked.end() ? 0 : static_cast<std::size_t>(it - ranked.begin()) + 1;
}

double hit_rate_at_k(std::span<const RankedList> ranked, std::span<const TokenId> targets, std::size_t k) {
    if (k == 0) {
        throw ArgumentError("k must be at least 1");
    }
    if (ranked.size() != targets.size()) {
        throw ArgumentError("ranked list and target counts differ");
    }
    if (ranked.empty()) {
        return 0.0;
    }
    double hits = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const std::size_t r = rank_of(ranked[i], targets[i]);
        hits += (r != 0 && r <= k) ? 1.0 : 0.0;
    }
    return hits / static_cast<double>(ranked.size());
}

double ndcg_at_k(std::span<const RankedList> ranked, std::span<const TokenId> targets, std::size_t k) {
    if (k == 0) {
        throw ArgumentError("k must be at least 1");
    }
    if (ranked.size() != targets.size()) {
        throw ArgumentError("ranked list and target counts differ");
    }
    if (ranked.empty()) {
        return 0.0;
    }
    double gain = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const std::size_t r = rank_of(ranked[i], targets[i]);
        if (r != 0 && r <= k) {
            gain += 1.0 / std::log2(static_cast<double>(r) + 1.0);
        }
    }
    return gain / static_cast<double>(ranked.size());
}

double bleu4(std::span<const TokenSentence> hypotheses, std::span<const TokenSentence> references) {
    check_pairs(hypotheses.size(), references.size());
    std::array<double, 4> matched{}, total{};
    double hyp_len = 0.0, ref_len = 0.0;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        hyp_len += static_cast<double>(hypotheses[i].size());
        ref_len += static_cast<double>(references[i].size());
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto h = ngrams(hypotheses[i], n);
            matched[n - 1] += static_cast<double>(clipped_overlap(h, ngrams(references[i], n)));
            total[n - 1] += hypotheses[i].size() >= n ? static_cast<double>(hypotheses[i].size() - n + 1) : 0.0;
        }
    }
    double log_sum = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
        if (matched[n] == 0.0 || total[n] == 0.0) {
            return 0.0;
        }
        log_sum += std::log(matched[n] / total[n]);
    }
    const double brevity = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
    return brevity * std::exp(log_sum / 4.0);
}

double rouge(std::span<const TokenSentence> hypotheses, std::span<const TokenSentence> references,
             RougeVariant variant) {
    check_pairs(hypotheses.size(), references.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        const auto &h = hypotheses[i];
        const auto &r = references[i];
        if (variant == RougeVariant::RL) {
            sum += f1(static_cast<double>(lcs_length(h, r)), static_cast<double>(h.size()),
                      static_cast<double>(r.size()));
            continue;
        }
        const std::size_t n = variant == RougeVariant::R1 ? 1 : 2;
        const auto hg = ngrams(h, n);
        const auto rg = ngrams(r, n);
        const double ht = h.size() >= n ? static_cast<double>(h.size() - n + 1) : 0.0;
        const double rt = r.size() >= n ? static_cast<double>(r.size() - n + 1) : 0.0;
        sum += f1(static_cast<double>(clipped_overlap(hg, rg)), ht, rt);
    }
    return sum / static_cast<double>(hypotheses.size());
}

double surrogate_score(const MetricsReport &report, TaskKind kind, double alpha) {
    if (kind == TaskKind::Explanation) {
        return report.at("BLEU-4") + alpha * report.at("ROUGE-L");
    }
    return report.at("HR@5") + alpha * report.at("NDCG@5");
}

double default_alpha(TaskKind kind) { return kind == TaskKind::Explanation ? 0.1 : 1.0; }

} // namespace promptforge
