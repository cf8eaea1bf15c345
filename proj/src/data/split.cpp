#include <algorithm>
#include <random>
#include <set>
#include <unordered_set>

#include "promptforge/data.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

namespace {

constexpr std::size_t kMinInteractions = 3;

std::vector<TokenId> item_universe(const InteractionLog &log, const Vocab &vocab) {
    std::vector<TokenId> items;
    items.reserve(log.item_titles.size());
    for (const auto &[item, title] : log.item_titles) {
        items.push_back(vocab.id(item));
    }
    return items;
}

// Keeps the most recent occurrence of each item so no target can reappear in
// an earlier history.
std::vector<std::string> deduplicated_items(const std::vector<Interaction> &records) {
    std::vector<std::string> items;
    std::set<std::string> seen;
    for (auto it = records.rbegin(); it != records.rend(); ++it) {
        if (seen.insert(it->item).second) {
            items.push_back(it->item);
        }
    }
    std::reverse(items.begin(), items.end());
    return items;
}

TaskInstance sequential_instance(TokenId user, const std::vector<TokenId> &items, std::size_t target,
                                 std::size_t max_history) {
    TaskInstance inst;
    inst.kind = TaskKind::Sequential;
    inst.user = user;
    inst.args.user = user;
    const std::size_t begin = target > max_history ? target - max_history : 0;
    inst.args.items.assign(items.begin() + static_cast<std::ptrdiff_t>(begin),
                           items.begin() + static_cast<std::ptrdiff_t>(target));
    inst.target = {items[target]};
    return inst;
}

} // namespace

std::vector<TokenId> decoder_target(const TaskInstance &instance) {
    std::vector<TokenId> target = instance.target;
    target.push_back(kEosId);
    return target;
}

SplitDataset leave_one_out_split(const InteractionLog &log, const Vocab &vocab, TaskKind kind,
                                 const SplitOptions &options) {
    if (kind == TaskKind::Explanation) {
        return build_explanation_instances(log, vocab);
    }
    if (options.max_history == 0) {
        throw ArgumentError("max_history must be positive");
    }
    SplitDataset split;
    split.kind = TaskKind::Sequential;
    split.items = item_universe(log, vocab);
    for (const auto &[user_name, records] : log.users) {
        const auto names = deduplicated_items(records);
        if (names.size() < kMinInteractions) {
            ++split.skipped.users_skipped;
            split.skipped.records_skipped += records.size();
            continue;
        }
        const TokenId user = vocab.id(user_name);
        std::vector<TokenId> items;
        for (const auto &n : names) {
            items.push_back(vocab.id(n));
        }
        const std::size_t n = items.size();
        for (std::size_t t = 1; t + 2 < n; ++t) {
            split.train.push_back(sequential_instance(user, items, t, options.max_history));
        }
        split.val.push_back(sequential_instance(user, items, n - 2, options.max_history));
        split.test.push_back(sequential_instance(user, items, n - 1, options.max_history));
    }
    if (kind == TaskKind::Matching) {
        return build_matching_instances(log, vocab, split, options.num_negatives, options.seed);
    }
    return split;
}

SplitDataset build_matching_instances(const InteractionLog &log, const Vocab &vocab, const SplitDataset &sequential,
                                      std::size_t num_negatives, std::int64_t seed) {
    std::map<TokenId, std::unordered_set<TokenId>> history;
    for (const auto &[user_name, records] : log.users) {
        auto &seen = history[vocab.id(user_name)];
        for (const auto &r : records) {
            seen.insert(vocab.id(r.item));
        }
    }
    const std::vector<TokenId> universe = item_universe(log, vocab);
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));

    const auto convert = [&](const std::vector<TaskInstance> &from) {
        std::vector<TaskInstance> out;
        out.reserve(from.size());
        for (const auto &src : from) {
            const auto &seen = history[src.user];
            std::vector<TokenId> pool;
            for (TokenId item : universe) {
                if (!seen.contains(item)) {
                    pool.push_back(item);
                }
            }
            // partial Fisher-Yates: first num_negatives entries become the sample
            const std::size_t take = std::min(num_negatives, pool.size());
            for (std::size_t i = 0; i < take; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
                std::swap(pool[i], pool[pick(rng)]);
            }
            TaskInstance inst;
            inst.kind = TaskKind::Matching;
            inst.user = src.user;
            inst.args.user = src.user;
            inst.args.items.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
            inst.args.items.push_back(src.target.front());
            std::shuffle(inst.args.items.begin(), inst.args.items.end(), rng);
            inst.target = src.target;
            out.push_back(std::move(inst));
        }
        return out;
    };

    SplitDataset split;
    split.kind = TaskKind::Matching;
    split.items = universe;
    split.skipped = sequential.skipped;
    split.train = convert(sequential.train);
    split.val = convert(sequential.val);
    split.test = convert(sequential.test);
    return split;
}

SplitDataset build_explanation_instances(const InteractionLog &log, const Vocab &vocab) {
    SplitDataset split;
    split.kind = TaskKind::Explanation;
    split.items = item_universe(log, vocab);
    for (const auto &[user_name, records] : log.users) {
        if (records.size() < kMinInteractions) {
            ++split.skipped.users_skipped;
            split.skipped.records_skipped += records.size();
            continue;
        }
        const TokenId user = vocab.id(user_name);
        std::vector<TaskInstance> usable;
        for (const auto &r : records) {
            const auto title = log.item_titles.find(r.item);
            if (r.explanation.empty() || title == log.item_titles.end() || title->second.empty()) {
                ++split.skipped.records_skipped;
                continue;
            }
            TaskInstance inst;
            inst.kind = TaskKind::Explanation;
            inst.user = user;
            inst.args.user = user;
            inst.args.rating = r.rating;
            for (const auto &w : title->second) {
                inst.args.item_title.push_back(vocab.id(w));
            }
            for (const auto &w : r.explanation) {
                inst.target.push_back(vocab.id(w));
            }
            usable.push_back(std::move(inst));
        }
        if (usable.size() < kMinInteractions) {
            ++split.skipped.users_skipped;
            split.skipped.records_skipped += usable.size();
            continue;
        }
        split.test.push_back(std::move(usable.back()));
        usable.pop_back();
        split.val.push_back(std::move(usable.back()));
        usable.pop_back();
        for (auto &inst : usable) {
            split.train.push_back(std::move(inst));
        }
    }
    return split;
}

UserPartition partition_by_user(const SplitDataset &split) {
    UserPartition partition;
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        partition.users[split.train[i].user].train.push_back(i);
    }
    for (std::size_t i = 0; i < split.val.size(); ++i) {
        partition.users[split.val[i].user].val.push_back(i);
    }
    return partition;
}

std::vector<TokenId> users_of(const SplitDataset &split) {
    std::set<TokenId> users;
    for (const auto *part : {&split.train, &split.val, &split.test}) {
        for (const auto &inst : *part) {
            users.insert(inst.user);
        }
    }
    return {users.begin(), users.end()};
}

} // namespace promptforge
