#include "promptforge/prompt.hpp"

#include "promptforge/errors.hpp"

namespace promptforge {

std::string_view to_string(TaskKind kind) {
    switch (kind) {
    case TaskKind::Sequential:
        return "sequential";
    case TaskKind::Matching:
        return "matching";
    case TaskKind::Explanation:
        return "explanation";
    }
    return "unknown";
}

std::string_view to_string(TriggerPlacement placement) {
    switch (placement) {
    case TriggerPlacement::SuffixOnly:
        return "suffix_only";
    case TriggerPlacement::PrefixOnly:
        return "prefix_only";
    case TriggerPlacement::PrefixAndSuffix:
        return "prefix_and_suffix";
    }
    return "unknown";
}

std::string_view to_string(UserSlotPlacement placement) {
    switch (placement) {
    case UserSlotPlacement::BeforeArgs:
        return "before_args";
    case UserSlotPlacement::BetweenArgsAndTriggers:
        return "between_args_and_triggers";
    case UserSlotPlacement::AfterTriggers:
        return "after_triggers";
    }
    return "unknown";
}

TaskKind parse_task_kind(std::string_view text) {
    for (auto kind : {TaskKind::Sequential, TaskKind::Matching, TaskKind::Explanation}) {
        if (text == to_string(kind)) {
            return kind;
        }
    }
    throw ArgumentError("unknown task kind '" + std::string(text) + "'");
}

TriggerPlacement parse_placement(std::string_view text) {
    for (auto p : {TriggerPlacement::SuffixOnly, TriggerPlacement::PrefixOnly, TriggerPlacement::PrefixAndSuffix}) {
        if (text == to_string(p)) {
            return p;
        }
    }
    throw ArgumentError("unknown trigger placement '" + std::string(text) + "'");
}

UserSlotPlacement parse_user_slot_placement(std::string_view text) {
    for (auto p : {UserSlotPlacement::BeforeArgs, UserSlotPlacement::BetweenArgsAndTriggers,
                   UserSlotPlacement::AfterTriggers}) {
        if (text == to_string(p)) {
            return p;
        }
    }
    throw ArgumentError("unknown user slot placement '" + std::string(text) + "'");
}

void PromptTemplate::validate() const {
    if (num_task_slots == 0) {
        throw ArgumentError("a prompt needs at least one task trigger slot");
    }
}

std::size_t PromptTemplate::prefix_slots() const {
    switch (placement) {
    case TriggerPlacement::SuffixOnly:
        return 0;
    case TriggerPlacement::PrefixOnly:
        return num_task_slots;
    case TriggerPlacement::PrefixAndSuffix:
        return (num_task_slots + 1) / 2;
    }
    return 0;
}

TokenId TriggerAssignment::user_token(TokenId user) const {
    auto it = user_tokens.find(user);
    return it == user_tokens.end() ? kDefaultTriggerId : it->second;
}

std::vector<TokenId> encode_args(TaskKind kind, const TaskArgs &args) {
    const auto &body = kind == TaskKind::Explanation ? args.item_title : args.items;
    if (body.empty()) {
        throw ArgumentError(kind == TaskKind::Explanation ? "explanation prompts need an item title"
                                                          : "ranking prompts need a non-empty item list");
    }
    std::vector<TokenId> ids;
    ids.reserve(body.size() + 2);
    ids.push_back(args.user);
    ids.push_back(kSepId);
    ids.insert(ids.end(), body.begin(), body.end());
    return ids;
}

TokenSequence render(const PromptTemplate &tmpl, const TaskArgs &args, const TriggerAssignment &assignment) {
    tmpl.validate();
    if (assignment.task_tokens.size() != tmpl.num_task_slots) {
        throw ArgumentError("assignment has " + std::to_string(assignment.task_tokens.size()) +
                            " task tokens, template expects " + std::to_string(tmpl.num_task_slots));
    }
    const std::vector<TokenId> arg_ids = encode_args(tmpl.task_kind, args);
    const std::size_t n_prefix = tmpl.prefix_slots();
    const bool has_suffix = n_prefix < tmpl.num_task_slots;

    TokenSequence seq;
    seq.ids.reserve(arg_ids.size() + tmpl.num_task_slots + 1);
    const auto put_user = [&] {
        seq.user_position = seq.ids.size();
        seq.ids.push_back(assignment.user_token(args.user));
    };
    const auto put_triggers = [&](std::size_t from, std::size_t to) {
        for (std::size_t i = from; i < to; ++i) {
            seq.trigger_positions.push_back(seq.ids.size());
            seq.ids.push_back(assignment.task_tokens[i]);
        }
    };
    const bool user = tmpl.has_user_slot;
    const auto where = tmpl.user_slot_placement;

    if (user && where == UserSlotPlacement::BeforeArgs) {
        put_user();
    }
    put_triggers(0, n_prefix);
    if (user && where == UserSlotPlacement::BetweenArgsAndTriggers && !has_suffix) {
        put_user();
    }
    seq.ids.insert(seq.ids.end(), arg_ids.begin(), arg_ids.end());
    if (user && where == UserSlotPlacement::BetweenArgsAndTriggers && has_suffix) {
        put_user();
    }
    put_triggers(n_prefix, tmpl.num_task_slots);
    if (user && where == UserSlotPlacement::AfterTriggers) {
        put_user();
    }
    return seq;
}

TriggerAssignment default_assignment(const PromptTemplate &tmpl, const Vocab &vocab, std::span<const TokenId> users) {
    tmpl.validate();
    const TokenId fill = vocab.id(kDefaultTriggerToken);
    TriggerAssignment assignment;
    assignment.task_tokens.assign(tmpl.num_task_slots, fill);
    if (tmpl.has_user_slot) {
        for (TokenId u : users) {
            assignment.user_tokens[u] = fill;
        }
    }
    return assignment;
}

} // namespace promptforge
