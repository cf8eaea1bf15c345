#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptforge/seq2seq.hpp"
#include "promptforge/vocab.hpp"

namespace promptforge {

enum class TaskKind { Sequential, Matching, Explanation };

enum class TriggerPlacement { SuffixOnly, PrefixOnly, PrefixAndSuffix };

// Where the user-specific slot sits. BeforeArgs is the very start of the
// prompt, AfterTriggers the very end; BetweenArgsAndTriggers is adjacent to
// the args block on the side of the nearest trigger block (after the args
// when there are suffix triggers, before them for prefix-only prompts).
enum class UserSlotPlacement { BeforeArgs, BetweenArgsAndTriggers, AfterTriggers };

std::string_view to_string(TaskKind kind);
std::string_view to_string(TriggerPlacement placement);
std::string_view to_string(UserSlotPlacement placement);
TaskKind parse_task_kind(std::string_view text);
TriggerPlacement parse_placement(std::string_view text);
UserSlotPlacement parse_user_slot_placement(std::string_view text);

struct PromptTemplate {
    TaskKind task_kind = TaskKind::Sequential;
    std::size_t num_task_slots = 5;
    bool has_user_slot = false;
    TriggerPlacement placement = TriggerPlacement::SuffixOnly;
    UserSlotPlacement user_slot_placement = UserSlotPlacement::AfterTriggers;

    void validate() const;
    // Number of task slots rendered before the args block.
    std::size_t prefix_slots() const;
    bool operator==(const PromptTemplate &) const = default;
};

struct TriggerAssignment {
    std::vector<TokenId> task_tokens;
    // user id token -> user trigger token
    std::map<TokenId, TokenId> user_tokens;

    // Users without an entry fall back to the default "?" token.
    TokenId user_token(TokenId user) const;
    bool operator==(const TriggerAssignment &) const = default;
};

struct TaskArgs {
    TokenId user = kPadId;
    std::vector<TokenId> items;
    std::vector<TokenId> item_title;
    // Carried for rating-conditioned prompts; no rendering path consumes it.
    std::optional<int> rating;

    bool operator==(const TaskArgs &) const = default;
};

// "user_u : i1 i2 ..." (items or title tokens after the separator).
std::vector<TokenId> encode_args(TaskKind kind, const TaskArgs &args);

TokenSequence render(const PromptTemplate &tmpl, const TaskArgs &args, const TriggerAssignment &assignment);

TriggerAssignment default_assignment(const PromptTemplate &tmpl, const Vocab &vocab, std::span<const TokenId> users);

// Line-oriented checkpoint file; tokens are stored as strings.
void save_assignment(const std::filesystem::path &path, const PromptTemplate &tmpl,
                     const TriggerAssignment &assignment, const Vocab &vocab);
std::string format_assignment(const PromptTemplate &tmpl, const TriggerAssignment &assignment, const Vocab &vocab);

struct LoadedAssignment {
    PromptTemplate tmpl;
    TriggerAssignment assignment;
};
LoadedAssignment load_assignment(const std::filesystem::path &path, const Vocab &vocab);
LoadedAssignment parse_assignment(std::string_view text, const Vocab &vocab);

} // namespace promptforge
