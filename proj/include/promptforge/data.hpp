#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "promptforge/prompt.hpp"
#include "promptforge/vocab.hpp"

namespace promptforge {

struct Interaction {
    std::string user;
    std::string item;
    std::int64_t timestamp = 0;
    std::optional<int> rating;
    std::vector<std::string> explanation;

    bool operator==(const Interaction &) const = default;
};

struct InteractionLog {
    // Per-user records in timestamp order (ties keep file order).
    std::map<std::string, std::vector<Interaction>> users;
    // Item universe with title tokens; items seen only in interactions get an
    // empty title.
    std::map<std::string, std::vector<std::string>> item_titles;

    std::size_t num_records() const;
    bool operator==(const InteractionLog &) const = default;
};

struct LoadOptions {
    std::optional<std::int64_t> min_timestamp;
    std::optional<std::int64_t> max_timestamp;
};

// Tab-separated `user  item  timestamp  [rating]  [explanation tokens]`; '#' starts a comment line.
InteractionLog load_interactions(const std::filesystem::path &path, const LoadOptions &options = {});
void write_interactions(const InteractionLog &log, const std::filesystem::path &path);

// Tab-separated `item  title tokens`.
void load_item_titles(const std::filesystem::path &path, InteractionLog &log);
void write_item_titles(const InteractionLog &log, const std::filesystem::path &path);

struct SynthOptions {
    std::size_t num_users = 200;
    std::size_t num_items = 100;
    std::size_t min_len = 5;
    std::size_t max_len = 12;
    std::int64_t seed = 0;
};

// Latent-category generator: users prefer a few categories and tend to follow
// a fixed successor chain inside a category, so the next item is learnable.
// Every record carries a templated explanation of at least four tokens.
InteractionLog synth_generate(const SynthOptions &options);

// Built-in word list (title, explanation and prompt words plus filler words).
const std::vector<std::string> &builtin_words();

// Specials, users, items, title/explanation words and the built-in word list.
Vocab build_vocab(const InteractionLog &log);

struct TaskInstance {
    TaskKind kind = TaskKind::Sequential;
    TaskArgs args;
    std::vector<TokenId> target;
    TokenId user = kPadId;

    bool operator==(const TaskInstance &) const = default;
};

// Target plus end-of-sequence, as scored by the decoder.
std::vector<TokenId> decoder_target(const TaskInstance &instance);

struct SkipReport {
    std::size_t users_skipped = 0;
    std::size_t records_skipped = 0;
};

struct SplitDataset {
    TaskKind kind = TaskKind::Sequential;
    std::vector<TaskInstance> train;
    std::vector<TaskInstance> val;
    std::vector<TaskInstance> test;
    SkipReport skipped;
    // Every item id token in the universe.
    std::vector<TokenId> items;
};

struct SplitOptions {
    std::size_t num_negatives = 99;
    std::size_t max_history = 20;
    std::int64_t seed = 0;
};

SplitDataset leave_one_out_split(const InteractionLog &log, const Vocab &vocab, TaskKind kind,
                                 const SplitOptions &options = {});

// Turns a sequential split into matching instances: candidates are the target
// plus up to num_negatives items outside the user's full history, shuffled.
SplitDataset build_matching_instances(const InteractionLog &log, const Vocab &vocab, const SplitDataset &sequential,
                                      std::size_t num_negatives, std::int64_t seed);

SplitDataset build_explanation_instances(const InteractionLog &log, const Vocab &vocab);

struct UserSlice {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

// Indices into SplitDataset::train / ::val grouped by user.
struct UserPartition {
    std::map<TokenId, UserSlice> users;
};

UserPartition partition_by_user(const SplitDataset &split);

std::vector<TokenId> users_of(const SplitDataset &split);

} // namespace promptforge
