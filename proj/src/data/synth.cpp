#include <algorithm>
#include <array>
#include <numeric>
#include <random>
#include <set>

#include "promptforge/backbone.hpp"
#include "promptforge/data.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

namespace {

const std::vector<std::string> kNouns = {"lotion",  "shampoo", "serum",     "lipstick",    "perfume",
                                         "cleanser", "mascara", "sunscreen", "conditioner", "moisturizer",
                                         "toner",   "balm",    "scrub",     "polish",      "gel",
                                         "mask"};

const std::vector<std::string> kAspects = {"scent", "texture", "price", "color",
                                           "size",  "packaging", "quality", "finish"};

const std::vector<std::string> kAdjectives = {"lovely", "smooth", "gentle", "bright", "rich",   "light",
                                              "fresh",  "soft",   "strong", "subtle", "silky",  "cheap",
                                              "heavy",  "mild",   "bold",   "clean",  "warm",   "cool",
                                              "sweet",  "dry",    "creamy", "matte",  "glossy", "natural"};

const std::vector<std::string> kFiller = {
    "the",     "a",       "an",       "and",      "or",       "but",     "is",       "are",     "was",
    "be",      "to",      "of",       "in",       "on",       "for",     "with",     "this",    "that",
    "it",      "its",     "my",       "your",     "their",    "very",    "really",   "quite",   "good",
    "great",   "nice",    "bad",      "poor",     "fine",     "okay",    "love",     "hate",    "use",
    "used",    "using",   "product",  "item",     "thing",    "works",   "work",     "well",    "long",
    "short",   "lasts",   "day",      "night",    "morning",  "skin",    "hair",     "face",    "hands",
    "body",    "lips",    "eyes",     "nails",    "brand",    "bottle",  "tube",     "jar",     "box",
    "gift",    "set",     "kit",      "travel",   "home",     "daily",   "weekly",   "value",   "money",
    "cost",    "worth",   "deal",     "order",    "ship",     "arrived", "fast",     "slow",    "time",
    "again",   "also",    "too",      "not",      "no",       "yes",     "maybe",    "always",  "never",
    "often",   "sometimes", "first",  "last",     "new",      "old",     "best",     "better",  "worse",
    "worst",   "more",    "less",     "most",     "least",    "much",    "many",     "few",     "some",
    "any",     "every",   "each",     "other",    "another",  "same",    "different", "big",    "small",
    "large",   "little",  "high",     "low",      "top",      "bottom",  "left",     "right",   "up",
    "down",    "over",    "under",    "before",   "during",   "while",   "when",     "where",   "who",
    "whom",    "whose",   "how",      "because",  "since",    "so",      "if",       "than",    "as",
    "at",      "by",      "into",     "onto",     "out",      "off",     "about",    "around",  "between",
    "through", "without", "within",   "along",    "across",   "behind",  "beyond",   "near",    "far",
    "here",    "there",   "now",      "today",    "tomorrow", "yesterday", "week",   "month",   "year",
    "season",  "summer",  "winter",   "spring",   "autumn",   "red",     "blue",     "green",   "black",
    "white",   "pink",    "purple",   "gold",     "silver",   "rose",    "vanilla",  "citrus",  "mint",
    "lavender", "coconut", "honey",   "aloe",     "oil",      "water",   "cream",    "powder",  "stick",
    "spray",   "foam",    "liquid",   "solid",    "organic",  "vegan",   "pure",     "simple",  "classic",
    "modern",  "luxury",  "budget",   "premium",  "basic",    "extra",   "super",    "ultra",   "mega",
    "mini",    "nominee", "consideration", "mid", "describes", "choose",  "user",     "customer", "shopper",
    "buyer",   "people",  "friend",   "family",   "mother",   "sister",  "wife",     "husband", "kids",
    "0",       "1",       "2",        "3",        "4",        "5",       "6",        "7",       "8",
    "9"};

std::string category_noun(std::size_t c) {
    return c < kNouns.size() ? kNouns[c] : "category_" + std::to_string(c);
}

} // namespace

const std::vector<std::string> &builtin_words() {
    static const std::vector<std::string> words = [] {
        std::vector<std::string> out;
        std::set<std::string> seen;
        const auto add = [&](const std::string &w) {
            if (seen.insert(w).second) {
                out.push_back(w);
            }
        };
        for (auto kind : {TaskKind::Sequential, TaskKind::Matching, TaskKind::Explanation}) {
            for (const auto &w : task_word_pool(kind)) {
                add(w);
            }
        }
        for (const auto *list : {&kNouns, &kAspects, &kAdjectives, &kFiller}) {
            for (const auto &w : *list) {
                add(w);
            }
        }
        return out;
    }();
    return words;
}

InteractionLog synth_generate(const SynthOptions &options) {
    if (options.min_len < 3) {
        throw ArgumentError("min_len must be at least 3 (train, validation and test items)");
    }
    if (options.max_len < options.min_len) {
        throw ArgumentError("max_len must be >= min_len");
    }
    if (options.num_items < options.max_len + 1) {
        throw ArgumentError("num_items must exceed max_len");
    }
    if (options.num_users == 0) {
        throw ArgumentError("num_users must be positive");
    }
    std::mt19937_64 rng(static_cast<std::uint64_t>(options.seed));
    const auto uniform = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    const auto coin = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };

    const std::size_t num_items = options.num_items;
    const std::size_t num_categories = std::max<std::size_t>(1, num_items / 10);
    const std::size_t brands = (num_items + num_categories - 1) / num_categories;

    std::vector<std::size_t> category(num_items);
    std::vector<std::vector<std::size_t>> members(num_categories);
    for (std::size_t i = 0; i < num_items; ++i) {
        category[i] = i % num_categories;
        members[category[i]].push_back(i);
    }
    std::vector<std::size_t> successor(num_items);
    for (auto &group : members) {
        std::vector<std::size_t> chain = group;
        std::shuffle(chain.begin(), chain.end(), rng);
        for (std::size_t j = 0; j < chain.size(); ++j) {
            successor[chain[j]] = chain[(j + 1) % chain.size()];
        }
    }
    // three adjectives per category, one per item quality tier
    std::vector<std::array<std::size_t, 3>> category_adjectives(num_categories);
    for (auto &adj : category_adjectives) {
        for (auto &a : adj) {
            a = uniform(kAdjectives.size());
        }
    }

    const auto item_name = [](std::size_t i) { return "item_" + std::to_string(i); };

    InteractionLog log;
    for (std::size_t i = 0; i < num_items; ++i) {
        log.item_titles[item_name(i)] = {"brand_" + std::to_string(i / num_categories % brands),
                                         category_noun(category[i])};
    }

    for (std::size_t u = 0; u < options.num_users; ++u) {
        const std::string user = "user_" + std::to_string(u);
        const std::size_t fav1 = uniform(num_categories);
        std::size_t fav2 = num_categories > 1 ? uniform(num_categories - 1) : 0;
        if (num_categories > 1 && fav2 >= fav1) {
            ++fav2;
        }
        const std::size_t aspect = uniform(kAspects.size());
        const std::size_t len = options.min_len + uniform(options.max_len - options.min_len + 1);

        std::vector<bool> used(num_items, false);
        const auto pick_unused_in = [&](std::size_t c) -> std::optional<std::size_t> {
            std::vector<std::size_t> free;
            for (std::size_t i : members[c]) {
                if (!used[i]) {
                    free.push_back(i);
                }
            }
            if (free.empty()) {
                return std::nullopt;
            }
            return free[uniform(free.size())];
        };
        const auto pick_any_unused = [&] {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < num_items; ++i) {
                if (!used[i]) {
                    free.push_back(i);
                }
            }
            return free[uniform(free.size())];
        };
        const auto pick_favourite = [&] {
            const std::size_t c = coin() < 0.7 ? fav1 : fav2;
            if (auto i = pick_unused_in(c)) {
                return *i;
            }
            return pick_any_unused();
        };

        std::int64_t ts = 1546300800 + static_cast<std::int64_t>(uniform(1000000));
        std::size_t prev = pick_favourite();
        for (std::size_t t = 0; t < len; ++t) {
            std::size_t item = prev;
            if (t > 0) {
                const double r = coin();
                if (r < 0.65 && !used[successor[prev]]) {
                    item = successor[prev];
                } else if (r < 0.92) {
                    item = pick_favourite();
                } else {
                    item = pick_any_unused();
                }
            }
            used[item] = true;
            prev = item;

            Interaction rec;
            rec.user = user;
            rec.item = item_name(item);
            rec.timestamp = ts;
            ts += 3600 + static_cast<std::int64_t>(uniform(86400));
            const std::size_t c = category[item];
            const bool favourite = c == fav1 || c == fav2;
            rec.rating = favourite ? 4 + static_cast<int>(uniform(2)) : 2 + static_cast<int>(uniform(3));
            const std::size_t adjective =
                coin() < 0.15 ? uniform(kAdjectives.size()) : category_adjectives[c][item / num_categories % 3];
            rec.explanation = {kAspects[aspect], "is", kAdjectives[adjective], "for", "this", category_noun(c)};
            log.users[user].push_back(std::move(rec));
        }
    }
    return log;
}

Vocab build_vocab(const InteractionLog &log) {
    Vocab vocab;
    for (const auto &w : builtin_words()) {
        vocab.add(w);
    }
    for (const auto &[user, records] : log.users) {
        vocab.add(user);
    }
    for (const auto &[item, title] : log.item_titles) {
        vocab.add(item);
    }
    for (const auto &[item, title] : log.item_titles) {
        for (const auto &w : title) {
            vocab.add(w);
        }
    }
    for (const auto &[user, records] : log.users) {
        for (const auto &r : records) {
            vocab.add(r.item);
            for (const auto &w : r.explanation) {
                vocab.add(w);
            }
        }
    }
    return vocab;
}

} // namespace promptforge
