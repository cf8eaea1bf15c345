#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "promptforge/data.hpp"
#include "promptforge/errors.hpp"

using namespace promptforge;

namespace {

std::filesystem::path write_temp(const std::string &name, const std::string &text) {
    auto dir = std::filesystem::temp_directory_path() / "promptforge_data";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << text;
    return path;
}

std::string slurp(const std::filesystem::path &p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("interaction files parse, sort by time and filter by date") {
    const auto path = write_temp("log.tsv", "# comment\n"
                                            "u1\ti2\t20\t4\tgood for this\n"
                                            "u1\ti1\t10\n"
                                            "u2\ti1\t15\t\tfine\n");
    const auto log = load_interactions(path);
    CHECK(log.num_records() == 3);
    const auto &u1 = log.users.at("u1");
    CHECK(u1[0].item == "i1");
    CHECK(u1[1].item == "i2");
    CHECK(u1[1].rating == 4);
    CHECK(u1[1].explanation == std::vector<std::string>{"good", "for", "this"});
    CHECK_FALSE(log.users.at("u2")[0].rating.has_value());
    CHECK(log.item_titles.size() == 2);

    LoadOptions window;
    window.min_timestamp = 12;
    window.max_timestamp = 18;
    const auto filtered = load_interactions(path, window);
    CHECK(filtered.num_records() == 1);
    CHECK(filtered.users.count("u1") == 0);
}

TEST_CASE("interaction parse errors name the line") {
    try {
        load_interactions(write_temp("dup.tsv", "u1\ti1\t5\nu1\ti2\t6\nu1\ti1\t5\n"));
        FAIL("expected duplicate error");
    } catch (const ParseError &e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    CHECK_THROWS_AS(load_interactions(write_temp("short.tsv", "u1\ti1\n")), ParseError);
    CHECK_THROWS_AS(load_interactions(write_temp("ts.tsv", "u1\ti1\tnoon\n")), ParseError);
    CHECK_THROWS_AS(load_interactions("/nonexistent/x.tsv"), IoError);
}

TEST_CASE("synthetic data is deterministic and round-trips through files") {
    SynthOptions opts;
    opts.num_users = 30;
    opts.num_items = 40;
    const auto a = synth_generate(opts);
    const auto b = synth_generate(opts);
    CHECK(a == b);
    opts.seed = 1;
    CHECK_FALSE(synth_generate(opts) == a);

    CHECK(a.users.size() == 30);
    CHECK(a.item_titles.size() == 40);
    for (const auto &[user, records] : a.users) {
        CHECK(records.size() >= 5);
        CHECK(records.size() <= 12);
        std::set<std::string> items;
        for (std::size_t i = 0; i < records.size(); ++i) {
            items.insert(records[i].item);
            CHECK(records[i].explanation.size() >= 4);
            if (i > 0) {
                CHECK(records[i].timestamp > records[i - 1].timestamp);
            }
        }
        CHECK(items.size() == records.size());
    }

    const auto path = write_temp("synth.tsv", "");
    const auto titles = write_temp("titles.tsv", "");
    write_interactions(a, path);
    write_item_titles(a, titles);
    auto back = load_interactions(path);
    load_item_titles(titles, back);
    CHECK(back == a);
    write_interactions(back, path);
    const std::string first = slurp(path);
    write_interactions(a, path);
    CHECK(slurp(path) == first);

    SynthOptions bad;
    bad.num_items = 10;
    CHECK_THROWS_AS(synth_generate(bad), ArgumentError);
}

TEST_CASE("leave-one-out split semantics") {
    InteractionLog log;
    auto add = [&](const std::string &u, const std::vector<std::string> &items) {
        std::int64_t ts = 0;
        for (const auto &i : items) {
            log.users[u].push_back({u, i, ts++, std::nullopt, {}});
            log.item_titles[i];
        }
    };
    add("u1", {"a", "b", "c", "d", "e"});
    add("u2", {"a", "b"});
    add("u3", {"c", "a", "c", "b"}); // duplicate keeps the later "c"
    const Vocab vocab = build_vocab(log);
    const auto split = leave_one_out_split(log, vocab, TaskKind::Sequential);

    CHECK(split.skipped.users_skipped == 1);
    CHECK(split.skipped.records_skipped == 2);
    CHECK(split.val.size() == 2);
    CHECK(split.test.size() == 2);
    // u1: train targets b, c; val target d; test target e
    CHECK(split.train.size() == 2);
    CHECK(split.train[0].target == std::vector<TokenId>{vocab.id("b")});
    CHECK(split.train[1].args.items == std::vector<TokenId>{vocab.id("a"), vocab.id("b")});
    CHECK(split.val[0].target == std::vector<TokenId>{vocab.id("d")});
    CHECK(split.test[0].args.items.size() == 4);
    // u3 deduplicated to a, c, b
    CHECK(split.test[1].target == std::vector<TokenId>{vocab.id("b")});
    CHECK(split.test[1].args.items == std::vector<TokenId>{vocab.id("a"), vocab.id("c")});
    CHECK(decoder_target(split.test[1]).back() == kEosId);

    SplitOptions short_history;
    short_history.max_history = 2;
    const auto truncated = leave_one_out_split(log, vocab, TaskKind::Sequential, short_history);
    CHECK(truncated.test[0].args.items == std::vector<TokenId>{vocab.id("c"), vocab.id("d")});
}

TEST_CASE("matching candidates contain exactly one interacted item") {
    SynthOptions opts;
    opts.num_users = 40;
    const auto log = synth_generate(opts);
    const Vocab vocab = build_vocab(log);
    SplitOptions so;
    so.num_negatives = 20;
    const auto split = leave_one_out_split(log, vocab, TaskKind::Matching, so);
    CHECK(split.kind == TaskKind::Matching);
    for (const auto *part : {&split.train, &split.val, &split.test}) {
        for (const auto &inst : *part) {
            std::set<TokenId> history;
            for (const auto &r : log.users.at(vocab.token(inst.user))) {
                history.insert(vocab.id(r.item));
            }
            CHECK(inst.args.items.size() == 21);
            std::size_t hits = 0;
            for (TokenId c : inst.args.items) {
                hits += history.count(c);
            }
            CHECK(hits == 1);
            CHECK(std::find(inst.args.items.begin(), inst.args.items.end(), inst.target.front()) !=
                  inst.args.items.end());
        }
    }
    CHECK(leave_one_out_split(log, vocab, TaskKind::Matching, so).train == split.train);
}

TEST_CASE("explanation split uses the last two records for val and test") {
    SynthOptions opts;
    opts.num_users = 10;
    const auto log = synth_generate(opts);
    const Vocab vocab = build_vocab(log);
    const auto split = build_explanation_instances(log, vocab);
    CHECK(split.val.size() == 10);
    CHECK(split.test.size() == 10);
    const auto &records = log.users.begin()->second;
    std::vector<TokenId> expected;
    for (const auto &w : records.back().explanation) {
        expected.push_back(vocab.id(w));
    }
    CHECK(split.test.front().target == expected);
    CHECK_FALSE(split.test.front().args.item_title.empty());
}

TEST_CASE("per-user partition is a disjoint cover") {
    SynthOptions opts;
    opts.num_users = 25;
    const auto log = synth_generate(opts);
    const Vocab vocab = build_vocab(log);
    const auto split = leave_one_out_split(log, vocab, TaskKind::Sequential);
    const auto part = partition_by_user(split);
    std::vector<int> train_seen(split.train.size(), 0), val_seen(split.val.size(), 0);
    for (const auto &[user, slice] : part.users) {
        for (auto i : slice.train) {
            CHECK(split.train[i].user == user);
            ++train_seen[i];
        }
        for (auto i : slice.val) {
            CHECK(split.val[i].user == user);
            ++val_seen[i];
        }
    }
    CHECK(std::all_of(train_seen.begin(), train_seen.end(), [](int c) { return c == 1; }));
    CHECK(std::all_of(val_seen.begin(), val_seen.end(), [](int c) { return c == 1; }));
    CHECK(users_of(split).size() == 25);
}

TEST_CASE("vocabulary covers every dataset token") {
    SynthOptions opts;
    opts.num_users = 5;
    const auto log = synth_generate(opts);
    const Vocab vocab = build_vocab(log);
    for (const auto &[u, records] : log.users) {
        CHECK(vocab.find(u).has_value());
        for (const auto &r : records) {
            CHECK(vocab.find(r.item).has_value());
        }
    }
    for (const auto &w : builtin_words()) {
        CHECK(vocab.find(w).has_value());
    }
}
