#include <doctest.h>

#include <filesystem>

#include "promptforge/errors.hpp"
#include "promptforge/prompt.hpp"
#include "promptforge/vocab.hpp"

using namespace promptforge;

namespace {

Vocab small_vocab() {
    Vocab v;
    for (const char *t : {"user_1", "user_2", "item_1", "item_2", "item_3", "next", "buy", "soon", "brand", "lotion"}) {
        v.add(t);
    }
    return v;
}

} // namespace

TEST_CASE("vocabulary reserves specials and round-trips") {
    Vocab v = small_vocab();
    CHECK(v.id("<pad>") == kPadId);
    CHECK(v.id("</s>") == kEosId);
    CHECK(v.id(":") == kSepId);
    CHECK(v.id("?") == kDefaultTriggerId);
    CHECK(v.add("next") == v.id("next"));
    CHECK_THROWS_AS(v.id("missing"), VocabError);
    CHECK_FALSE(v.find("missing").has_value());
    CHECK(v.decode(v.encode("user_1 : item_2  next")) == "user_1 : item_2 next");
    CHECK_THROWS_AS(v.encode("user_1 zzz"), VocabError);

    const auto path = std::filesystem::temp_directory_path() / "promptforge_vocab.txt";
    v.save(path);
    const Vocab back = Vocab::load(path);
    CHECK(back.tokens() == v.tokens());
}

TEST_CASE("suffix rendering places args first and triggers last") {
    const Vocab v = small_vocab();
    PromptTemplate t;
    t.num_task_slots = 3;
    TaskArgs args{v.id("user_1"), {v.id("item_1"), v.id("item_2")}, {}, std::nullopt};
    TriggerAssignment a{{v.id("next"), v.id("buy"), v.id("soon")}, {}};
    const auto s = render(t, args, a);
    CHECK(v.decode(s.ids) == "user_1 : item_1 item_2 next buy soon");
    CHECK(s.trigger_positions == std::vector<std::size_t>{4, 5, 6});
    CHECK_FALSE(s.user_position.has_value());
    CHECK_NOTHROW(s.validate());
}

TEST_CASE("trigger placements") {
    const Vocab v = small_vocab();
    TaskArgs args{v.id("user_1"), {v.id("item_1")}, {}, std::nullopt};
    TriggerAssignment a{{v.id("next"), v.id("buy"), v.id("soon")}, {}};
    PromptTemplate t;
    t.num_task_slots = 3;
    t.placement = TriggerPlacement::PrefixOnly;
    CHECK(v.decode(render(t, args, a).ids) == "next buy soon user_1 : item_1");
    t.placement = TriggerPlacement::PrefixAndSuffix;
    const auto s = render(t, args, a);
    CHECK(v.decode(s.ids) == "next buy user_1 : item_1 soon");
    CHECK(s.trigger_positions == std::vector<std::size_t>{0, 1, 5});
}

TEST_CASE("user slot placements and default user token") {
    const Vocab v = small_vocab();
    TaskArgs args{v.id("user_2"), {v.id("item_1")}, {}, std::nullopt};
    PromptTemplate t;
    t.num_task_slots = 2;
    t.has_user_slot = true;
    const std::vector<TokenId> users{v.id("user_1"), v.id("user_2")};
    TriggerAssignment a = default_assignment(t, v, users);
    CHECK(a.task_tokens == std::vector<TokenId>{kDefaultTriggerId, kDefaultTriggerId});
    CHECK(a.user_tokens.size() == 2);
    a.task_tokens = {v.id("next"), v.id("buy")};
    a.user_tokens[v.id("user_2")] = v.id("lotion");

    t.user_slot_placement = UserSlotPlacement::AfterTriggers;
    auto s = render(t, args, a);
    CHECK(v.decode(s.ids) == "user_2 : item_1 next buy lotion");
    CHECK(*s.user_position == 5);
    t.user_slot_placement = UserSlotPlacement::BeforeArgs;
    CHECK(v.decode(render(t, args, a).ids) == "lotion user_2 : item_1 next buy");
    t.user_slot_placement = UserSlotPlacement::BetweenArgsAndTriggers;
    CHECK(v.decode(render(t, args, a).ids) == "user_2 : item_1 lotion next buy");
    t.placement = TriggerPlacement::PrefixOnly;
    CHECK(v.decode(render(t, args, a).ids) == "next buy lotion user_2 : item_1");

    // unknown users fall back to "?"
    TriggerAssignment empty{{v.id("next"), v.id("buy")}, {}};
    t.placement = TriggerPlacement::SuffixOnly;
    t.user_slot_placement = UserSlotPlacement::AfterTriggers;
    CHECK(render(t, args, empty).ids.back() == kDefaultTriggerId);
}

TEST_CASE("render validates its inputs") {
    const Vocab v = small_vocab();
    PromptTemplate t;
    t.num_task_slots = 2;
    TaskArgs args{v.id("user_1"), {v.id("item_1")}, {}, std::nullopt};
    CHECK_THROWS_AS(render(t, args, TriggerAssignment{{kDefaultTriggerId}, {}}), ArgumentError);
    t.num_task_slots = 0;
    CHECK_THROWS_AS(t.validate(), ArgumentError);
    t.num_task_slots = 1;
    t.task_kind = TaskKind::Explanation;
    CHECK_THROWS_AS(render(t, args, TriggerAssignment{{kDefaultTriggerId}, {}}), ArgumentError);
    args.item_title = {v.id("brand"), v.id("lotion")};
    CHECK(v.decode(render(t, args, TriggerAssignment{{kDefaultTriggerId}, {}}).ids) == "user_1 : brand lotion ?");
}

TEST_CASE("token sequence validation") {
    TokenSequence s{{4, 5, 6}, {1, 2}, std::nullopt};
    CHECK_NOTHROW(s.validate());
    s.trigger_positions = {2, 1};
    CHECK_THROWS_AS(s.validate(), IndexError);
    s.trigger_positions = {3};
    CHECK_THROWS_AS(s.validate(), IndexError);
    s.trigger_positions = {1};
    s.user_position = 1;
    CHECK_THROWS_AS(s.validate(), IndexError);
}

TEST_CASE("enum text round-trips") {
    for (auto k : {TaskKind::Sequential, TaskKind::Matching, TaskKind::Explanation}) {
        CHECK(parse_task_kind(to_string(k)) == k);
    }
    for (auto p : {TriggerPlacement::SuffixOnly, TriggerPlacement::PrefixOnly, TriggerPlacement::PrefixAndSuffix}) {
        CHECK(parse_placement(to_string(p)) == p);
    }
    for (auto p : {UserSlotPlacement::BeforeArgs, UserSlotPlacement::BetweenArgsAndTriggers,
                   UserSlotPlacement::AfterTriggers}) {
        CHECK(parse_user_slot_placement(to_string(p)) == p);
    }
    CHECK_THROWS_AS(parse_task_kind("rating"), ArgumentError);
}

TEST_CASE("assignment checkpoint round-trips") {
    const Vocab v = small_vocab();
    PromptTemplate t;
    t.num_task_slots = 3;
    t.has_user_slot = true;
    t.placement = TriggerPlacement::PrefixAndSuffix;
    t.user_slot_placement = UserSlotPlacement::BeforeArgs;
    TriggerAssignment a{{v.id("next"), kDefaultTriggerId, v.id("soon")},
                        {{v.id("user_1"), v.id("lotion")}, {v.id("user_2"), kDefaultTriggerId}}};
    const std::string text = format_assignment(t, a, v);
    CHECK(text.find("task: next ? soon\n") != std::string::npos);
    CHECK(text.find("user user_1: lotion\n") != std::string::npos);
    const auto loaded = parse_assignment(text, v);
    CHECK(loaded.tmpl == t);
    CHECK(loaded.assignment == a);

    const auto path = std::filesystem::temp_directory_path() / "promptforge_assignment.txt";
    save_assignment(path, t, a, v);
    CHECK(load_assignment(path, v).assignment == a);
}

TEST_CASE("assignment parse errors carry line numbers") {
    const Vocab v = small_vocab();
    try {
        parse_assignment("task_kind: sequential\nnum_task_slots: 2\nplacement: suffix_only\nuser_slot: none\n"
                         "task: next zzz\n",
                         v);
        FAIL("expected parse error");
    } catch (const ParseError &e) {
        CHECK(e.line() == 5);
    }
    CHECK_THROWS_AS(parse_assignment("task_kind: sequential\nnum_task_slots: 3\nplacement: suffix_only\n"
                                     "user_slot: none\ntask: next buy\n",
                                     v),
                    ParseError);
    CHECK_THROWS_AS(parse_assignment("garbage\n", v), ParseError);
}
