#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/pipeline.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/search.hpp"

using namespace promptforge;

namespace {

std::vector<std::pair<TokenId, double>> brute_top_k(const Matrix &table, const Vector &g, std::size_t k,
                                                    const std::set<TokenId> &exclude) {
    std::vector<std::pair<TokenId, double>> all;
    for (Eigen::Index t = 0; t < table.rows(); ++t) {
        const auto id = static_cast<TokenId>(t);
        if (id < kNumSpecials || exclude.contains(id)) {
            continue;
        }
        double s = 0.0;
        for (Eigen::Index j = 0; j < table.cols(); ++j) {
            s -= table(t, j) * g(j);
        }
        all.emplace_back(id, s);
    }
    std::stable_sort(all.begin(), all.end(), [](const auto &a, const auto &b) { return a.second > b.second; });
    all.resize(k);
    return all;
}

const fixtures::TinyPipeline &pipeline() {
    static const fixtures::TinyPipeline p = fixtures::tiny_pipeline();
    return p;
}

SearchConfig quick_config(std::size_t epochs) {
    SearchConfig c;
    c.max_epochs = epochs;
    c.k = 3;
    c.seed = 4;
    return c;
}

} // namespace

TEST_CASE("candidate tokens equal brute-force top-k including ties") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> coarse(-2, 2);
    for (int trial = 0; trial < 20; ++trial) {
        // coarse integer entries force many exact score ties
        Matrix table(60, 4);
        for (Eigen::Index r = 0; r < table.rows(); ++r) {
            for (Eigen::Index c = 0; c < table.cols(); ++c) {
                table(r, c) = coarse(rng);
            }
        }
        Vector g(4);
        for (Eigen::Index c = 0; c < 4; ++c) {
            g(c) = coarse(rng);
        }
        const std::set<TokenId> exclude{7, 8};
        for (std::size_t k : {1, 5, 10}) {
            const auto got = candidate_tokens(g, ConstMatrixMap(table.data(), 60, 4), k, exclude);
            CHECK(got.entries == brute_top_k(table, g, k, exclude));
        }
    }
}

TEST_CASE("candidate token errors") {
    Matrix table = Matrix::Ones(6, 2);
    Vector g = Vector::Ones(2);
    const ConstMatrixMap view(table.data(), 6, 2);
    CHECK(candidate_tokens(g, view, 2).entries.size() == 2);
    CHECK_THROWS_AS(candidate_tokens(g, view, 0), ArgumentError);
    CHECK_THROWS_AS(candidate_tokens(g, view, 3), ArgumentError);
    CHECK_THROWS_AS(candidate_tokens(g, view, 1, {4, 5}), ArgumentError);
    CHECK_THROWS_AS(candidate_tokens(Vector::Ones(3), view, 1), ArgumentError);
}

TEST_CASE("first-order approximation tracks the true loss change") {
    const auto c = fixtures::toy_config(32, 8, 2, 6);
    const auto model = fixtures::jittered_model(c);
    const TokenSequence input{{4, 5, 6, 7}, {3}, std::nullopt};
    const std::vector<TokenId> target{8, kEosId};
    const Vector g = model.input_embedding_gradients(input, target, std::vector<std::size_t>{3}).front();
    const Matrix base = model.input_embeddings(input);
    const double l0 = model.forward_loss_embedded(base, target);
    double prev = 1e300;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const Vector delta = -eps * g.normalized();
        Matrix moved = base;
        moved.row(3) += delta.transpose();
        const double truth = model.forward_loss_embedded(moved, target) - l0;
        const Vector e_old = base.row(3).transpose();
        const double approx = approx_loss_change(g, e_old, e_old + delta);
        const double ratio = std::abs(truth - approx) / eps;
        CHECK(ratio < prev);
        prev = ratio;
    }
    CHECK_THROWS_AS(approx_loss_change(g, Vector::Zero(2), Vector::Zero(2)), ArgumentError);
}

TEST_CASE("task gradient is the sum of per-instance slot gradients") {
    const auto &p = pipeline();
    PromptTemplate t;
    t.num_task_slots = 3;
    const auto a = default_assignment(t, p.vocab, {});
    const std::span<const TaskInstance> data(p.split.train.data(), 5);
    Vector manual = Vector::Zero(16);
    for (const auto &inst : data) {
        const auto s = render(t, inst.args, a);
        manual += p.model.input_embedding_gradients(s, decoder_target(inst), std::span(&s.trigger_positions[1], 1))
                      .front();
    }
    CHECK((accumulate_task_gradient(p.model, data, t, a, 1) - manual).norm() < 1e-12);
    const Vector sub = accumulate_task_gradient(p.model, data, t, a, 1, 2, 3);
    CHECK((sub - accumulate_task_gradient(p.model, data, t, a, 1, 2, 3)).norm() == 0.0);
    CHECK((sub - manual).norm() > 0.0);
    CHECK_THROWS_AS(accumulate_task_gradient(p.model, data, t, a, 3), IndexError);
    CHECK_THROWS_AS(accumulate_user_gradient(p.model, data, t, a), ArgumentError);
}

TEST_CASE("criteria are higher-is-better and consistent with evaluation") {
    const auto &p = pipeline();
    PromptTemplate t;
    t.num_task_slots = 2;
    const auto a = default_assignment(t, p.vocab, {});
    const auto cfg = quick_config(1);
    double total = 0.0;
    for (const auto &inst : p.split.val) {
        total += p.model.forward_loss(render(t, inst.args, a), decoder_target(inst));
    }
    CHECK(evaluate_criterion(Criterion::TrainLoss, p.model, p.split.val, t, a, cfg, p.ctx) ==
          doctest::Approx(-total / static_cast<double>(p.split.val.size())));
    MetricsReport rep;
    const double s = evaluate_criterion(Criterion::SurrogateMetric, p.model, p.split.val, t, a, cfg, p.ctx, &rep);
    CHECK(s == rep.surrogate);
    CHECK(s == doctest::Approx(rep.at("HR@5") + rep.at("NDCG@5")));
    CHECK(validation_report(p.model, p.split.val, t, a, cfg, p.ctx) == rep);
    const double full = evaluate_criterion(Criterion::FullMetric, p.model, p.split.val, t, a, cfg, p.ctx, &rep);
    CHECK(full == doctest::Approx(rep.at("HR@5") + rep.at("NDCG@5") + rep.at("HR@10") + rep.at("NDCG@10")));
    CHECK(parse_criterion("train_loss") == Criterion::TrainLoss);
    CHECK_THROWS_AS(parse_criterion("bogus"), ArgumentError);
}

TEST_CASE("task update picks the criterion argmax over candidates and incumbent") {
    const auto &p = pipeline();
    PromptTemplate t;
    t.num_task_slots = 2;
    const auto a = default_assignment(t, p.vocab, {});
    const auto cfg = quick_config(1);
    const SearchSplits splits{p.split.train, p.split.val};
    std::mt19937_64 rng(11);
    const auto up = update_task_token(p.model, splits, t, a, cfg, p.ctx, rng);
    const std::size_t slot = up.log.position.index;
    CHECK(up.log.old_token == kDefaultTriggerId);
    CHECK(up.log.candidates.size() == 3);

    double best = -1e300;
    TokenId best_tok = -1;
    std::vector<TokenId> tokens{kDefaultTriggerId};
    for (const auto &[tok, s] : up.log.candidates) {
        tokens.push_back(tok);
    }
    std::sort(tokens.begin(), tokens.end());
    for (TokenId tok : tokens) {
        auto trial = a;
        trial.task_tokens[slot] = tok;
        const double s = evaluate_criterion(cfg.criterion, p.model, p.split.val, t, trial, cfg, p.ctx);
        if (s > best) {
            best = s;
            best_tok = tok;
        }
    }
    CHECK(up.log.chosen_token == best_tok);
    CHECK(up.log.criterion_score == best);
    CHECK(up.assignment.task_tokens[slot] == best_tok);
}

TEST_CASE("non-personalized search is monotone in its checkpoint and deterministic") {
    const auto &p = pipeline();
    PromptTemplate t;
    t.num_task_slots = 3;
    const auto init = default_assignment(t, p.vocab, {});
    const auto cfg = quick_config(6);
    const SearchSplits splits{p.split.train, p.split.val};
    const auto r1 = run_search(p.model, splits, t, init, cfg, p.ctx);
    const auto r2 = run_search(p.model, splits, t, init, cfg, p.ctx);
    CHECK(r1.log.size() == 6);
    CHECK(r1.val_curve.size() == 7);
    CHECK(std::all_of(r1.log.begin(), r1.log.end(), [](const EpochLog &l) { return l.kind == EpochKind::TaskTokenEpoch; }));
    // with the incumbent always eligible the validation score never drops
    for (std::size_t i = 1; i < r1.val_curve.size(); ++i) {
        CHECK(r1.val_curve[i] >= r1.val_curve[i - 1]);
    }
    CHECK(r1.best.val_score >= r1.val_curve.front());
    CHECK(r1.best.val_score == *std::max_element(r1.val_curve.begin(), r1.val_curve.end()));
    CHECK(validation_report(p.model, p.split.val, t, r1.best.assignment, cfg, p.ctx).surrogate == r1.best.val_score);
    CHECK(format_search_report(r1, p.vocab) == format_search_report(r2, p.vocab));
    CHECK(r1.best.assignment == r2.best.assignment);
}

TEST_CASE("personalized search alternates task and user epochs") {
    const auto &p = pipeline();
    PromptTemplate t;
    t.num_task_slots = 2;
    t.has_user_slot = true;
    const auto users = users_of(p.split);
    const auto init = default_assignment(t, p.vocab, users);
    auto cfg = quick_config(4);
    cfg.k = 2;
    const auto r = run_search(p.model, SearchSplits{p.split.train, p.split.val}, t, init, cfg, p.ctx);
    std::size_t task_epochs = 0, user_logs = 0;
    for (const auto &log : r.log) {
        if (log.kind == EpochKind::TaskTokenEpoch) {
            CHECK(log.epoch % 2 == 1);
            ++task_epochs;
        } else {
            CHECK(log.epoch % 2 == 0);
            CHECK(log.position.kind == SlotRef::Kind::User);
            ++user_logs;
        }
    }
    CHECK(task_epochs == 2);
    CHECK(user_logs == 2 * users.size());
    for (std::size_t i = 1; i < r.val_curve.size(); ++i) {
        CHECK(r.best.val_score >= r.val_curve[i]);
    }
}

TEST_CASE("user update evaluates each user on their own validation slice") {
    const auto &p = pipeline();
    PromptTemplate t;
    t.num_task_slots = 1;
    t.has_user_slot = true;
    const auto users = users_of(p.split);
    const auto a = default_assignment(t, p.vocab, users);
    auto cfg = quick_config(1);
    cfg.k = 2;
    const auto up = update_user_tokens(p.model, SearchSplits{p.split.train, p.split.val}, t, a, cfg, p.ctx);
    const auto part = partition_by_user(p.split);
    REQUIRE(!up.logs.empty());
    const auto &log = up.logs.front();
    const auto user = static_cast<TokenId>(log.position.index);
    std::vector<TaskInstance> val_u;
    for (auto i : part.users.at(user).val) {
        val_u.push_back(p.split.val[i]);
    }
    auto trial = a;
    trial.user_tokens[user] = log.chosen_token;
    CHECK(evaluate_criterion(cfg.criterion, p.model, val_u, t, trial, cfg, p.ctx) == log.criterion_score);
    CHECK(up.assignment.user_token(user) == log.chosen_token);
    CHECK(std::is_sorted(up.logs.begin(), up.logs.end(),
                         [](const EpochLog &x, const EpochLog &y) { return x.position.index < y.position.index; }));
}

TEST_CASE("search configuration validation") {
    SearchConfig c;
    CHECK_NOTHROW(c.validate());
    c.max_epochs = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.k = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.surrogate_beam = 30;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}
