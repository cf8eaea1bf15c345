#include <sstream>

#include <json.hpp>

#include "promptforge/search.hpp"

namespace promptforge {

namespace {

using Json = nlohmann::ordered_json;

Json metrics_json(const MetricsReport &report) {
    Json values = Json::object();
    for (const auto &[name, value] : report.values) {
        values[name] = value;
    }
    return Json{{"metrics", values}, {"surrogate", report.surrogate}};
}

std::string token_text(const Vocab &vocab, TokenId id) {
    return id >= 0 && static_cast<std::size_t>(id) < vocab.size() ? vocab.token(id) : std::to_string(id);
}

} // namespace

std::string format_search_report(const SearchResult &result, const Vocab &vocab) {
    std::ostringstream out;
    Json init{{"record", "init"}, {"epoch", 0}, {"val", metrics_json(result.initial_val)}};
    out << init.dump() << '\n';
    for (const auto &log : result.log) {
        Json rec;
        rec["record"] = "epoch";
        rec["epoch"] = log.epoch;
        rec["kind"] = log.kind == EpochKind::TaskTokenEpoch ? "task" : "user";
        if (log.position.kind == SlotRef::Kind::Task) {
            rec["position"] = log.position.index;
        } else {
            rec["position"] = token_text(vocab, static_cast<TokenId>(log.position.index));
        }
        rec["old_token"] = token_text(vocab, log.old_token);
        rec["new_token"] = token_text(vocab, log.chosen_token);
        rec["criterion_score"] = log.criterion_score;
        Json cands = Json::array();
        for (const auto &[tok, score] : log.candidates) {
            cands.push_back(Json{{"token", token_text(vocab, tok)}, {"score", score}});
        }
        rec["candidates"] = cands;
        rec["val"] = metrics_json(log.val_metrics);
        out << rec.dump() << '\n';
    }
    Json best{{"record", "best"}, {"epoch", result.best.epoch}, {"val_score", result.best.val_score}};
    out << best.dump() << '\n';
    return out.str();
}

} // namespace promptforge
