#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "promptforge/cli.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/weights.hpp"

using namespace promptforge;
namespace fs = std::filesystem;

namespace {

const char *kTinyConfig = R"(
[data]
num_users = 16
num_items = 24
min_len = 5
max_len = 7
[model]
embed_dim = 8
encoder_layers = 1
decoder_layers = 1
num_heads = 2
ff_dim = 16
[train]
epochs = 2
variants = 1
tasks = sequential
[prompt]
length_sweep = 2, 3
[search]
k = 2
max_epochs = 3
[eval]
repeats = 2
)";

fs::path fresh_dir(const std::string &name) {
    const auto dir = fs::temp_directory_path() / "promptforge_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

RunConfig tiny(const fs::path &dir) {
    RunConfig c = parse_run_config(kTinyConfig);
    c.out_dir = dir;
    return c;
}

} // namespace

TEST_CASE("config parsing, defaults and seed derivation") {
    const RunConfig d = parse_run_config("");
    CHECK(d.search.k == 5);
    CHECK(d.search.max_epochs == 50);
    CHECK(d.search.surrogate_beam == 5);
    CHECK(d.search.test_beam == 20);
    CHECK(d.search.alpha == 1.0);
    CHECK(d.tmpl.num_task_slots == 5);
    CHECK(d.length_sweep == std::vector<std::size_t>{5, 6});
    CHECK(d.eval_beam == 20);
    CHECK_NOTHROW(d.validate());

    const RunConfig e = parse_run_config("[prompt]\ntask = explanation\n[run]\nseed = 7 # trailing comment\n");
    CHECK(e.search.alpha == 0.1);
    CHECK(e.seed == 7);
    CHECK(e.synth.seed == 7);
    CHECK(e.search.seed != e.train.seed);

    const RunConfig f = parse_run_config("[search]\nalpha = 0.5\ncriterion = train_loss\n[prompt]\ntask = explanation\n");
    CHECK(f.search.alpha == 0.5);
    CHECK(f.search.criterion == Criterion::TrainLoss);
}

TEST_CASE("config errors") {
    try {
        parse_run_config("[search]\nk = 5\nbogus = 1\n");
        FAIL("expected parse error");
    } catch (const ParseError &e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_run_config("[search]\nk = five\n"), ParseError);
    CHECK_THROWS_AS(parse_run_config("[search\n"), ParseError);
    CHECK_THROWS_AS(parse_run_config("[search]\ncriterion = vibes\n"), ParseError);
    CHECK_THROWS_AS(parse_run_config("[search]\nmax_epochs = 0\n").validate(), ValidationError);
    CHECK_THROWS_AS(parse_run_config("[eval]\nbeam = 5\n").validate(), ValidationError);
    CHECK_NOTHROW(parse_run_config("[eval]\nbeam = 5\nmax_k = 5\n").validate());
    CHECK_THROWS_AS(parse_run_config("[ablate]\nvariant = colour\n"), ParseError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/run.ini"), IoError);
}

TEST_CASE("ablation sweeps default to the tested settings") {
    CHECK(default_sweep(AblationVariant::TriggerPosition).size() == 3);
    CHECK(default_sweep(AblationVariant::PromptLength) == std::vector<std::string>{"3", "4", "5", "6", "7"});
    CHECK(default_sweep(AblationVariant::SelectionCriterion) == std::vector<std::string>{"train_loss", "surrogate"});
    CHECK(parse_ablation_variant("user_token_position") == AblationVariant::UserTokenPosition);
}

TEST_CASE("full command pipeline on a tiny fixture") {
    const auto dir = fresh_dir("pipeline");
    RunConfig c = tiny(dir);
    std::ostringstream log;

    cmd_synth(c, log);
    const std::string first = slurp(c.interactions_path());
    cmd_synth(c, log);
    CHECK(slurp(c.interactions_path()) == first);

    cmd_train_backbone(c, log);
    CHECK(fs::exists(c.weights_path()));
    CHECK(fs::exists(c.run_dir("train-backbone") / "loss_curve.tsv"));

    cmd_search(c, log);
    const auto report = slurp(c.run_dir("search") / "search_report.jsonl");
    const auto ckpt = slurp(c.run_dir("search") / "checkpoint.txt");
    CHECK(report.find("\"length\":2") != std::string::npos);
    CHECK(report.find("\"length\":3") != std::string::npos);
    cmd_search(c, log);
    CHECK(slurp(c.run_dir("search") / "search_report.jsonl") == report);
    CHECK(slurp(c.run_dir("search") / "checkpoint.txt") == ckpt);

    // evaluating the checkpoint on validation at the surrogate beam reproduces the logged best score
    RunConfig v = c;
    v.eval_split = "val";
    v.eval_beam = 5;
    v.eval_max_k = 5;
    v.eval_repeats = 3;
    cmd_eval(v, log);
    const auto metrics = slurp(v.run_dir("eval") / "metrics_val.tsv");
    // the sweep keeps the better of the per-length best records
    double logged = -1.0;
    const std::string key = "\"val_score\":";
    for (auto pos = report.find(key); pos != std::string::npos; pos = report.find(key, pos + 1)) {
        logged = std::max(logged, std::stod(report.substr(pos + key.size())));
    }
    const std::string prefix = "searched\tval\t5\t3\tsurrogate\t";
    const auto row = metrics.find(prefix);
    REQUIRE(row != std::string::npos);
    CHECK(std::stod(metrics.substr(row + prefix.size())) == logged);
    CHECK(metrics.find("manual\t") != std::string::npos);
    CHECK(metrics.find("default\t") != std::string::npos);

    cmd_eval(c, log);
    CHECK(fs::exists(c.run_dir("eval") / "metrics_test.tsv"));

    RunConfig wrong = c;
    wrong.tmpl.task_kind = TaskKind::Matching;
    CHECK_THROWS_AS(cmd_eval(wrong, log), ValidationError);

    RunConfig ab = c;
    ab.ablation.variant = AblationVariant::TriggerPosition;
    cmd_ablate(ab, log);
    const auto table = slurp(ab.run_dir("ablate") / "ablation_trigger_position.tsv");
    CHECK(table.rfind("trigger_position\tHR@5\tNDCG@5\tHR@10\tNDCG@10\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 4);
}

TEST_CASE("commands fail cleanly on missing inputs") {
    const auto dir = fresh_dir("missing");
    RunConfig c = tiny(dir);
    std::ostringstream log;
    CHECK_THROWS_AS(cmd_train_backbone(c, log), IoError);
    RunConfig bad = c;
    bad.search.max_epochs = 0;
    CHECK_THROWS_AS(cmd_search(bad, log), ValidationError);
}

#ifdef PROMPTFORGE_CLI_PATH
TEST_CASE("executable exit codes") {
    const auto dir = fresh_dir("exit");
    const auto cfg = dir / "run.ini";
    std::ofstream(cfg) << kTinyConfig;
    const std::string exe = PROMPTFORGE_CLI_PATH;
    auto run = [&](const std::string &args) {
        const int status = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("synth --config " + cfg.string() + " --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "data" / "interactions.tsv"));
    // no weights yet: runtime error
    CHECK(run("search --config " + cfg.string() + " --out " + dir.string()) == 2);
    const auto bad = dir / "bad.ini";
    std::ofstream(bad) << "[search]\nmax_epochs = 0\n";
    CHECK(run("search --config " + bad.string() + " --out " + dir.string()) == 1);
    CHECK(run("frobnicate --config " + cfg.string()) == 1);
    CHECK(run("synth") == 1);
}
#endif
