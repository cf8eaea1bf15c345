#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "promptforge/cli.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/weights.hpp"

namespace promptforge {

namespace {

std::string number_text(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path &path, const std::string &text) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) {
        throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) {
        throw IoError("cannot write " + path.string());
    }
}

void ensure_dir(const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

FrozenSeq2Seq load_backbone(const RunConfig &config, const Vocab &vocab) {
    FrozenSeq2Seq model = load_weights(config.weights_path());
    if (model.config().vocab_size != vocab.size()) {
        throw ValidationError("weight file vocabulary size " + std::to_string(model.config().vocab_size) +
                              " does not match the dataset vocabulary (" + std::to_string(vocab.size()) + ")");
    }
    return model;
}

bool is_text(TaskKind kind) { return kind == TaskKind::Explanation; }

std::vector<std::string> table_columns(TaskKind kind) {
    if (is_text(kind)) {
        return {"BLEU-4", "ROUGE-1", "ROUGE-2", "ROUGE-L"};
    }
    return {"HR@5", "NDCG@5", "HR@10", "NDCG@10"};
}

} // namespace

LoadedData load_data(const RunConfig &config) {
    LoadedData data;
    data.log = load_interactions(config.interactions_path());
    if (std::filesystem::exists(config.titles_path())) {
        load_item_titles(config.titles_path(), data.log);
    }
    data.vocab = build_vocab(data.log);
    data.split = leave_one_out_split(data.log, data.vocab, config.tmpl.task_kind, config.split);
    data.ctx = EvalContext::from_split(data.split, data.vocab.size());
    return data;
}

std::vector<TaskInstance> backbone_instances(const RunConfig &config, const InteractionLog &log, const Vocab &vocab) {
    std::vector<TaskInstance> out;
    for (TaskKind kind : config.backbone_tasks) {
        SplitOptions opts = config.split;
        if (kind == TaskKind::Matching) {
            opts.num_negatives = config.backbone_negatives;
        }
        auto split = leave_one_out_split(log, vocab, kind, opts);
        out.insert(out.end(), split.train.begin(), split.train.end());
    }
    return out;
}

SearchOutcome search_prompt(const RunConfig &config, const FrozenSeq2Seq &model, const LoadedData &data) {
    std::vector<std::size_t> lengths = config.length_sweep;
    if (config.tmpl.has_user_slot) {
        lengths = {config.tmpl.num_task_slots};
    }
    const auto users = users_of(data.split);
    const SearchSplits splits{data.split.train, data.split.val};

    std::optional<SearchOutcome> best;
    std::string report;
    for (std::size_t l : lengths) {
        PromptTemplate tmpl = config.tmpl;
        tmpl.num_task_slots = l;
        const TriggerAssignment initial = default_assignment(tmpl, data.vocab, users);
        SearchResult result = run_search(model, splits, tmpl, initial, config.search, data.ctx);
        report += "{\"record\":\"run\",\"length\":" + std::to_string(l) + "}\n";
        report += format_search_report(result, data.vocab);
        if (!best || result.best.val_score > best->result.best.val_score) {
            best = SearchOutcome{tmpl, std::move(result), {}};
        }
    }
    best->report = std::move(report);
    return std::move(*best);
}

std::span<const TaskInstance> eval_split(const SplitDataset &split, std::string_view name) {
    if (name == "train") {
        return split.train;
    }
    if (name == "val") {
        return split.val;
    }
    if (name == "test") {
        return split.test;
    }
    throw ArgumentError("unknown split '" + std::string(name) + "'");
}

MetricsReport evaluate_assignment(const RunConfig &config, const FrozenSeq2Seq &model, const LoadedData &data,
                                  const PromptTemplate &tmpl, const TriggerAssignment &assignment,
                                  std::string_view split_name) {
    EvalOptions options;
    options.beam = config.eval_beam;
    options.max_k = config.eval_max_k;
    options.repeats = config.eval_repeats;
    options.seed = config.seed;
    options.alpha = config.search.alpha;
    return evaluate_prompt(model, eval_split(data.split, split_name), tmpl, assignment, options, data.ctx);
}

std::string format_metrics(const MetricsReport &report, TaskKind kind, std::string_view label,
                           std::string_view split_name, std::size_t beam, std::size_t repeats) {
    std::ostringstream out;
    const std::string prefix = std::string(label) + '\t' + std::string(split_name) + '\t' + std::to_string(beam) +
                               '\t' + std::to_string(repeats) + '\t';
    const double scale = is_text(kind) ? 100.0 : 1.0;
    for (const auto &[name, value] : report.values) {
        out << prefix << name << '\t' << number_text(value * scale) << '\n';
    }
    out << prefix << "surrogate" << '\t' << number_text(report.surrogate) << '\n';
    return out.str();
}

void cmd_synth(const RunConfig &config, std::ostream &log) {
    config.validate();
    const InteractionLog data = synth_generate(config.synth);
    ensure_dir(config.resolve(config.data_dir));
    write_interactions(data, config.interactions_path());
    write_item_titles(data, config.titles_path());
    log << "users " << data.users.size() << ", items " << data.item_titles.size() << ", records "
        << data.num_records() << '\n'
        << "wrote " << config.interactions_path().string() << '\n';
}

void cmd_train_backbone(const RunConfig &config, std::ostream &log) {
    config.validate();
    const LoadedData data = load_data(config);
    const auto instances = backbone_instances(config, data.log, data.vocab);
    ModelConfig model_config = config.model;
    model_config.vocab_size = data.vocab.size();
    log << "vocabulary " << data.vocab.size() << ", training instances " << instances.size() << '\n';

    TrainResult trained = train_backbone(instances, data.vocab, model_config, config.train, config.bootstrap,
                                         [&](std::size_t epoch, double loss) {
                                             log << "epoch " << epoch << " loss " << number_text(loss) << '\n';
                                         });
    ensure_dir(config.weights_path().parent_path());
    save_weights(trained.model, config.weights_path());

    std::string curve = "epoch\tmean_loss\n";
    for (std::size_t e = 0; e < trained.loss_curve.size(); ++e) {
        curve += std::to_string(e) + '\t' + number_text(trained.loss_curve[e]) + '\n';
    }
    write_text(config.run_dir("train-backbone") / "loss_curve.tsv", curve);
    log << "wrote " << config.weights_path().string() << '\n';
}

void cmd_search(const RunConfig &config, std::ostream &log) {
    config.validate();
    const LoadedData data = load_data(config);
    const FrozenSeq2Seq model = load_backbone(config, data.vocab);
    const SearchOutcome outcome = search_prompt(config, model, data);

    const auto dir = config.run_dir("search");
    write_text(dir / "search_report.jsonl", outcome.report);
    ensure_dir(dir);
    save_assignment(dir / "checkpoint.txt", outcome.tmpl, outcome.result.best.assignment, data.vocab);
    log << "best length " << outcome.tmpl.num_task_slots << ", epoch " << outcome.result.best.epoch
        << ", validation score " << number_text(outcome.result.best.val_score) << " (initial "
        << number_text(outcome.result.initial_val.surrogate) << ")\n"
        << "wrote " << (dir / "checkpoint.txt").string() << '\n';
}

void cmd_eval(const RunConfig &config, std::ostream &log) {
    config.validate();
    const LoadedData data = load_data(config);
    const LoadedAssignment loaded = load_assignment(config.checkpoint_path(), data.vocab);
    if (loaded.tmpl.task_kind != config.tmpl.task_kind) {
        throw ValidationError("checkpoint task '" + std::string(to_string(loaded.tmpl.task_kind)) +
                              "' does not match configured task '" + std::string(to_string(config.tmpl.task_kind)) +
                              "'");
    }
    const FrozenSeq2Seq model = load_backbone(config, data.vocab);
    const auto users = users_of(data.split);

    struct Row {
        std::string label;
        TriggerAssignment assignment;
    };
    const std::vector<Row> rows = {
        {"searched", loaded.assignment},
        {"manual", manual_assignment(loaded.tmpl, data.vocab)},
        {"default", default_assignment(loaded.tmpl, data.vocab, users)},
    };
    std::string text = "prompt\tsplit\tbeam\trepeats\tmetric\tvalue\n";
    for (const auto &row : rows) {
        const MetricsReport report =
            evaluate_assignment(config, model, data, loaded.tmpl, row.assignment, config.eval_split);
        text += format_metrics(report, loaded.tmpl.task_kind, row.label, config.eval_split, config.eval_beam,
                               config.eval_repeats);
    }
    const auto path = config.run_dir("eval") / ("metrics_" + config.eval_split + ".tsv");
    write_text(path, text);
    log << text << "wrote " << path.string() << '\n';
}

void cmd_ablate(const RunConfig &config, std::ostream &log) {
    config.validate();
    const LoadedData base_data = load_data(config);
    const FrozenSeq2Seq model = load_backbone(config, base_data.vocab);
    const AblationSpec &spec = config.ablation;
    const auto values = spec.values.empty() ? default_sweep(spec.variant) : spec.values;
    const auto columns = table_columns(config.tmpl.task_kind);

    std::string table = std::string(to_string(spec.variant));
    for (const auto &c : columns) {
        table += '\t' + c;
    }
    table += '\n';
    for (const auto &value : values) {
        RunConfig run = config;
        run.length_sweep = {config.tmpl.num_task_slots};
        switch (spec.variant) {
        case AblationVariant::TriggerPosition:
            run.tmpl.placement = parse_placement(value);
            break;
        case AblationVariant::UserTokenPosition:
            run.tmpl.has_user_slot = true;
            run.tmpl.user_slot_placement = parse_user_slot_placement(value);
            break;
        case AblationVariant::PromptLength: {
            std::size_t l = 0;
            const auto res = std::from_chars(value.data(), value.data() + value.size(), l);
            if (res.ec != std::errc() || res.ptr != value.data() + value.size() || l == 0) {
                throw ValidationError("invalid prompt length '" + value + "'");
            }
            run.tmpl.num_task_slots = l;
            run.length_sweep = {l};
            break;
        }
        case AblationVariant::SelectionCriterion:
            run.search.criterion = parse_criterion(value);
            break;
        }
        run.validate();
        const SearchOutcome outcome = search_prompt(run, model, base_data);
        const MetricsReport report =
            evaluate_assignment(run, model, base_data, outcome.tmpl, outcome.result.best.assignment, "test");
        const double scale = is_text(run.tmpl.task_kind) ? 100.0 : 1.0;
        std::string line = value;
        for (const auto &c : columns) {
            line += '\t' + (report.has(c) ? number_text(report.at(c) * scale) : std::string("nan"));
        }
        table += line + '\n';
        log << line << '\n';
    }
    const auto path = config.run_dir("ablate") / ("ablation_" + std::string(to_string(spec.variant)) + ".tsv");
    write_text(path, table);
    log << "wrote " << path.string() << '\n';
}

} // namespace promptforge
