#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "promptforge/cli.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

std::string_view to_string(AblationVariant variant) {
    switch (variant) {
    case AblationVariant::TriggerPosition:
        return "trigger_position";
    case AblationVariant::UserTokenPosition:
        return "user_token_position";
    case AblationVariant::PromptLength:
        return "prompt_length";
    case AblationVariant::SelectionCriterion:
        return "selection_criterion";
    }
    return "unknown";
}

AblationVariant parse_ablation_variant(std::string_view text) {
    for (auto v : {AblationVariant::TriggerPosition, AblationVariant::UserTokenPosition, AblationVariant::PromptLength,
                   AblationVariant::SelectionCriterion}) {
        if (text == to_string(v)) {
            return v;
        }
    }
    throw ArgumentError("unknown ablation variant '" + std::string(text) + "'");
}

std::vector<std::string> default_sweep(AblationVariant variant) {
    switch (variant) {
    case AblationVariant::TriggerPosition:
        return {"prefix_only", "prefix_and_suffix", "suffix_only"};
    case AblationVariant::UserTokenPosition:
        return {"before_args", "between_args_and_triggers", "after_triggers"};
    case AblationVariant::PromptLength:
        return {"3", "4", "5", "6", "7"};
    case AblationVariant::SelectionCriterion:
        return {"train_loss", "surrogate"};
    }
    return {};
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!piece.empty()) {
            out.push_back(piece);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string &value, std::size_t line) {
    T out{};
    const auto *end = value.data() + value.size();
    auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(line, "invalid number '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string &value, std::size_t line) {
    if (value == "true" || value == "1" || value == "yes") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no") {
        return false;
    }
    throw ParseError(line, "invalid boolean '" + value + "'");
}

using Setter = std::function<void(RunConfig &, const std::string &, std::size_t)>;

template <typename T>
Setter num(T RunConfig::*field) {
    return [field](RunConfig &c, const std::string &v, std::size_t l) { c.*field = parse_number<T>(v, l); };
}

template <typename S, typename T>
Setter num(S RunConfig::*group, T S::*field) {
    return [group, field](RunConfig &c, const std::string &v, std::size_t l) {
        (c.*group).*field = parse_number<T>(v, l);
    };
}

const std::map<std::string, Setter> &setters() {
    static const std::map<std::string, Setter> table = {
        {"paths.data_dir", [](RunConfig &c, const std::string &v, std::size_t) { c.data_dir = v; }},
        {"paths.weights", [](RunConfig &c, const std::string &v, std::size_t) { c.weights = v; }},
        {"paths.out_dir", [](RunConfig &c, const std::string &v, std::size_t) { c.out_dir = v; }},
        {"paths.checkpoint", [](RunConfig &c, const std::string &v, std::size_t) { c.checkpoint = v; }},
        {"run.seed", num(&RunConfig::seed)},
        {"data.num_users", num(&RunConfig::synth, &SynthOptions::num_users)},
        {"data.num_items", num(&RunConfig::synth, &SynthOptions::num_items)},
        {"data.min_len", num(&RunConfig::synth, &SynthOptions::min_len)},
        {"data.max_len", num(&RunConfig::synth, &SynthOptions::max_len)},
        {"data.num_negatives", num(&RunConfig::split, &SplitOptions::num_negatives)},
        {"data.max_history", num(&RunConfig::split, &SplitOptions::max_history)},
        {"model.embed_dim", num(&RunConfig::model, &ModelConfig::embed_dim)},
        {"model.encoder_layers", num(&RunConfig::model, &ModelConfig::num_encoder_layers)},
        {"model.decoder_layers", num(&RunConfig::model, &ModelConfig::num_decoder_layers)},
        {"model.num_heads", num(&RunConfig::model, &ModelConfig::num_heads)},
        {"model.ff_dim", num(&RunConfig::model, &ModelConfig::feedforward_dim)},
        {"model.max_seq_len", num(&RunConfig::model, &ModelConfig::max_seq_len)},
        {"train.epochs", num(&RunConfig::train, &TrainOptions::epochs)},
        {"train.learning_rate", num(&RunConfig::train, &TrainOptions::learning_rate)},
        {"train.batch_size", num(&RunConfig::train, &TrainOptions::batch_size)},
        {"train.max_grad_norm", num(&RunConfig::train, &TrainOptions::max_grad_norm)},
        {"train.min_words", num(&RunConfig::bootstrap, &BootstrapOptions::min_words)},
        {"train.max_words", num(&RunConfig::bootstrap, &BootstrapOptions::max_words)},
        {"train.variants", num(&RunConfig::bootstrap, &BootstrapOptions::variants)},
        {"train.negatives", num(&RunConfig::backbone_negatives)},
        {"train.tasks",
         [](RunConfig &c, const std::string &v, std::size_t) {
             c.backbone_tasks.clear();
             for (const auto &t : split_list(v)) {
                 c.backbone_tasks.push_back(parse_task_kind(t));
             }
         }},
        {"prompt.task", [](RunConfig &c, const std::string &v,
                           std::size_t) { c.tmpl.task_kind = parse_task_kind(v); }},
        {"prompt.length", num(&RunConfig::tmpl, &PromptTemplate::num_task_slots)},
        {"prompt.placement",
         [](RunConfig &c, const std::string &v, std::size_t) { c.tmpl.placement = parse_placement(v); }},
        {"prompt.personalized",
         [](RunConfig &c, const std::string &v, std::size_t l) { c.tmpl.has_user_slot = parse_bool(v, l); }},
        {"prompt.user_slot",
         [](RunConfig &c, const std::string &v, std::size_t) {
             c.tmpl.user_slot_placement = parse_user_slot_placement(v);
         }},
        {"prompt.length_sweep",
         [](RunConfig &c, const std::string &v, std::size_t l) {
             c.length_sweep.clear();
             for (const auto &t : split_list(v)) {
                 c.length_sweep.push_back(parse_number<std::size_t>(t, l));
             }
         }},
        {"search.k", num(&RunConfig::search, &SearchConfig::k)},
        {"search.max_epochs", num(&RunConfig::search, &SearchConfig::max_epochs)},
        {"search.criterion",
         [](RunConfig &c, const std::string &v, std::size_t) { c.search.criterion = parse_criterion(v); }},
        {"search.surrogate_beam", num(&RunConfig::search, &SearchConfig::surrogate_beam)},
        {"search.test_beam", num(&RunConfig::search, &SearchConfig::test_beam)},
        {"search.alpha",
         [](RunConfig &c, const std::string &v, std::size_t l) {
             c.search.alpha = parse_number<double>(v, l);
             c.alpha_set = true;
         }},
        {"search.include_current_token",
         [](RunConfig &c, const std::string &v, std::size_t l) { c.search.include_current_token = parse_bool(v, l); }},
        {"search.train_subsample",
         [](RunConfig &c, const std::string &v, std::size_t l) {
             c.search.train_subsample = parse_number<std::size_t>(v, l);
         }},
        {"eval.beam", num(&RunConfig::eval_beam)},
        {"eval.repeats", num(&RunConfig::eval_repeats)},
        {"eval.max_k", num(&RunConfig::eval_max_k)},
        {"eval.split", [](RunConfig &c, const std::string &v, std::size_t) { c.eval_split = v; }},
        {"ablate.variant",
         [](RunConfig &c, const std::string &v, std::size_t) {
             c.ablation.variant = parse_ablation_variant(v);
         }},
        {"ablate.values",
         [](RunConfig &c, const std::string &v, std::size_t) { c.ablation.values = split_list(v); }},
    };
    return table;
}

} // namespace

void RunConfig::apply_seed(std::int64_t master) {
    seed = master;
    synth.seed = master;
    split.seed = master + 1;
    model.seed = master + 2;
    train.seed = master + 3;
    bootstrap.seed = master + 4;
    search.seed = master + 5;
}

void RunConfig::validate() const {
    try {
        model.validate();
    } catch (const Error &e) {
        throw ValidationError(std::string("model: ") + e.what());
    }
    try {
        tmpl.validate();
    } catch (const Error &e) {
        throw ValidationError(std::string("prompt: ") + e.what());
    }
    search.validate();
    if (synth.num_users == 0 || synth.num_items <= synth.max_len || synth.min_len < 3 ||
        synth.max_len < synth.min_len) {
        throw ValidationError("data: need num_users > 0, 3 <= min_len <= max_len < num_items");
    }
    if (train.batch_size == 0 || !(train.learning_rate > 0.0)) {
        throw ValidationError("train: batch_size and learning_rate must be positive");
    }
    if (bootstrap.min_words == 0 || bootstrap.max_words < bootstrap.min_words || bootstrap.variants == 0) {
        throw ValidationError("train: need 1 <= min_words <= max_words and variants >= 1");
    }
    if (backbone_tasks.empty()) {
        throw ValidationError("train: tasks must not be empty");
    }
    if (length_sweep.empty()) {
        throw ValidationError("prompt: length_sweep must not be empty");
    }
    for (std::size_t l : length_sweep) {
        if (l == 0) {
            throw ValidationError("prompt: sweep lengths must be positive");
        }
    }
    if (eval_beam == 0 || eval_repeats == 0 || eval_max_k == 0) {
        throw ValidationError("eval: beam, repeats and max_k must be positive");
    }
    if (tmpl.task_kind != TaskKind::Explanation && eval_beam < eval_max_k) {
        throw ValidationError("eval: beam " + std::to_string(eval_beam) + " cannot rank " +
                              std::to_string(eval_max_k) + " items");
    }
    if (eval_split != "train" && eval_split != "val" && eval_split != "test") {
        throw ValidationError("eval: split must be train, val or test");
    }
}

std::filesystem::path RunConfig::run_dir(std::string_view command) const {
    return out_dir / (std::string(command) + "_seed" + std::to_string(seed));
}

std::filesystem::path RunConfig::checkpoint_path() const {
    return checkpoint ? resolve(*checkpoint) : run_dir("search") / "checkpoint.txt";
}

RunConfig parse_run_config(std::string_view text) {
    RunConfig config;
    std::optional<std::int64_t> seed;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError(line_no, "unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(line_no, "expected 'key = value'");
        }
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "run.seed") {
            seed = parse_number<std::int64_t>(value, line_no);
            continue;
        }
        const auto it = setters().find(key);
        if (it == setters().end()) {
            throw ParseError(line_no, "unknown key '" + key + "'");
        }
        try {
            it->second(config, value, line_no);
        } catch (const ParseError &) {
            throw;
        } catch (const Error &e) {
            throw ParseError(line_no, e.what());
        }
    }
    config.apply_seed(seed.value_or(0));
    if (!config.alpha_set) {
        config.search.alpha = default_alpha(config.tmpl.task_kind);
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

} // namespace promptforge
