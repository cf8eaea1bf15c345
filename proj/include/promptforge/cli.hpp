#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptforge/backbone.hpp"
#include "promptforge/data.hpp"
#include "promptforge/evaluate.hpp"
#include "promptforge/prompt.hpp"
#include "promptforge/search.hpp"
#include "promptforge/seq2seq.hpp"
#include "promptforge/trainer.hpp"

namespace promptforge {

enum class AblationVariant { TriggerPosition, UserTokenPosition, PromptLength, SelectionCriterion };

std::string_view to_string(AblationVariant variant);
AblationVariant parse_ablation_variant(std::string_view text);

struct AblationSpec {
    AblationVariant variant = AblationVariant::TriggerPosition;
    // Sweep values as text; empty means the default sweep for the variant.
    std::vector<std::string> values;
};

std::vector<std::string> default_sweep(AblationVariant variant);

// Whole-pipeline configuration. The file format is line-oriented
// `key = value` with `[section]` headers and `#` comments; every key is
// optional and unknown keys are rejected.
struct RunConfig {
    std::filesystem::path data_dir = "data";
    std::filesystem::path weights = "backbone.pfw";
    std::filesystem::path out_dir = "runs";
    // Assignment file evaluated by `eval`; defaults to the run's search output.
    std::optional<std::filesystem::path> checkpoint;

    std::int64_t seed = 0;

    SynthOptions synth;
    SplitOptions split;
    // Matching negatives used when building backbone training data.
    std::size_t backbone_negatives = 19;
    std::vector<TaskKind> backbone_tasks = {TaskKind::Sequential, TaskKind::Matching, TaskKind::Explanation};

    ModelConfig model;
    TrainOptions train;
    BootstrapOptions bootstrap;

    PromptTemplate tmpl;
    // Non-personalized prompts: lengths tried by `search`, best validation kept.
    std::vector<std::size_t> length_sweep = {5, 6};
    SearchConfig search;
    bool alpha_set = false;

    std::size_t eval_beam = 20;
    std::size_t eval_repeats = 5;
    std::size_t eval_max_k = 10;
    std::string eval_split = "test";

    AblationSpec ablation;

    // Re-derives every component seed from `seed`.
    void apply_seed(std::int64_t master);
    void validate() const;
    // Relative paths are taken relative to out_dir.
    std::filesystem::path resolve(const std::filesystem::path &p) const { return p.is_absolute() ? p : out_dir / p; }
    std::filesystem::path interactions_path() const { return resolve(data_dir) / "interactions.tsv"; }
    std::filesystem::path titles_path() const { return resolve(data_dir) / "items.tsv"; }
    std::filesystem::path weights_path() const { return resolve(weights); }
    std::filesystem::path checkpoint_path() const;
    // Run-stamped output directory for a command.
    std::filesystem::path run_dir(std::string_view command) const;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path &path);

// Dataset as the commands see it.
struct LoadedData {
    InteractionLog log;
    Vocab vocab;
    SplitDataset split;
    EvalContext ctx;
};

LoadedData load_data(const RunConfig &config);

// Backbone training instances drawn from the train splits of the configured tasks.
std::vector<TaskInstance> backbone_instances(const RunConfig &config, const InteractionLog &log, const Vocab &vocab);

struct SearchOutcome {
    PromptTemplate tmpl;
    SearchResult result;
    std::string report;
};

// One search, or the length sweep for non-personalized prompts (best validation kept).
SearchOutcome search_prompt(const RunConfig &config, const FrozenSeq2Seq &model, const LoadedData &data);

std::span<const TaskInstance> eval_split(const SplitDataset &split, std::string_view name);

MetricsReport evaluate_assignment(const RunConfig &config, const FrozenSeq2Seq &model, const LoadedData &data,
                                  const PromptTemplate &tmpl, const TriggerAssignment &assignment,
                                  std::string_view split_name);

// Tab-separated rows (prompt, split, beam, repeats, metric, value); text
// metrics are scaled by 100.
std::string format_metrics(const MetricsReport &report, TaskKind kind, std::string_view label,
                           std::string_view split_name, std::size_t beam, std::size_t repeats);

// Commands write into config.run_dir(<command>) and log progress to `log`.
void cmd_synth(const RunConfig &config, std::ostream &log);
void cmd_train_backbone(const RunConfig &config, std::ostream &log);
void cmd_search(const RunConfig &config, std::ostream &log);
void cmd_eval(const RunConfig &config, std::ostream &log);
void cmd_ablate(const RunConfig &config, std::ostream &log);

} // namespace promptforge
