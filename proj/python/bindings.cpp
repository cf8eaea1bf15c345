#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "promptforge/cli.hpp"
#include "promptforge/errors.hpp"
#include "promptforge/metrics.hpp"
#include "promptforge/search.hpp"
#include "promptforge/weights.hpp"

namespace py = pybind11;
namespace pf = promptforge;

namespace {

using Command = void (*)(const pf::RunConfig &, std::ostream &);

pf::RunConfig prepare(const std::filesystem::path &config, std::optional<std::int64_t> seed,
                      std::optional<std::filesystem::path> out) {
    pf::RunConfig c = pf::load_run_config(config);
    if (seed) {
        c.apply_seed(*seed);
    }
    if (out) {
        c.out_dir = *out;
    }
    return c;
}

// Runs a pipeline command and returns its log text.
std::string run(Command cmd, const std::filesystem::path &config, std::optional<std::int64_t> seed,
                std::optional<std::filesystem::path> out) {
    const pf::RunConfig c = prepare(config, seed, out);
    std::ostringstream log;
    {
        py::gil_scoped_release release;
        cmd(c, log);
    }
    return log.str();
}

pf::TokenSequence plain(std::vector<pf::TokenId> ids) { return pf::TokenSequence{std::move(ids), {}, std::nullopt}; }

pf::RougeVariant rouge_variant(const std::string &name) {
    if (name == "1") {
        return pf::RougeVariant::R1;
    }
    if (name == "2") {
        return pf::RougeVariant::R2;
    }
    if (name == "L" || name == "l") {
        return pf::RougeVariant::RL;
    }
    throw pf::ArgumentError("rouge variant must be '1', '2' or 'L'");
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Gradient-guided discrete prompt search for a frozen seq2seq recommender";

    auto base = py::register_exception<pf::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<pf::ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<pf::ParseError>(m, "ParseError", base.ptr());
    py::register_exception<pf::ArgumentError>(m, "ArgumentError", base.ptr());
    py::register_exception<pf::IoError>(m, "IoError", base.ptr());
    py::register_exception<pf::FormatError>(m, "FormatError", base.ptr());

    m.attr("PAD") = pf::kPadId;
    m.attr("EOS") = pf::kEosId;

    m.def(
        "synth", [](const std::filesystem::path &c, std::optional<std::int64_t> s,
                    std::optional<std::filesystem::path> o) { return run(pf::cmd_synth, c, s, o); },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
        "Generate the synthetic dataset; returns the command log.");
    m.def(
        "train_backbone", [](const std::filesystem::path &c, std::optional<std::int64_t> s,
                             std::optional<std::filesystem::path> o) { return run(pf::cmd_train_backbone, c, s, o); },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());
    m.def(
        "search", [](const std::filesystem::path &c, std::optional<std::int64_t> s,
                     std::optional<std::filesystem::path> o) { return run(pf::cmd_search, c, s, o); },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());
    m.def(
        "evaluate", [](const std::filesystem::path &c, std::optional<std::int64_t> s,
                       std::optional<std::filesystem::path> o) { return run(pf::cmd_eval, c, s, o); },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());
    m.def(
        "ablate", [](const std::filesystem::path &c, std::optional<std::int64_t> s,
                     std::optional<std::filesystem::path> o) { return run(pf::cmd_ablate, c, s, o); },
        py::arg("config"), py::arg("seed") = py::none(), py::arg("out") = py::none());
    m.def(
        "run_dir",
        [](const std::filesystem::path &c, const std::string &command, std::optional<std::int64_t> s,
           std::optional<std::filesystem::path> o) { return prepare(c, s, o).run_dir(command); },
        py::arg("config"), py::arg("command"), py::arg("seed") = py::none(), py::arg("out") = py::none(),
        "Directory a command writes into.");

    py::class_<pf::FrozenSeq2Seq>(m, "Model")
        .def_static("load", &pf::load_weights, py::arg("path"))
        .def_property_readonly("vocab_size", [](const pf::FrozenSeq2Seq &s) { return s.config().vocab_size; })
        .def_property_readonly("embed_dim", [](const pf::FrozenSeq2Seq &s) { return s.config().embed_dim; })
        .def_property_readonly("checksum", &pf::FrozenSeq2Seq::checksum)
        .def("embedding_table", [](const pf::FrozenSeq2Seq &s) { return pf::Matrix(s.embedding_table()); })
        .def(
            "loss",
            [](const pf::FrozenSeq2Seq &s, std::vector<pf::TokenId> input, std::vector<pf::TokenId> target) {
                return s.forward_loss(plain(std::move(input)), target);
            },
            py::arg("input"), py::arg("target"), "Summed cross-entropy of target given input.")
        .def(
            "input_gradients",
            [](const pf::FrozenSeq2Seq &s, std::vector<pf::TokenId> input, std::vector<pf::TokenId> target,
               std::vector<std::size_t> positions) {
                return s.input_embedding_gradients(plain(std::move(input)), target, positions);
            },
            py::arg("input"), py::arg("target"), py::arg("positions"))
        .def(
            "beam_search",
            [](const pf::FrozenSeq2Seq &s, std::vector<pf::TokenId> input, std::size_t beam, std::size_t max_len,
               std::size_t num_outputs) {
                std::vector<std::pair<std::vector<pf::TokenId>, double>> out;
                for (auto &h : s.beam_search(plain(std::move(input)), {beam, max_len, num_outputs})) {
                    out.emplace_back(std::move(h.ids), h.log_prob);
                }
                return out;
            },
            py::arg("input"), py::arg("beam") = 5, py::arg("max_len") = 2, py::arg("num_outputs") = 5);

    m.def(
        "candidate_tokens",
        [](const pf::Vector &grad, const pf::Matrix &table, std::size_t k, std::set<pf::TokenId> exclude) {
            return pf::candidate_tokens(grad, pf::ConstMatrixMap(table.data(), table.rows(), table.cols()), k,
                                        exclude)
                .entries;
        },
        py::arg("grad"), py::arg("table"), py::arg("k"), py::arg("exclude") = std::set<pf::TokenId>{},
        "Top-k (token, -e.grad) pairs, specials excluded, ties by ascending id.");

    m.def(
        "hit_rate",
        [](const std::vector<pf::RankedList> &r, const std::vector<pf::TokenId> &t, std::size_t k) {
            return pf::hit_rate_at_k(r, t, k);
        },
        py::arg("ranked"), py::arg("targets"), py::arg("k"));
    m.def(
        "ndcg",
        [](const std::vector<pf::RankedList> &r, const std::vector<pf::TokenId> &t, std::size_t k) {
            return pf::ndcg_at_k(r, t, k);
        },
        py::arg("ranked"), py::arg("targets"), py::arg("k"));
    m.def(
        "bleu4",
        [](const std::vector<pf::TokenSentence> &h, const std::vector<pf::TokenSentence> &r) {
            return pf::bleu4(h, r);
        },
        py::arg("hypotheses"), py::arg("references"));
    m.def(
        "rouge",
        [](const std::vector<pf::TokenSentence> &h, const std::vector<pf::TokenSentence> &r,
           const std::string &variant) { return pf::rouge(h, r, rouge_variant(variant)); },
        py::arg("hypotheses"), py::arg("references"), py::arg("variant") = "L");
}
