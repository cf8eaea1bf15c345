#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "promptforge/vocab.hpp"

namespace promptforge {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using ConstMatrixMap = Eigen::Map<const Matrix>;

struct ModelConfig {
    std::size_t vocab_size = 2000;
    std::size_t embed_dim = 32;
    std::size_t num_encoder_layers = 2;
    std::size_t num_decoder_layers = 2;
    std::size_t num_heads = 4;
    std::size_t feedforward_dim = 64;
    std::size_t max_seq_len = 128;
    std::int64_t seed = 0;

    // Throws ArgumentError on inconsistent dimensions.
    void validate() const;
    bool operator==(const ModelConfig &) const = default;
};

// Offsets of every tensor inside the flat parameter buffer. The declared
// order here is the serialization order of the weight file.
class ParameterLayout {
  public:
    struct Tensor {
        std::string name;
        std::size_t rows = 0;
        std::size_t cols = 0;
        std::size_t offset = 0;
        std::size_t size() const { return rows * cols; }
    };
    struct Norm {
        std::size_t gain = 0, bias = 0;
    };
    struct Attention {
        std::size_t wq = 0, bq = 0, wk = 0, bk = 0, wv = 0, bv = 0, wo = 0, bo = 0;
    };
    struct FeedForward {
        std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
    };
    struct EncoderLayer {
        Norm norm1;
        Attention self_attention;
        Norm norm2;
        FeedForward ffn;
    };
    struct DecoderLayer {
        Norm norm1;
        Attention self_attention;
        Norm norm2;
        Attention cross_attention;
        Norm norm3;
        FeedForward ffn;
    };

    explicit ParameterLayout(const ModelConfig &config);

    const std::vector<Tensor> &tensors() const { return tensors_; }
    std::size_t total_size() const { return total_; }
    const Tensor &find(const std::string &name) const;

    std::size_t embedding = 0;
    std::vector<EncoderLayer> encoder;
    Norm encoder_norm;
    std::vector<DecoderLayer> decoder;
    Norm decoder_norm;
    std::size_t output_weight = 0;
    std::size_t output_bias = 0;

  private:
    std::size_t push(const std::string &name, std::size_t rows, std::size_t cols);
    Norm push_norm(const std::string &prefix, std::size_t dim);
    Attention push_attention(const std::string &prefix, std::size_t dim);
    FeedForward push_ffn(const std::string &prefix, std::size_t dim, std::size_t hidden);

    std::vector<Tensor> tensors_;
    std::size_t total_ = 0;
};

// A rendered prompt: token ids plus the indices of the searchable slots.
struct TokenSequence {
    std::vector<TokenId> ids;
    std::vector<std::size_t> trigger_positions;
    std::optional<std::size_t> user_position;

    // Throws IndexError when positions are out of bounds or overlap.
    void validate() const;
    bool operator==(const TokenSequence &) const = default;
};

struct BeamHypothesis {
    std::vector<TokenId> ids;
    double log_prob = 0.0;
};

struct BeamOptions {
    std::size_t beam_size = 5;
    std::size_t max_len = 2;
    std::size_t num_outputs = 5;
};

// Ordering used for beam results: log-prob descending, then id sequence ascending.
bool beam_before(const BeamHypothesis &a, const BeamHypothesis &b);

// Frozen encoder-decoder transformer (pre-norm, GELU feed-forward, sinusoidal
// positions, shared input embedding, untied output projection). All math is
// double precision. Instances are immutable and safe for concurrent reads.
class FrozenSeq2Seq {
  public:
    FrozenSeq2Seq(ModelConfig config, std::vector<double> parameters);

    // Seeded random initialization from config.seed.
    static FrozenSeq2Seq initialize(const ModelConfig &config);
    static std::vector<double> initial_parameters(const ModelConfig &config);

    const ModelConfig &config() const { return config_; }
    const ParameterLayout &layout() const { return layout_; }
    std::span<const double> parameters() const { return parameters_; }
    ConstMatrixMap embedding_table() const;
    std::uint64_t checksum() const;

    // Negative log-likelihood of `target` under teacher forcing.
    double forward_loss(const TokenSequence &input, std::span<const TokenId> target) const;

    // Same loss with the encoder input embeddings supplied directly (one row
    // per input position, before positional encoding).
    double forward_loss_embedded(const Matrix &input_embeddings, std::span<const TokenId> target) const;
    Matrix input_embeddings(const TokenSequence &input) const;

    // Gradient of forward_loss with respect to the input embedding at each
    // requested position.
    std::vector<Vector> input_embedding_gradients(const TokenSequence &input, std::span<const TokenId> target,
                                                  std::span<const std::size_t> positions) const;

    // Log-probabilities of the next token for a decoder prefix (excluding the
    // implicit start token).
    Vector next_token_log_probs(const TokenSequence &input, std::span<const TokenId> prefix) const;

    std::vector<BeamHypothesis> beam_search(const TokenSequence &input, const BeamOptions &options) const;

  private:
    void check_input(std::span<const TokenId> ids, std::span<const TokenId> target) const;

    ModelConfig config_;
    ParameterLayout layout_;
    std::vector<double> parameters_;
};

// Loss for one example and its gradient with respect to every parameter,
// accumulated into `gradients` (same layout as `parameters`).
double accumulate_parameter_gradients(const ModelConfig &config, const ParameterLayout &layout,
                                      std::span<const double> parameters, std::span<const TokenId> input,
                                      std::span<const TokenId> target, std::span<double> gradients);

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed = 14695981039346656037ULL);

} // namespace promptforge
