#include "promptforge/seq2seq.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <random>

#include "promptforge/errors.hpp"

namespace promptforge {

namespace {

using RowVector = Eigen::RowVectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstRowMap = Eigen::Map<const RowVector>;
using RowMap = Eigen::Map<RowVector>;

constexpr double kNormEps = 1e-5;
constexpr double kGeluC = 0.7978845608028654; // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

// Read access to parameters plus optional gradient accumulation.
class Params {
  public:
    Params(const double *values, double *grads) : values_(values), grads_(grads) {}

    ConstMatrixMap w(std::size_t offset, std::size_t rows, std::size_t cols) const {
        return {values_ + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
    }
    ConstRowMap b(std::size_t offset, std::size_t n) const { return {values_ + offset, static_cast<Eigen::Index>(n)}; }
    MatrixMap gw(std::size_t offset, std::size_t rows, std::size_t cols) const {
        return {grads_ + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
    }
    RowMap gb(std::size_t offset, std::size_t n) const { return {grads_ + offset, static_cast<Eigen::Index>(n)}; }
    bool tracking() const { return grads_ != nullptr; }

  private:
    const double *values_;
    double *grads_;
};

Matrix positional_encoding(std::size_t len, std::size_t dim) {
    Matrix pe(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(dim));
    for (std::size_t pos = 0; pos < len; ++pos) {
        for (std::size_t i = 0; i < dim; i += 2) {
            const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
            pe(pos, i) = std::sin(static_cast<double>(pos) * freq);
            if (i + 1 < dim) {
                pe(pos, i + 1) = std::cos(static_cast<double>(pos) * freq);
            }
        }
    }
    return pe;
}

// ---- layer norm ----

struct NormCache {
    Matrix xhat;
    Vector inv_std;
};

Matrix norm_forward(const Params &p, const ParameterLayout::Norm &n, std::size_t dim, const Matrix &x,
                    NormCache &cache) {
    const auto rows = x.rows();
    cache.xhat.resize(rows, x.cols());
    cache.inv_std.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().mean();
        const double inv = 1.0 / std::sqrt(var + kNormEps);
        cache.inv_std(r) = inv;
        cache.xhat.row(r) = (x.row(r).array() - mean) * inv;
    }
    Matrix y = cache.xhat.array().rowwise() * p.b(n.gain, dim).array();
    y.rowwise() += p.b(n.bias, dim);
    return y;
}

Matrix norm_backward(const Params &p, const ParameterLayout::Norm &n, std::size_t dim, const Matrix &dy,
                     const NormCache &cache) {
    if (p.tracking()) {
        p.gb(n.gain, dim) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
        p.gb(n.bias, dim) += dy.colwise().sum();
    }
    const Matrix dxhat = dy.array().rowwise() * p.b(n.gain, dim).array();
    const double inv_n = 1.0 / static_cast<double>(dim);
    Matrix dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
        const double sum_d = dxhat.row(r).sum();
        const double sum_dx = dxhat.row(r).dot(cache.xhat.row(r));
        dx.row(r) = cache.inv_std(r) * inv_n *
                    (static_cast<double>(dim) * dxhat.row(r).array() - sum_d - cache.xhat.row(r).array() * sum_dx);
    }
    return dx;
}

// ---- linear ----

Matrix linear_forward(const Params &p, std::size_t w, std::size_t b, std::size_t in, std::size_t out,
                      const Matrix &x) {
    Matrix y = x * p.w(w, in, out);
    y.rowwise() += p.b(b, out);
    return y;
}

Matrix linear_backward(const Params &p, std::size_t w, std::size_t b, std::size_t in, std::size_t out,
                       const Matrix &x, const Matrix &dy) {
    if (p.tracking()) {
        p.gw(w, in, out).noalias() += x.transpose() * dy;
        p.gb(b, out) += dy.colwise().sum();
    }
    return dy * p.w(w, in, out).transpose();
}

// ---- multi-head attention ----

struct AttentionCache {
    Matrix xq, xkv, q, k, v, concat;
    std::vector<Matrix> probs;
};

struct AttentionShape {
    std::size_t dim;
    std::size_t heads;
    bool causal;
};

Matrix attention_forward(const Params &p, const ParameterLayout::Attention &a, const AttentionShape &shape,
                         const Matrix &xq, const Matrix &xkv, AttentionCache &cache) {
    const std::size_t d = shape.dim;
    const auto head_dim = static_cast<Eigen::Index>(d / shape.heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    cache.xq = xq;
    cache.xkv = xkv;
    cache.q = linear_forward(p, a.wq, a.bq, d, d, xq);
    cache.k = linear_forward(p, a.wk, a.bk, d, d, xkv);
    cache.v = linear_forward(p, a.wv, a.bv, d, d, xkv);
    cache.concat.resize(xq.rows(), static_cast<Eigen::Index>(d));
    cache.probs.resize(shape.heads);
    for (std::size_t h = 0; h < shape.heads; ++h) {
        const auto col = static_cast<Eigen::Index>(h) * head_dim;
        Matrix scores = (cache.q.middleCols(col, head_dim) * cache.k.middleCols(col, head_dim).transpose()) * scale;
        for (Eigen::Index r = 0; r < scores.rows(); ++r) {
            const Eigen::Index visible = shape.causal ? std::min<Eigen::Index>(r + 1, scores.cols()) : scores.cols();
            const double peak = scores.row(r).head(visible).maxCoeff();
            double total = 0.0;
            for (Eigen::Index c = 0; c < scores.cols(); ++c) {
                const double e = c < visible ? std::exp(scores(r, c) - peak) : 0.0;
                scores(r, c) = e;
                total += e;
            }
            scores.row(r) /= total;
        }
        cache.concat.middleCols(col, head_dim).noalias() = scores * cache.v.middleCols(col, head_dim);
        cache.probs[h] = std::move(scores);
    }
    return linear_forward(p, a.wo, a.bo, d, d, cache.concat);
}

// Returns (d xq, d xkv).
std::pair<Matrix, Matrix> attention_backward(const Params &p, const ParameterLayout::Attention &a,
                                             const AttentionShape &shape, const Matrix &dout,
                                             const AttentionCache &cache) {
    const std::size_t d = shape.dim;
    const auto head_dim = static_cast<Eigen::Index>(d / shape.heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    const Matrix dconcat = linear_backward(p, a.wo, a.bo, d, d, cache.concat, dout);
    Matrix dq(cache.q.rows(), cache.q.cols());
    Matrix dk(cache.k.rows(), cache.k.cols());
    Matrix dv(cache.v.rows(), cache.v.cols());
    for (std::size_t h = 0; h < shape.heads; ++h) {
        const auto col = static_cast<Eigen::Index>(h) * head_dim;
        const Matrix &probs = cache.probs[h];
        const auto d_head = dconcat.middleCols(col, head_dim);
        const Matrix dprobs = d_head * cache.v.middleCols(col, head_dim).transpose();
        dv.middleCols(col, head_dim).noalias() = probs.transpose() * d_head;
        const Eigen::VectorXd row_dot = (dprobs.array() * probs.array()).rowwise().sum();
        const Matrix dscores = (probs.array() * (dprobs.array().colwise() - row_dot.array())) * scale;
        dq.middleCols(col, head_dim).noalias() = dscores * cache.k.middleCols(col, head_dim);
        dk.middleCols(col, head_dim).noalias() = dscores.transpose() * cache.q.middleCols(col, head_dim);
    }
    Matrix dxq = linear_backward(p, a.wq, a.bq, d, d, cache.xq, dq);
    Matrix dxkv = linear_backward(p, a.wk, a.bk, d, d, cache.xkv, dk);
    dxkv += linear_backward(p, a.wv, a.bv, d, d, cache.xkv, dv);
    return {std::move(dxq), std::move(dxkv)};
}

// ---- feed-forward (tanh GELU) ----

struct FeedForwardCache {
    Matrix x, pre, act;
};

Matrix ffn_forward(const Params &p, const ParameterLayout::FeedForward &f, std::size_t dim, std::size_t hidden,
                   const Matrix &x, FeedForwardCache &cache) {
    cache.x = x;
    cache.pre = linear_forward(p, f.w1, f.b1, dim, hidden, x);
    cache.act = cache.pre.unaryExpr([](double z) {
        return 0.5 * z * (1.0 + std::tanh(kGeluC * (z + kGeluA * z * z * z)));
    });
    return linear_forward(p, f.w2, f.b2, hidden, dim, cache.act);
}

Matrix ffn_backward(const Params &p, const ParameterLayout::FeedForward &f, std::size_t dim, std::size_t hidden,
                    const Matrix &dy, const FeedForwardCache &cache) {
    const Matrix dact = linear_backward(p, f.w2, f.b2, hidden, dim, cache.act, dy);
    const Matrix slope = cache.pre.unaryExpr([](double z) {
        const double t = std::tanh(kGeluC * (z + kGeluA * z * z * z));
        return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * z * z);
    });
    const Matrix dpre = dact.cwiseProduct(slope);
    return linear_backward(p, f.w1, f.b1, dim, hidden, cache.x, dpre);
}

// ---- layers ----

struct EncoderLayerCache {
    NormCache norm1;
    AttentionCache attention;
    NormCache norm2;
    FeedForwardCache ffn;
};

struct DecoderLayerCache {
    NormCache norm1;
    AttentionCache self_attention;
    NormCache norm2;
    AttentionCache cross_attention;
    NormCache norm3;
    FeedForwardCache ffn;
};

class Network {
  public:
    Network(const ModelConfig &config, const ParameterLayout &layout, const double *values, double *grads)
        : config_(config), layout_(layout), p_(values, grads) {}

    Matrix encode(const Matrix &src_embeddings) {
        const std::size_t d = config_.embed_dim;
        Matrix x = src_embeddings + positional_encoding(static_cast<std::size_t>(src_embeddings.rows()), d);
        enc_.resize(layout_.encoder.size());
        const AttentionShape shape{d, config_.num_heads, false};
        for (std::size_t l = 0; l < layout_.encoder.size(); ++l) {
            const auto &L = layout_.encoder[l];
            auto &c = enc_[l];
            const Matrix a = norm_forward(p_, L.norm1, d, x, c.norm1);
            x += attention_forward(p_, L.self_attention, shape, a, a, c.attention);
            const Matrix b = norm_forward(p_, L.norm2, d, x, c.norm2);
            x += ffn_forward(p_, L.ffn, d, config_.feedforward_dim, b, c.ffn);
        }
        return norm_forward(p_, layout_.encoder_norm, d, x, enc_norm_);
    }

    // Decoder over `dec_ids` (start token first); returns final hidden states.
    Matrix decode(const Matrix &memory, std::span<const TokenId> dec_ids) {
        const std::size_t d = config_.embed_dim;
        const auto table = p_.w(layout_.embedding, config_.vocab_size, d);
        Matrix y(static_cast<Eigen::Index>(dec_ids.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < dec_ids.size(); ++i) {
            y.row(static_cast<Eigen::Index>(i)) = table.row(dec_ids[i]);
        }
        y += positional_encoding(dec_ids.size(), d);
        dec_.resize(layout_.decoder.size());
        const AttentionShape self_shape{d, config_.num_heads, true};
        const AttentionShape cross_shape{d, config_.num_heads, false};
        for (std::size_t l = 0; l < layout_.decoder.size(); ++l) {
            const auto &L = layout_.decoder[l];
            auto &c = dec_[l];
            const Matrix a = norm_forward(p_, L.norm1, d, y, c.norm1);
            y += attention_forward(p_, L.self_attention, self_shape, a, a, c.self_attention);
            const Matrix b = norm_forward(p_, L.norm2, d, y, c.norm2);
            y += attention_forward(p_, L.cross_attention, cross_shape, b, memory, c.cross_attention);
            const Matrix e = norm_forward(p_, L.norm3, d, y, c.norm3);
            y += ffn_forward(p_, L.ffn, d, config_.feedforward_dim, e, c.ffn);
        }
        return norm_forward(p_, layout_.decoder_norm, d, y, dec_norm_);
    }

    Matrix logits(const Matrix &hidden) const {
        return linear_forward(p_, layout_.output_weight, layout_.output_bias, config_.embed_dim, config_.vocab_size,
                              hidden);
    }

    // Loss plus gradients. Returns dL/d(src embeddings) when requested; param
    // gradients (including embedding rows for src_ids) go to the grads buffer.
    double loss_and_backward(const Matrix &src_embeddings, std::span<const TokenId> src_ids,
                             std::span<const TokenId> target, Matrix *d_src) {
        const std::size_t d = config_.embed_dim;
        const std::size_t ff = config_.feedforward_dim;
        const Matrix memory = encode(src_embeddings);
        std::vector<TokenId> dec_ids;
        dec_ids.reserve(target.size());
        dec_ids.push_back(kPadId);
        dec_ids.insert(dec_ids.end(), target.begin(), target.end() - 1);
        const Matrix hidden = decode(memory, dec_ids);
        Matrix dlogits = logits(hidden);

        double loss = 0.0;
        for (Eigen::Index r = 0; r < dlogits.rows(); ++r) {
            const double peak = dlogits.row(r).maxCoeff();
            dlogits.row(r).array() -= peak;
            const double log_z = std::log(dlogits.row(r).array().exp().sum());
            loss -= dlogits(r, target[static_cast<std::size_t>(r)]) - log_z;
            dlogits.row(r) = (dlogits.row(r).array() - log_z).exp().matrix();
            dlogits(r, target[static_cast<std::size_t>(r)]) -= 1.0;
        }
        if (d_src == nullptr && !p_.tracking()) {
            return loss;
        }

        // decoder backward
        Matrix dy = linear_backward(p_, layout_.output_weight, layout_.output_bias, d, config_.vocab_size, hidden,
                                    dlogits);
        dy = norm_backward(p_, layout_.decoder_norm, d, dy, dec_norm_);
        Matrix dmemory = Matrix::Zero(memory.rows(), memory.cols());
        const AttentionShape self_shape{d, config_.num_heads, true};
        const AttentionShape cross_shape{d, config_.num_heads, false};
        for (std::size_t l = layout_.decoder.size(); l-- > 0;) {
            const auto &L = layout_.decoder[l];
            const auto &c = dec_[l];
            dy += norm_backward(p_, L.norm3, d, ffn_backward(p_, L.ffn, d, ff, dy, c.ffn), c.norm3);
            auto [dq_cross, dkv_cross] = attention_backward(p_, L.cross_attention, cross_shape, dy, c.cross_attention);
            dmemory += dkv_cross;
            dy += norm_backward(p_, L.norm2, d, dq_cross, c.norm2);
            auto [dq_self, dkv_self] = attention_backward(p_, L.self_attention, self_shape, dy, c.self_attention);
            dq_self += dkv_self;
            dy += norm_backward(p_, L.norm1, d, dq_self, c.norm1);
        }
        if (p_.tracking()) {
            auto table_grad = p_.gw(layout_.embedding, config_.vocab_size, d);
            for (std::size_t i = 0; i < dec_ids.size(); ++i) {
                table_grad.row(dec_ids[i]) += dy.row(static_cast<Eigen::Index>(i));
            }
        }

        // encoder backward
        Matrix dx = norm_backward(p_, layout_.encoder_norm, d, dmemory, enc_norm_);
        const AttentionShape enc_shape{d, config_.num_heads, false};
        for (std::size_t l = layout_.encoder.size(); l-- > 0;) {
            const auto &L = layout_.encoder[l];
            const auto &c = enc_[l];
            dx += norm_backward(p_, L.norm2, d, ffn_backward(p_, L.ffn, d, ff, dx, c.ffn), c.norm2);
            auto [dq, dkv] = attention_backward(p_, L.self_attention, enc_shape, dx, c.attention);
            dq += dkv;
            dx += norm_backward(p_, L.norm1, d, dq, c.norm1);
        }
        if (p_.tracking() && !src_ids.empty()) {
            auto table_grad = p_.gw(layout_.embedding, config_.vocab_size, d);
            for (std::size_t i = 0; i < src_ids.size(); ++i) {
                table_grad.row(src_ids[i]) += dx.row(static_cast<Eigen::Index>(i));
            }
        }
        if (d_src != nullptr) {
            *d_src = std::move(dx);
        }
        return loss;
    }

  private:
    const ModelConfig &config_;
    const ParameterLayout &layout_;
    Params p_;
    std::vector<EncoderLayerCache> enc_;
    NormCache enc_norm_;
    std::vector<DecoderLayerCache> dec_;
    NormCache dec_norm_;
};

Matrix gather_rows(ConstMatrixMap table, std::span<const TokenId> ids) {
    Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
    }
    return out;
}

Vector log_softmax_row(const Eigen::RowVectorXd &logits) {
    const double peak = logits.maxCoeff();
    const double log_z = std::log((logits.array() - peak).exp().sum()) + peak;
    return (logits.array() - log_z).transpose();
}

} // namespace

// ---- ModelConfig ----

void ModelConfig::validate() const {
    if (vocab_size <= static_cast<std::size_t>(kNumSpecials)) {
        throw ArgumentError("vocab_size must exceed the number of special tokens");
    }
    if (embed_dim == 0 || num_heads == 0 || embed_dim % num_heads != 0) {
        throw ArgumentError("embed_dim must be a positive multiple of num_heads");
    }
    if (feedforward_dim == 0 || max_seq_len == 0) {
        throw ArgumentError("feedforward_dim and max_seq_len must be positive");
    }
}

// ---- ParameterLayout ----

std::size_t ParameterLayout::push(const std::string &name, std::size_t rows, std::size_t cols) {
    tensors_.push_back({name, rows, cols, total_});
    total_ += rows * cols;
    return tensors_.back().offset;
}

ParameterLayout::Norm ParameterLayout::push_norm(const std::string &prefix, std::size_t dim) {
    Norm n;
    n.gain = push(prefix + ".gain", 1, dim);
    n.bias = push(prefix + ".bias", 1, dim);
    return n;
}

ParameterLayout::Attention ParameterLayout::push_attention(const std::string &prefix, std::size_t dim) {
    Attention a;
    a.wq = push(prefix + ".wq", dim, dim);
    a.bq = push(prefix + ".bq", 1, dim);
    a.wk = push(prefix + ".wk", dim, dim);
    a.bk = push(prefix + ".bk", 1, dim);
    a.wv = push(prefix + ".wv", dim, dim);
    a.bv = push(prefix + ".bv", 1, dim);
    a.wo = push(prefix + ".wo", dim, dim);
    a.bo = push(prefix + ".bo", 1, dim);
    return a;
}

ParameterLayout::FeedForward ParameterLayout::push_ffn(const std::string &prefix, std::size_t dim,
                                                       std::size_t hidden) {
    FeedForward f;
    f.w1 = push(prefix + ".w1", dim, hidden);
    f.b1 = push(prefix + ".b1", 1, hidden);
    f.w2 = push(prefix + ".w2", hidden, dim);
    f.b2 = push(prefix + ".b2", 1, dim);
    return f;
}

ParameterLayout::ParameterLayout(const ModelConfig &config) {
    config.validate();
    const std::size_t d = config.embed_dim;
    const std::size_t ff = config.feedforward_dim;
    embedding = push("embedding", config.vocab_size, d);
    for (std::size_t l = 0; l < config.num_encoder_layers; ++l) {
        const std::string prefix = "encoder." + std::to_string(l);
        EncoderLayer layer;
        layer.norm1 = push_norm(prefix + ".norm1", d);
        layer.self_attention = push_attention(prefix + ".self_attention", d);
        layer.norm2 = push_norm(prefix + ".norm2", d);
        layer.ffn = push_ffn(prefix + ".ffn", d, ff);
        encoder.push_back(layer);
    }
    encoder_norm = push_norm("encoder.norm", d);
    for (std::size_t l = 0; l < config.num_decoder_layers; ++l) {
        const std::string prefix = "decoder." + std::to_string(l);
        DecoderLayer layer;
        layer.norm1 = push_norm(prefix + ".norm1", d);
        layer.self_attention = push_attention(prefix + ".self_attention", d);
        layer.norm2 = push_norm(prefix + ".norm2", d);
        layer.cross_attention = push_attention(prefix + ".cross_attention", d);
        layer.norm3 = push_norm(prefix + ".norm3", d);
        layer.ffn = push_ffn(prefix + ".ffn", d, ff);
        decoder.push_back(layer);
    }
    decoder_norm = push_norm("decoder.norm", d);
    output_weight = push("output.weight", d, config.vocab_size);
    output_bias = push("output.bias", 1, config.vocab_size);
}

const ParameterLayout::Tensor &ParameterLayout::find(const std::string &name) const {
    for (const auto &t : tensors_) {
        if (t.name == name) {
            return t;
        }
    }
    throw ArgumentError("no tensor named " + name);
}

// ---- TokenSequence ----

void TokenSequence::validate() const {
    for (std::size_t i = 0; i < trigger_positions.size(); ++i) {
        if (trigger_positions[i] >= ids.size()) {
            throw IndexError("trigger position out of range");
        }
        if (i > 0 && trigger_positions[i] <= trigger_positions[i - 1]) {
            throw IndexError("trigger positions must be strictly increasing");
        }
    }
    if (user_position) {
        if (*user_position >= ids.size()) {
            throw IndexError("user position out of range");
        }
        if (std::find(trigger_positions.begin(), trigger_positions.end(), *user_position) != trigger_positions.end()) {
            throw IndexError("user position collides with a trigger position");
        }
    }
}

bool beam_before(const BeamHypothesis &a, const BeamHypothesis &b) {
    if (a.log_prob != b.log_prob) {
        return a.log_prob > b.log_prob;
    }
    return std::lexicographical_compare(a.ids.begin(), a.ids.end(), b.ids.begin(), b.ids.end());
}

// ---- FrozenSeq2Seq ----

FrozenSeq2Seq::FrozenSeq2Seq(ModelConfig config, std::vector<double> parameters)
    : config_(config), layout_(config_), parameters_(std::move(parameters)) {
    if (parameters_.size() != layout_.total_size()) {
        throw ArgumentError("parameter buffer has " + std::to_string(parameters_.size()) + " values, layout needs " +
                            std::to_string(layout_.total_size()));
    }
    for (double v : parameters_) {
        if (!std::isfinite(v)) {
            throw ArgumentError("model parameters must be finite");
        }
    }
}

std::vector<double> FrozenSeq2Seq::initial_parameters(const ModelConfig &config) {
    const ParameterLayout layout(config);
    std::vector<double> values(layout.total_size(), 0.0);
    std::mt19937_64 rng(static_cast<std::uint64_t>(config.seed));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto &t : layout.tensors()) {
        double *data = values.data() + t.offset;
        const bool is_gain = t.name.ends_with(".gain");
        const bool is_bias = t.rows == 1 && !is_gain;
        if (is_gain) {
            std::fill(data, data + t.size(), 1.0);
        } else if (is_bias) {
            continue;
        } else if (t.name == "embedding") {
            for (std::size_t i = 0; i < t.size(); ++i) {
                data[i] = 0.5 * normal(rng);
            }
        } else {
            const double scale = 1.0 / std::sqrt(static_cast<double>(t.rows));
            for (std::size_t i = 0; i < t.size(); ++i) {
                data[i] = scale * normal(rng);
            }
        }
    }
    return values;
}

FrozenSeq2Seq FrozenSeq2Seq::initialize(const ModelConfig &config) {
    return FrozenSeq2Seq(config, initial_parameters(config));
}

ConstMatrixMap FrozenSeq2Seq::embedding_table() const {
    return {parameters_.data() + layout_.embedding, static_cast<Eigen::Index>(config_.vocab_size),
            static_cast<Eigen::Index>(config_.embed_dim)};
}

std::uint64_t FrozenSeq2Seq::checksum() const {
    return fnv1a64({reinterpret_cast<const unsigned char *>(parameters_.data()), parameters_.size() * sizeof(double)});
}

void FrozenSeq2Seq::check_input(std::span<const TokenId> ids, std::span<const TokenId> target) const {
    if (ids.empty()) {
        throw LengthError("input sequence is empty");
    }
    if (ids.size() > config_.max_seq_len) {
        throw LengthError("input length " + std::to_string(ids.size()) + " exceeds max_seq_len " +
                          std::to_string(config_.max_seq_len));
    }
    if (target.size() > config_.max_seq_len) {
        throw LengthError("target length " + std::to_string(target.size()) + " exceeds max_seq_len " +
                          std::to_string(config_.max_seq_len));
    }
    const auto in_vocab = [this](TokenId id) { return id >= 0 && static_cast<std::size_t>(id) < config_.vocab_size; };
    for (TokenId id : ids) {
        if (!in_vocab(id)) {
            throw VocabError("input token id " + std::to_string(id) + " outside vocabulary");
        }
    }
    for (TokenId id : target) {
        if (!in_vocab(id)) {
            throw VocabError("target token id " + std::to_string(id) + " outside vocabulary");
        }
    }
}

Matrix FrozenSeq2Seq::input_embeddings(const TokenSequence &input) const {
    check_input(input.ids, {});
    return gather_rows(embedding_table(), input.ids);
}

double FrozenSeq2Seq::forward_loss(const TokenSequence &input, std::span<const TokenId> target) const {
    check_input(input.ids, target);
    if (target.empty()) {
        throw LengthError("target sequence is empty");
    }
    Network net(config_, layout_, parameters_.data(), nullptr);
    return net.loss_and_backward(gather_rows(embedding_table(), input.ids), {}, target, nullptr);
}

double FrozenSeq2Seq::forward_loss_embedded(const Matrix &input_embeddings, std::span<const TokenId> target) const {
    if (input_embeddings.rows() == 0 || static_cast<std::size_t>(input_embeddings.rows()) > config_.max_seq_len) {
        throw LengthError("embedded input length out of range");
    }
    if (static_cast<std::size_t>(input_embeddings.cols()) != config_.embed_dim) {
        throw ArgumentError("embedded input has wrong width");
    }
    if (target.empty()) {
        throw LengthError("target sequence is empty");
    }
    check_input(std::span<const TokenId>(&kPadId, 1), target);
    Network net(config_, layout_, parameters_.data(), nullptr);
    return net.loss_and_backward(input_embeddings, {}, target, nullptr);
}

std::vector<Vector> FrozenSeq2Seq::input_embedding_gradients(const TokenSequence &input,
                                                             std::span<const TokenId> target,
                                                             std::span<const std::size_t> positions) const {
    check_input(input.ids, target);
    if (target.empty()) {
        throw LengthError("target sequence is empty");
    }
    for (std::size_t pos : positions) {
        if (pos >= input.ids.size()) {
            throw IndexError("gradient position " + std::to_string(pos) + " outside input of length " +
                             std::to_string(input.ids.size()));
        }
    }
    Network net(config_, layout_, parameters_.data(), nullptr);
    Matrix d_src;
    net.loss_and_backward(gather_rows(embedding_table(), input.ids), {}, target, &d_src);
    std::vector<Vector> grads;
    grads.reserve(positions.size());
    for (std::size_t pos : positions) {
        grads.emplace_back(d_src.row(static_cast<Eigen::Index>(pos)).transpose());
    }
    return grads;
}

Vector FrozenSeq2Seq::next_token_log_probs(const TokenSequence &input, std::span<const TokenId> prefix) const {
    check_input(input.ids, prefix);
    if (prefix.size() + 1 > config_.max_seq_len) {
        throw LengthError("decoder prefix exceeds max_seq_len");
    }
    Network net(config_, layout_, parameters_.data(), nullptr);
    const Matrix memory = net.encode(gather_rows(embedding_table(), input.ids));
    std::vector<TokenId> dec_ids{kPadId};
    dec_ids.insert(dec_ids.end(), prefix.begin(), prefix.end());
    const Matrix hidden = net.decode(memory, dec_ids);
    return log_softmax_row(net.logits(hidden.bottomRows(1)));
}

std::vector<BeamHypothesis> FrozenSeq2Seq::beam_search(const TokenSequence &input, const BeamOptions &options) const {
    if (options.beam_size == 0) {
        throw ArgumentError("beam_size must be at least 1");
    }
    if (options.num_outputs == 0 || options.num_outputs > options.beam_size) {
        throw ArgumentError("num_outputs must lie in [1, beam_size]");
    }
    if (options.max_len == 0 || options.max_len > config_.max_seq_len) {
        throw LengthError("max_len must lie in [1, max_seq_len]");
    }
    check_input(input.ids, {});

    Network net(config_, layout_, parameters_.data(), nullptr);
    const Matrix memory = net.encode(gather_rows(embedding_table(), input.ids));

    struct Live {
        BeamHypothesis hyp;
        bool finished = false;
    };
    // Expansion of a parent beam; token < 0 marks a finished beam carried over.
    struct Expansion {
        std::size_t parent;
        TokenId token;
        double log_prob;
    };

    std::vector<Live> beams{Live{}};
    const auto vocab = static_cast<TokenId>(config_.vocab_size);
    for (std::size_t step = 0; step < options.max_len; ++step) {
        std::vector<Expansion> pool;
        for (std::size_t b = 0; b < beams.size(); ++b) {
            if (beams[b].finished) {
                pool.push_back({b, -1, beams[b].hyp.log_prob});
                continue;
            }
            std::vector<TokenId> dec_ids{kPadId};
            dec_ids.insert(dec_ids.end(), beams[b].hyp.ids.begin(), beams[b].hyp.ids.end());
            const Matrix hidden = net.decode(memory, dec_ids);
            const Vector log_probs = log_softmax_row(net.logits(hidden.bottomRows(1)));
            // Only the best beam_size continuations of a parent can survive.
            std::vector<TokenId> order(static_cast<std::size_t>(vocab));
            for (TokenId t = 0; t < vocab; ++t) {
                order[static_cast<std::size_t>(t)] = t;
            }
            const std::size_t keep = std::min<std::size_t>(options.beam_size, order.size());
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                              [&](TokenId x, TokenId y) {
                                  if (log_probs(x) != log_probs(y)) {
                                      return log_probs(x) > log_probs(y);
                                  }
                                  return x < y;
                              });
            for (std::size_t i = 0; i < keep; ++i) {
                pool.push_back({b, order[i], beams[b].hyp.log_prob + log_probs(order[i])});
            }
        }
        const auto before = [&](const Expansion &x, const Expansion &y) {
            if (x.log_prob != y.log_prob) {
                return x.log_prob > y.log_prob;
            }
            const auto &a = beams[x.parent].hyp.ids;
            const auto &c = beams[y.parent].hyp.ids;
            const std::size_t na = a.size() + (x.token >= 0 ? 1 : 0);
            const std::size_t nc = c.size() + (y.token >= 0 ? 1 : 0);
            for (std::size_t i = 0; i < std::min(na, nc); ++i) {
                const TokenId ta = i < a.size() ? a[i] : x.token;
                const TokenId tc = i < c.size() ? c[i] : y.token;
                if (ta != tc) {
                    return ta < tc;
                }
            }
            return na < nc;
        };
        const std::size_t keep = std::min(options.beam_size, pool.size());
        std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(keep), pool.end(), before);
        std::vector<Live> next;
        next.reserve(keep);
        bool all_finished = true;
        for (std::size_t i = 0; i < keep; ++i) {
            const auto &e = pool[i];
            Live live = beams[e.parent];
            if (e.token >= 0) {
                live.hyp.ids.push_back(e.token);
                live.hyp.log_prob = e.log_prob;
                live.finished = e.token == kEosId;
            }
            all_finished = all_finished && live.finished;
            next.push_back(std::move(live));
        }
        beams = std::move(next);
        if (all_finished) {
            break;
        }
    }
    std::vector<BeamHypothesis> out;
    out.reserve(beams.size());
    for (auto &b : beams) {
        out.push_back(std::move(b.hyp));
    }
    std::sort(out.begin(), out.end(), beam_before);
    out.resize(std::min(out.size(), options.num_outputs));
    return out;
}

double accumulate_parameter_gradients(const ModelConfig &config, const ParameterLayout &layout,
                                      std::span<const double> parameters, std::span<const TokenId> input,
                                      std::span<const TokenId> target, std::span<double> gradients) {
    if (parameters.size() != layout.total_size() || gradients.size() != layout.total_size()) {
        throw ArgumentError("parameter/gradient buffers do not match the layout");
    }
    if (input.empty() || target.empty()) {
        throw LengthError("input and target must be non-empty");
    }
    if (input.size() > config.max_seq_len || target.size() > config.max_seq_len) {
        throw LengthError("sequence exceeds max_seq_len");
    }
    const ConstMatrixMap table(parameters.data() + layout.embedding, static_cast<Eigen::Index>(config.vocab_size),
                               static_cast<Eigen::Index>(config.embed_dim));
    Network net(config, layout, parameters.data(), gradients.data());
    return net.loss_and_backward(gather_rows(table, input), input, target, nullptr);
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (unsigned char byte : bytes) {
        hash ^= byte;
        hash *= 1099511628211ULL;
    }
    return hash;
}

} // namespace promptforge
