#include "promptforge/weights.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "promptforge/errors.hpp"

namespace promptforge {

namespace {

class ByteWriter {
  public:
    void raw(const void *data, std::size_t n) {
        const auto *p = static_cast<const unsigned char *>(data);
        bytes_.insert(bytes_.end(), p, p + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
        }
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    const std::vector<unsigned char> &bytes() const { return bytes_; }

  private:
    std::vector<unsigned char> bytes_;
};

class ByteReader {
  public:
    explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

    void need(std::size_t n, const char *what) const {
        if (pos_ + n > bytes_.size()) {
            throw FormatError(FormatError::Kind::Truncated, std::string("weight file truncated while reading ") + what);
        }
    }
    std::uint32_t u32(const char *what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
        }
        return v;
    }
    std::uint64_t u64(const char *what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        }
        return v;
    }
    double f64(const char *what) { return std::bit_cast<double>(u64(what)); }
    std::size_t pos() const { return pos_; }
    std::span<const unsigned char> consumed() const { return bytes_.first(pos_); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

  private:
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

void save_weights(const FrozenSeq2Seq &model, const std::filesystem::path &path) {
    const ModelConfig &c = model.config();
    ByteWriter w;
    w.raw(kWeightMagic, sizeof(kWeightMagic));
    w.u32(kWeightFormatVersion);
    w.u64(c.vocab_size);
    w.u64(c.embed_dim);
    w.u64(c.num_encoder_layers);
    w.u64(c.num_decoder_layers);
    w.u64(c.num_heads);
    w.u64(c.feedforward_dim);
    w.u64(c.max_seq_len);
    w.u64(static_cast<std::uint64_t>(c.seed));
    for (double v : model.parameters()) {
        w.f64(v);
    }
    w.u64(fnv1a64(w.bytes()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write weights to " + path.string());
    }
    out.write(reinterpret_cast<const char *>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
    if (!out) {
        throw IoError("failed writing weights to " + path.string());
    }
}

FrozenSeq2Seq load_weights(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read weights from " + path.string());
    }
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < sizeof(kWeightMagic)) {
        throw FormatError(FormatError::Kind::Truncated, "weight file truncated while reading magic");
    }
    if (std::memcmp(bytes.data(), kWeightMagic, sizeof(kWeightMagic)) != 0) {
        throw FormatError(FormatError::Kind::BadMagic, "not a promptforge weight file: " + path.string());
    }
    ByteReader body(std::span<const unsigned char>(bytes).subspan(sizeof(kWeightMagic)));
    const std::uint32_t version = body.u32("version");
    if (version != kWeightFormatVersion) {
        throw FormatError(FormatError::Kind::VersionMismatch,
                          "unsupported weight format version " + std::to_string(version));
    }
    ModelConfig c;
    c.vocab_size = body.u64("config");
    c.embed_dim = body.u64("config");
    c.num_encoder_layers = body.u64("config");
    c.num_decoder_layers = body.u64("config");
    c.num_heads = body.u64("config");
    c.feedforward_dim = body.u64("config");
    c.max_seq_len = body.u64("config");
    c.seed = static_cast<std::int64_t>(body.u64("config"));
    try {
        c.validate();
    } catch (const ArgumentError &e) {
        throw FormatError(FormatError::Kind::Malformed, std::string("invalid config block: ") + e.what());
    }
    const ParameterLayout layout(c);
    const std::size_t expected = sizeof(kWeightMagic) + 4 + 8 * 8 + 8 * layout.total_size() + 8;
    if (bytes.size() < expected) {
        throw FormatError(FormatError::Kind::Truncated, "weight file truncated: " + std::to_string(bytes.size()) +
                                                            " of " + std::to_string(expected) + " bytes");
    }
    if (bytes.size() > expected) {
        throw FormatError(FormatError::Kind::Malformed, "trailing bytes after weight checksum");
    }
    std::vector<double> params(layout.total_size());
    for (auto &v : params) {
        v = body.f64("parameters");
    }
    const std::uint64_t stored = body.u64("checksum");
    const std::uint64_t actual = fnv1a64(std::span<const unsigned char>(bytes).first(expected - 8));
    if (stored != actual) {
        throw FormatError(FormatError::Kind::Checksum, "weight file checksum mismatch");
    }
    try {
        return FrozenSeq2Seq(c, std::move(params));
    } catch (const ArgumentError &e) {
        throw FormatError(FormatError::Kind::Malformed, e.what());
    }
}

} // namespace promptforge
