#include "promptforge/vocab.hpp"

#include <fstream>
#include <sstream>

#include "promptforge/errors.hpp"

namespace promptforge {

Vocab::Vocab() {
    add(kPadToken);
    add(kEosToken);
    add(kSepToken);
    add(kDefaultTriggerToken);
}

TokenId Vocab::add(std::string_view token) {
    if (token.empty() || token.find_first_of(" \t\r\n") != std::string_view::npos) {
        throw VocabError("invalid token '" + std::string(token) + "'");
    }
    auto it = index_.find(std::string(token));
    if (it != index_.end()) {
        return it->second;
    }
    const auto id = static_cast<TokenId>(tokens_.size());
    tokens_.emplace_back(token);
    index_.emplace(tokens_.back(), id);
    return id;
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

TokenId Vocab::id(std::string_view token) const {
    if (auto found = find(token)) {
        return *found;
    }
    throw VocabError("unknown token '" + std::string(token) + "'");
}

const std::string &Vocab::token(TokenId id) const {
    if (!contains(id)) {
        throw VocabError("token id " + std::to_string(id) + " out of range");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocab::encode(std::string_view text) const {
    std::vector<TokenId> ids;
    for (const auto &piece : split_whitespace(text)) {
        ids.push_back(id(piece));
    }
    return ids;
}

std::string Vocab::decode(std::span<const TokenId> ids) const {
    std::string out;
    for (TokenId id : ids) {
        if (!out.empty()) {
            out += ' ';
        }
        out += token(id);
    }
    return out;
}

void Vocab::save(const std::filesystem::path &path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write vocabulary to " + path.string());
    }
    for (const auto &tok : tokens_) {
        out << tok << '\n';
    }
}

Vocab Vocab::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read vocabulary from " + path.string());
    }
    Vocab vocab;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_no <= static_cast<std::size_t>(kNumSpecials)) {
            if (line != vocab.tokens_[line_no - 1]) {
                throw ParseError(line_no, "expected special token '" + vocab.tokens_[line_no - 1] + "'");
            }
            continue;
        }
        if (vocab.find(line)) {
            throw ParseError(line_no, "duplicate token '" + line + "'");
        }
        vocab.add(line);
    }
    if (line_no < static_cast<std::size_t>(kNumSpecials)) {
        throw ParseError(line_no, "vocabulary is missing special tokens");
    }
    return vocab;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> pieces;
    std::istringstream stream{std::string(text)};
    std::string piece;
    while (stream >> piece) {
        pieces.push_back(piece);
    }
    return pieces;
}

} // namespace promptforge
