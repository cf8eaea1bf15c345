#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace promptforge {

using TokenId = std::int32_t;

// Special tokens occupy the first four ids of every vocabulary.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kEosId = 1;
inline constexpr TokenId kSepId = 2;
inline constexpr TokenId kDefaultTriggerId = 3;
inline constexpr TokenId kNumSpecials = 4;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kSepToken = ":";
inline constexpr std::string_view kDefaultTriggerToken = "?";

class Vocab {
  public:
    Vocab();

    // Adds a token and returns its id; returns the existing id for known tokens.
    TokenId add(std::string_view token);

    TokenId id(std::string_view token) const;
    std::optional<TokenId> find(std::string_view token) const;
    const std::string &token(TokenId id) const;
    bool contains(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < tokens_.size(); }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string> &tokens() const { return tokens_; }

    static bool is_special(TokenId id) { return id >= 0 && id < kNumSpecials; }

    // Whitespace tokenization; every piece must already be in the vocabulary.
    std::vector<TokenId> encode(std::string_view text) const;
    std::string decode(std::span<const TokenId> ids) const;

    void save(const std::filesystem::path &path) const;
    static Vocab load(const std::filesystem::path &path);

  private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
};

std::vector<std::string> split_whitespace(std::string_view text);

} // namespace promptforge
