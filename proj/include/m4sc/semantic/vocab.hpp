#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace m4sc::semantic {

using TokenId = std::size_t;

inline constexpr std::array<std::string_view, 3> kShapes = {"cube", "sphere", "cylinder"};
inline constexpr std::array<std::string_view, 8> kColors = {"gray",  "red",    "blue", "green",
                                                            "brown", "purple", "cyan", "yellow"};
inline constexpr std::array<std::string_view, 2> kSizes = {"small", "large"};
inline constexpr std::size_t kMaxObjects = 6;
inline constexpr std::array<std::string_view, 2> kSentiments = {"positive", "negative"};

/// Closed vocabulary shared by the dataset generator and the semantic model.
/// Token order is fixed; ids are stable across builds.
class Vocabulary {
 public:
  Vocabulary();

  static const Vocabulary& standard();

  std::size_t size() const { return words_.size(); }
  const std::string& word(TokenId id) const;
  /// Throws VocabularyError naming the token.
  TokenId id(std::string_view word) const;
  bool contains(std::string_view word) const;

  /// Splits on whitespace and maps each word to its id.
  std::vector<TokenId> tokenize(std::string_view text) const;

  TokenId shape(std::size_t i) const { return id(kShapes.at(i)); }
  TokenId color(std::size_t i) const { return id(kColors.at(i)); }
  TokenId size_word(std::size_t i) const { return id(kSizes.at(i)); }
  TokenId count(std::size_t n) const { return id(std::to_string(n)); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

std::vector<std::string> split_words(std::string_view text);

}  // namespace m4sc::semantic
