#include "m4sc/semantic/vocab.hpp"

#include <sstream>

#include "m4sc/errors.hpp"

namespace m4sc::semantic {

namespace {

// Task tags, scene words, question words, review words, punctuation.
constexpr std::string_view kOtherWords[] = {
    "<caption>", "<vqa>",   "<textclass>", "describe", "the",      "image",    "what",
    "how",       "many",    "objects",     "are",      "there",    "is",       "object",
    "color",     "shape",   "size",        ",",        ":",        "movie",    "film",
    "story",     "acting",  "plot",        "was",      "i",        "really",   "very",
    "great",     "wonderful", "excellent", "loved",    "enjoyed",  "terrible", "boring",
    "awful",     "hated",   "dull",        "a",
};

}  // namespace

Vocabulary::Vocabulary() {
  auto add = [this](std::string_view w) {
    index_.emplace(std::string(w), words_.size());
    words_.emplace_back(w);
  };
  for (auto w : kShapes) add(w);
  for (auto w : kColors) add(w);
  for (auto w : kSizes) add(w);
  for (std::size_t n = 1; n <= kMaxObjects; ++n) add(std::to_string(n));
  for (auto w : kSentiments) add(w);
  for (auto w : kOtherWords) add(w);
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary vocab;
  return vocab;
}

const std::string& Vocabulary::word(TokenId id) const {
  if (id >= words_.size()) throw VocabularyError("token id " + std::to_string(id) + " out of range");
  return words_[id];
}

TokenId Vocabulary::id(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  if (it == index_.end()) throw VocabularyError("unknown token '" + std::string(word) + "'");
  return it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return index_.contains(std::string(word));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) ids.push_back(id(w));
  return ids;
}

}  // namespace m4sc::semantic
