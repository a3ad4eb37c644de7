#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lvr/text.hpp"

namespace lvr {

// An ordered set of tokens over an alphabet. Token ids are dense indices into
// the surface list; surfaces are nonempty and pairwise distinct.
//
// If the alphabet reserves an EOS symbol, the vocabulary must contain it as a
// single-symbol token and no other surface may contain that symbol.
class Vocabulary {
 public:
  Vocabulary(Alphabet alphabet, std::vector<ByteText> surfaces);

  std::size_t size() const { return surfaces_.size(); }
  const Alphabet& alphabet() const { return alphabet_; }
  std::span<const ByteText> surfaces() const { return surfaces_; }

  // Throws Error for an id outside [0, size()).
  const ByteText& surface(TokenId id) const;
  bool contains(TokenId id) const { return id < surfaces_.size(); }
  std::optional<TokenId> find(std::string_view surface) const;

  // True iff every symbol of the alphabet is a single-symbol token.
  bool complete() const { return complete_; }
  std::optional<TokenId> eos() const { return eos_; }
  bool is_eos(TokenId id) const { return eos_ && *eos_ == id; }
  std::optional<TokenId> symbol_token(unsigned char symbol) const {
    return symbol_tokens_[symbol];
  }
  std::size_t max_surface_length() const { return max_len_; }

  // Concatenation of surfaces. Throws Error on an unknown id.
  ByteText decode(std::span<const TokenId> tokens) const;

  // Same surfaces in the same order, over the same alphabet.
  bool same_as(const Vocabulary& other) const {
    return alphabet_ == other.alphabet_ && surfaces_ == other.surfaces_;
  }

 private:
  Alphabet alphabet_;
  std::vector<ByteText> surfaces_;
  std::map<ByteText, TokenId, std::less<>> index_;
  std::array<std::optional<TokenId>, 256> symbol_tokens_{};
  std::optional<TokenId> eos_;
  std::size_t max_len_ = 0;
  bool complete_ = false;
};

// Single-symbol vocabulary covering every symbol of `alphabet`, in alphabet
// order.
Vocabulary symbol_vocabulary(const Alphabet& alphabet);

}  // namespace lvr
