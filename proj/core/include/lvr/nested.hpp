#pragma once

#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "lvr/tokenizer.hpp"

namespace lvr {

// Re-tokenizes each outer token's surface with an inner tokenizer over a
// sub-vocabulary. Every inner surface must also be an outer surface and both
// vocabularies share one alphabet.
//
// Per-token inner encodings are computed once at construction.
class NestedTokenizer {
 public:
  NestedTokenizer(std::shared_ptr<const Tokenizer> outer,
                  std::shared_ptr<const Tokenizer> inner);

  const Tokenizer& outer() const { return *outer_; }
  const Tokenizer& inner() const { return *inner_; }
  const std::shared_ptr<const Tokenizer>& outer_ptr() const { return outer_; }
  const std::shared_ptr<const Tokenizer>& inner_ptr() const { return inner_; }

  // Inner encoding of a single outer token's surface.
  std::span<const TokenId> nested_of(TokenId outer_token) const;
  TokenId first_subtoken(TokenId outer_token) const {
    return nested_of(outer_token).front();
  }
  // Outer id carrying the same surface as an inner token.
  TokenId outer_id_of(TokenId inner_token) const;

  // Concatenated per-token inner encodings of an outer token sequence.
  TokenSeq encode(std::span<const TokenId> outer_tokens) const;
  // Outer encode followed by encode(outer tokens).
  TokenSeq encode_text(std::string_view text) const;

 private:
  std::shared_ptr<const Tokenizer> outer_;
  std::shared_ptr<const Tokenizer> inner_;
  std::vector<TokenSeq> per_token_;
  std::vector<TokenId> inner_to_outer_;
};

}  // namespace lvr
