#pragma once

#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "lvr/text.hpp"
#include "lvr/vocabulary.hpp"

namespace lvr {

// A deterministic encoder/decoder pair over one vocabulary. Implementations
// guarantee decode(encode(t)) == t for every text over the alphabet and are
// immutable after construction, so they can be shared across threads.
class Tokenizer {
 public:
  explicit Tokenizer(std::shared_ptr<const Vocabulary> vocab);
  virtual ~Tokenizer() = default;

  Tokenizer(const Tokenizer&) = delete;
  Tokenizer& operator=(const Tokenizer&) = delete;

  const Vocabulary& vocab() const { return *vocab_; }
  const std::shared_ptr<const Vocabulary>& vocab_ptr() const { return vocab_; }

  // Throws Error if the text has a symbol the vocabulary cannot match.
  virtual TokenSeq encode(std::string_view text) const = 0;

  ByteText decode(std::span<const TokenId> tokens) const {
    return vocab_->decode(tokens);
  }

  // True iff encode(decode(tokens)) reproduces `tokens`. Unknown ids are
  // never valid.
  bool is_valid(std::span<const TokenId> tokens) const;

  // is_valid(prefix ++ [next]) for a prefix whose decoded text is
  // `prefix_text`.
  bool is_valid_extension(std::span<const TokenId> prefix,
                          std::string_view prefix_text, TokenId next) const;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
};

// Longest-match-first encoder: scanning left to right, each step consumes the
// longest vocabulary surface that prefixes the remaining text.
class GreedyTokenizer final : public Tokenizer {
 public:
  explicit GreedyTokenizer(std::shared_ptr<const Vocabulary> vocab);

  TokenSeq encode(std::string_view text) const override;
};

using MergePair = std::pair<TokenId, TokenId>;

// Byte-pair encoder: the text starts as single-symbol tokens and the
// lowest-rank applicable merge is applied (leftmost occurrence first) until no
// merge applies. Rank is the position in the merge list.
class BpeTokenizer final : public Tokenizer {
 public:
  BpeTokenizer(std::shared_ptr<const Vocabulary> vocab,
               std::vector<MergePair> merges);

  TokenSeq encode(std::string_view text) const override;

  std::span<const MergePair> merges() const { return merges_; }

 private:
  struct MergeInfo {
    std::size_t rank;
    TokenId product;
  };

  std::vector<MergePair> merges_;
  std::map<MergePair, MergeInfo> ranks_;
};

// Builds BPE merges from surface pairs, resolving them against `vocab`.
std::vector<MergePair> resolve_merges(
    const Vocabulary& vocab,
    std::span<const std::pair<ByteText, ByteText>> surface_pairs);

}  // namespace lvr
