#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lvr/tokenizer.hpp"

namespace lvr {

// Maximal common vocabulary of several BPE tokenizers together with the BPE
// tokenizer built from the first tokenizer's merges.
struct McvResult {
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<MergePair> merges;  // ids into `vocab`
  std::size_t source = 0;         // input whose merges were restricted
  std::shared_ptr<const BpeTokenizer> tokenizer;
};

// Surfaces present in every vocabulary, in the first vocabulary's order.
// Throws Error for fewer than two inputs, mismatched alphabets, or an
// intersection missing a single symbol of the alphabet.
Vocabulary intersect_vocabs(std::span<const Vocabulary* const> vocabs);

// Order-preserving filter of `merges` (ids into `from`) keeping pairs whose
// product and both operands are in `v_cap`. Returned ids index `v_cap`.
std::vector<MergePair> restrict_merges(const Vocabulary& from,
                                       std::span<const MergePair> merges,
                                       const Vocabulary& v_cap);

McvResult build_mcv(std::span<const BpeTokenizer* const> tokenizers);

}  // namespace lvr
