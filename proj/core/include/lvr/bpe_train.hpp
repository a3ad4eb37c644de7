#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lvr/tokenizer.hpp"

namespace lvr {

struct BpeModel {
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<MergePair> merges;
  std::shared_ptr<const BpeTokenizer> tokenizer;
};

// Learns up to `num_merges` merges from a corpus by repeatedly merging the
// most frequent adjacent pair (ties: lexicographically smallest surfaces).
// Stops early once no pair occurs at least twice. The vocabulary lists the
// alphabet symbols first, then merge products in learning order.
BpeModel train_bpe(std::span<const ByteText> corpus, const Alphabet& alphabet,
                   std::size_t num_merges);

}  // namespace lvr
