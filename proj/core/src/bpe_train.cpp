#include "lvr/bpe_train.hpp"

#include <map>
#include <tuple>

#include "lvr/error.hpp"

namespace lvr {

BpeModel train_bpe(std::span<const ByteText> corpus, const Alphabet& alphabet,
                   std::size_t num_merges) {
  std::vector<ByteText> surfaces;
  std::map<ByteText, TokenId, std::less<>> index;
  for (unsigned char sym : alphabet.symbols()) {
    index.emplace(ByteText(1, static_cast<char>(sym)),
                  static_cast<TokenId>(surfaces.size()));
    surfaces.emplace_back(1, static_cast<char>(sym));
  }
  const auto eos = alphabet.eos();

  std::vector<TokenSeq> docs;
  docs.reserve(corpus.size());
  for (const ByteText& doc : corpus) {
    TokenSeq seq;
    for (char c : doc) {
      auto sym = static_cast<unsigned char>(c);
      if (!alphabet.contains(sym)) {
        throw Error("corpus symbol outside the alphabet");
      }
      seq.push_back(index.at(ByteText(1, c)));
    }
    docs.push_back(std::move(seq));
  }
  auto is_eos = [&](TokenId id) {
    return eos && surfaces[id].size() == 1 &&
           static_cast<unsigned char>(surfaces[id][0]) == *eos;
  };

  std::vector<MergePair> merges;
  while (merges.size() < num_merges) {
    std::map<MergePair, std::size_t> counts;
    for (const TokenSeq& seq : docs) {
      for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        if (is_eos(seq[i]) || is_eos(seq[i + 1])) continue;
        ++counts[{seq[i], seq[i + 1]}];
      }
    }
    const MergePair* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [pair, count] : counts) {
      if (count < 2) continue;
      if (!best || count > best_count ||
          (count == best_count &&
           std::tie(surfaces[pair.first], surfaces[pair.second]) <
               std::tie(surfaces[best->first], surfaces[best->second]))) {
        best = &pair;
        best_count = count;
      }
    }
    if (!best) break;
    const MergePair pair = *best;
    const ByteText product = surfaces[pair.first] + surfaces[pair.second];
    auto [it, inserted] =
        index.emplace(product, static_cast<TokenId>(surfaces.size()));
    if (inserted) surfaces.push_back(product);
    const TokenId product_id = it->second;
    merges.push_back(pair);

    for (TokenSeq& seq : docs) {
      TokenSeq merged;
      merged.reserve(seq.size());
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i + 1 < seq.size() && seq[i] == pair.first && seq[i + 1] == pair.second) {
          merged.push_back(product_id);
          ++i;
        } else {
          merged.push_back(seq[i]);
        }
      }
      seq = std::move(merged);
    }
  }

  BpeModel model;
  model.vocab = std::make_shared<const Vocabulary>(alphabet, std::move(surfaces));
  model.merges = merges;
  model.tokenizer = std::make_shared<const BpeTokenizer>(model.vocab, std::move(merges));
  return model;
}

}  // namespace lvr
