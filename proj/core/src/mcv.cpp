#include "lvr/mcv.hpp"

#include "lvr/error.hpp"

namespace lvr {

Vocabulary intersect_vocabs(std::span<const Vocabulary* const> vocabs) {
  if (vocabs.size() < 2) throw Error("intersection needs at least two vocabularies");
  const Vocabulary& first = *vocabs[0];
  for (const Vocabulary* v : vocabs.subspan(1)) {
    if (!(v->alphabet() == first.alphabet())) {
      throw Error("vocabularies are over different alphabets");
    }
  }
  std::vector<ByteText> common;
  for (const ByteText& s : first.surfaces()) {
    bool everywhere = true;
    for (const Vocabulary* v : vocabs.subspan(1)) everywhere = everywhere && v->find(s);
    if (everywhere) common.push_back(s);
  }
  Vocabulary result(first.alphabet(), std::move(common));
  if (!result.complete()) {
    throw Error("common vocabulary misses a single symbol of the alphabet");
  }
  return result;
}

std::vector<MergePair> restrict_merges(const Vocabulary& from,
                                       std::span<const MergePair> merges,
                                       const Vocabulary& v_cap) {
  std::vector<MergePair> kept;
  for (const auto& [l, r] : merges) {
    const ByteText& left = from.surface(l);
    const ByteText& right = from.surface(r);
    auto cl = v_cap.find(left);
    auto cr = v_cap.find(right);
    if (cl && cr && v_cap.find(left + right)) kept.emplace_back(*cl, *cr);
  }
  return kept;
}

McvResult build_mcv(std::span<const BpeTokenizer* const> tokenizers) {
  std::vector<const Vocabulary*> vocabs;
  for (const BpeTokenizer* t : tokenizers) vocabs.push_back(&t->vocab());
  McvResult r;
  r.vocab = std::make_shared<const Vocabulary>(intersect_vocabs(vocabs));
  r.merges = restrict_merges(tokenizers[0]->vocab(), tokenizers[0]->merges(), *r.vocab);
  r.source = 0;
  r.tokenizer = std::make_shared<const BpeTokenizer>(r.vocab, r.merges);
  return r;
}

}  // namespace lvr
