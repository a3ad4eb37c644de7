#include "lvr/nested.hpp"

#include "lvr/error.hpp"

namespace lvr {

NestedTokenizer::NestedTokenizer(std::shared_ptr<const Tokenizer> outer,
                                 std::shared_ptr<const Tokenizer> inner)
    : outer_(std::move(outer)), inner_(std::move(inner)) {
  if (!outer_ || !inner_) throw Error("nested tokenizer needs two tokenizers");
  const Vocabulary& ov = outer_->vocab();
  const Vocabulary& iv = inner_->vocab();
  if (!(ov.alphabet() == iv.alphabet())) {
    throw Error("outer and inner vocabularies use different alphabets");
  }
  if (!iv.complete()) {
    throw Error("inner vocabulary must contain every alphabet symbol");
  }
  inner_to_outer_.reserve(iv.size());
  for (const ByteText& s : iv.surfaces()) {
    auto id = ov.find(s);
    if (!id) {
      throw Error("sub-vocabulary token \"" + escape_surface(s) +
                  "\" is not in the outer vocabulary");
    }
    inner_to_outer_.push_back(*id);
  }
  per_token_.reserve(ov.size());
  for (const ByteText& s : ov.surfaces()) per_token_.push_back(inner_->encode(s));
}

std::span<const TokenId> NestedTokenizer::nested_of(TokenId outer_token) const {
  if (outer_token >= per_token_.size()) {
    throw Error("unknown outer token id " + std::to_string(outer_token));
  }
  return per_token_[outer_token];
}

TokenId NestedTokenizer::outer_id_of(TokenId inner_token) const {
  if (inner_token >= inner_to_outer_.size()) {
    throw Error("unknown inner token id " + std::to_string(inner_token));
  }
  return inner_to_outer_[inner_token];
}

TokenSeq NestedTokenizer::encode(std::span<const TokenId> outer_tokens) const {
  TokenSeq out;
  for (TokenId x : outer_tokens) {
    auto sub = nested_of(x);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

TokenSeq NestedTokenizer::encode_text(std::string_view text) const {
  return encode(outer_->encode(text));
}

}  // namespace lvr
