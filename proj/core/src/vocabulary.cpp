#include "lvr/vocabulary.hpp"

#include <algorithm>

#include "lvr/error.hpp"

namespace lvr {

Vocabulary::Vocabulary(Alphabet alphabet, std::vector<ByteText> surfaces)
    : alphabet_(std::move(alphabet)), surfaces_(std::move(surfaces)) {
  const auto eos_symbol = alphabet_.eos();
  for (std::size_t id = 0; id < surfaces_.size(); ++id) {
    const ByteText& s = surfaces_[id];
    if (s.empty()) {
      throw Error("token " + std::to_string(id) + " has an empty surface");
    }
    for (char c : s) {
      auto sym = static_cast<unsigned char>(c);
      if (!alphabet_.contains(sym)) {
        throw Error("token \"" + escape_surface(s) +
                    "\" uses a symbol outside the alphabet");
      }
      if (eos_symbol && sym == *eos_symbol && s.size() > 1) {
        throw Error("token \"" + escape_surface(s) +
                    "\" contains the EOS symbol");
      }
    }
    auto [it, inserted] = index_.emplace(s, static_cast<TokenId>(id));
    if (!inserted) {
      throw Error("duplicate token surface \"" + escape_surface(s) + "\"");
    }
    if (s.size() == 1) {
      symbol_tokens_[static_cast<unsigned char>(s[0])] = static_cast<TokenId>(id);
    }
    max_len_ = std::max(max_len_, s.size());
  }
  complete_ = std::all_of(
      alphabet_.symbols().begin(), alphabet_.symbols().end(),
      [&](unsigned char sym) { return symbol_tokens_[sym].has_value(); });
  if (eos_symbol) {
    eos_ = symbol_tokens_[*eos_symbol];
    if (!eos_) throw Error("vocabulary lacks the EOS token");
  }
}

const ByteText& Vocabulary::surface(TokenId id) const {
  if (id >= surfaces_.size()) {
    throw Error("unknown token id " + std::to_string(id) + " (vocabulary size " +
                std::to_string(surfaces_.size()) + ")");
  }
  return surfaces_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view surface) const {
  auto it = index_.find(surface);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ByteText Vocabulary::decode(std::span<const TokenId> tokens) const {
  ByteText out;
  for (TokenId id : tokens) out += surface(id);
  return out;
}

Vocabulary symbol_vocabulary(const Alphabet& alphabet) {
  std::vector<ByteText> surfaces;
  surfaces.reserve(alphabet.size());
  for (unsigned char sym : alphabet.symbols()) {
    surfaces.emplace_back(1, static_cast<char>(sym));
  }
  return Vocabulary(alphabet, std::move(surfaces));
}

}  // namespace lvr
