#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lvr {

// Texts are raw symbol strings; with the default alphabet a symbol is a byte.
using ByteText = std::string;
using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// The finite symbol set A that texts are drawn from. An alphabet may reserve
// one of its symbols as the end-of-sequence marker.
class Alphabet {
 public:
  // All 256 byte values, no EOS symbol.
  static Alphabet bytes();
  // The distinct symbols of `symbols`, in first-occurrence order.
  static Alphabet of(std::string_view symbols,
                     std::optional<unsigned char> eos = std::nullopt);

  bool contains(unsigned char symbol) const { return member_[symbol]; }
  std::span<const unsigned char> symbols() const { return symbols_; }
  std::size_t size() const { return symbols_.size(); }
  std::optional<unsigned char> eos() const { return eos_; }

  // Returns a copy of this alphabet with `eos` reserved (it must be a member).
  Alphabet with_eos(unsigned char eos) const;
  bool is_full_bytes() const { return symbols_.size() == 256; }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.member_ == b.member_ && a.eos_ == b.eos_;
  }

 private:
  Alphabet() = default;

  std::array<bool, 256> member_{};
  std::vector<unsigned char> symbols_;
  std::optional<unsigned char> eos_;
};

// Escapes a surface for the vocabulary and merges file formats: backslash,
// control bytes and bytes outside well-formed UTF-8 become \xNN.
std::string escape_surface(std::string_view raw);
// Inverse of escape_surface. Throws ParseError on a malformed escape.
ByteText unescape_surface(std::string_view escaped);

// Lower-case hex rendering of every byte ("001" -> "303031").
std::string to_hex(std::string_view raw);

inline bool starts_with(std::string_view text, std::string_view prefix) {
  return text.substr(0, prefix.size()) == prefix;
}

inline bool starts_with(std::span<const TokenId> seq,
                        std::span<const TokenId> prefix) {
  if (prefix.size() > seq.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (seq[i] != prefix[i]) return false;
  }
  return true;
}

struct TokenSeqHash {
  std::size_t operator()(const TokenSeq& seq) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (TokenId id : seq) {
      h ^= id + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace lvr
