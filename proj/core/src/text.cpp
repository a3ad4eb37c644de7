#include "lvr/text.hpp"

#include "lvr/error.hpp"

namespace lvr {

Alphabet Alphabet::bytes() {
  Alphabet a;
  a.symbols_.reserve(256);
  for (int b = 0; b < 256; ++b) {
    a.member_[b] = true;
    a.symbols_.push_back(static_cast<unsigned char>(b));
  }
  return a;
}

Alphabet Alphabet::of(std::string_view symbols,
                      std::optional<unsigned char> eos) {
  Alphabet a;
  for (char c : symbols) {
    auto s = static_cast<unsigned char>(c);
    if (!a.member_[s]) {
      a.member_[s] = true;
      a.symbols_.push_back(s);
    }
  }
  if (a.symbols_.empty()) throw Error("alphabet must not be empty");
  if (eos) a = a.with_eos(*eos);
  return a;
}

Alphabet Alphabet::with_eos(unsigned char eos) const {
  if (!member_[eos]) {
    throw Error("EOS symbol \\x" + to_hex(std::string(1, static_cast<char>(eos))) +
                " is not part of the alphabet");
  }
  Alphabet a = *this;
  a.eos_ = eos;
  return a;
}

namespace {

// Length of the well-formed UTF-8 sequence starting at s[i], or 0.
std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  auto b0 = static_cast<unsigned char>(s[i]);
  std::size_t n = 0;
  unsigned char lo = 0x80, hi = 0xBF;
  if (b0 >= 0xC2 && b0 <= 0xDF) {
    n = 2;
  } else if (b0 >= 0xE0 && b0 <= 0xEF) {
    n = 3;
    if (b0 == 0xE0) lo = 0xA0;
    if (b0 == 0xED) hi = 0x9F;
  } else if (b0 >= 0xF0 && b0 <= 0xF4) {
    n = 4;
    if (b0 == 0xF0) lo = 0x90;
    if (b0 == 0xF4) hi = 0x8F;
  } else {
    return 0;
  }
  if (i + n > s.size()) return 0;
  auto b1 = static_cast<unsigned char>(s[i + 1]);
  if (b1 < lo || b1 > hi) return 0;
  for (std::size_t k = 2; k < n; ++k) {
    auto b = static_cast<unsigned char>(s[i + k]);
    if (b < 0x80 || b > 0xBF) return 0;
  }
  return n;
}

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

void append_escape(std::string& out, unsigned char b) {
  out += "\\x";
  out += kHexDigits[b >> 4];
  out += kHexDigits[b & 0xF];
}

}  // namespace

std::string escape_surface(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    auto b = static_cast<unsigned char>(raw[i]);
    if (b == '\\' || b < 0x20 || b == 0x7F) {
      append_escape(out, b);
      ++i;
    } else if (b < 0x80) {
      out += static_cast<char>(b);
      ++i;
    } else if (std::size_t n = utf8_sequence_length(raw, i); n > 0) {
      out.append(raw.substr(i, n));
      i += n;
    } else {
      append_escape(out, b);
      ++i;
    }
  }
  return out;
}

ByteText unescape_surface(std::string_view escaped) {
  ByteText out;
  out.reserve(escaped.size());
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    if (escaped[i] != '\\') {
      out += escaped[i];
      continue;
    }
    int hi = -1, lo = -1;
    if (i + 3 < escaped.size() && escaped[i + 1] == 'x') {
      hi = hex_value(escaped[i + 2]);
      lo = hex_value(escaped[i + 3]);
    }
    if (hi < 0 || lo < 0) {
      throw ParseError("malformed escape in surface \"" + std::string(escaped) +
                       "\" (expected \\xNN)");
    }
    out += static_cast<char>((hi << 4) | lo);
    i += 3;
  }
  return out;
}

std::string to_hex(std::string_view raw) {
  std::string out;
  out.reserve(raw.size() * 2);
  for (char c : raw) {
    auto b = static_cast<unsigned char>(c);
    out += kHexDigits[b >> 4];
    out += kHexDigits[b & 0xF];
  }
  return out;
}

}  // namespace lvr
