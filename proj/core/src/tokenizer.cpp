#include "lvr/tokenizer.hpp"

#include <algorithm>
#include <queue>
#include <tuple>

#include "lvr/error.hpp"

namespace lvr {

namespace {

[[noreturn]] void throw_unmatched(unsigned char symbol) {
  throw Error("symbol \\x" + to_hex(std::string(1, static_cast<char>(symbol))) +
              " is not covered by the vocabulary");
}

void require_complete(const Vocabulary& vocab, const char* kind) {
  if (!vocab.complete()) {
    throw Error(std::string(kind) +
                " tokenizer requires a vocabulary containing every alphabet "
                "symbol as a token");
  }
}

}  // namespace

Tokenizer::Tokenizer(std::shared_ptr<const Vocabulary> vocab)
    : vocab_(std::move(vocab)) {
  if (!vocab_) throw Error("tokenizer needs a vocabulary");
}

bool Tokenizer::is_valid(std::span<const TokenId> tokens) const {
  for (TokenId id : tokens) {
    if (!vocab_->contains(id)) return false;
  }
  const TokenSeq round_trip = encode(decode(tokens));
  return std::equal(round_trip.begin(), round_trip.end(), tokens.begin(),
                    tokens.end());
}

bool Tokenizer::is_valid_extension(std::span<const TokenId> prefix,
                                   std::string_view prefix_text,
                                   TokenId next) const {
  if (!vocab_->contains(next)) return false;
  ByteText text(prefix_text);
  text += vocab_->surface(next);
  const TokenSeq round_trip = encode(text);
  if (round_trip.size() != prefix.size() + 1 || round_trip.back() != next) {
    return false;
  }
  return std::equal(prefix.begin(), prefix.end(), round_trip.begin());
}

GreedyTokenizer::GreedyTokenizer(std::shared_ptr<const Vocabulary> vocab)
    : Tokenizer(std::move(vocab)) {
  require_complete(this->vocab(), "greedy");
}

TokenSeq GreedyTokenizer::encode(std::string_view text) const {
  const Vocabulary& v = vocab();
  TokenSeq out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t longest = std::min(v.max_surface_length(), text.size() - pos);
    std::optional<TokenId> match;
    std::size_t len = longest;
    for (; len > 0; --len) {
      match = v.find(text.substr(pos, len));
      if (match) break;
    }
    if (!match) throw_unmatched(static_cast<unsigned char>(text[pos]));
    out.push_back(*match);
    pos += len;
  }
  return out;
}

BpeTokenizer::BpeTokenizer(std::shared_ptr<const Vocabulary> vocab,
                           std::vector<MergePair> merges)
    : Tokenizer(std::move(vocab)), merges_(std::move(merges)) {
  const Vocabulary& v = this->vocab();
  require_complete(v, "BPE");
  for (std::size_t rank = 0; rank < merges_.size(); ++rank) {
    const auto& [left, right] = merges_[rank];
    const ByteText product = v.surface(left) + v.surface(right);
    auto id = v.find(product);
    if (!id) {
      throw Error("merge (\"" + escape_surface(v.surface(left)) + "\", \"" +
                  escape_surface(v.surface(right)) +
                  "\") produces a surface outside the vocabulary");
    }
    // A repeated pair keeps its first (lowest) rank.
    ranks_.emplace(merges_[rank], MergeInfo{rank, *id});
  }
}

TokenSeq BpeTokenizer::encode(std::string_view text) const {
  const Vocabulary& v = vocab();
  const std::size_t n = text.size();
  if (n == 0) return {};

  // Doubly linked list over symbol positions; a merged node absorbs its
  // right neighbour.
  std::vector<TokenId> ids(n);
  std::vector<std::ptrdiff_t> prev(n), next(n);
  std::vector<bool> alive(n, true);
  for (std::size_t i = 0; i < n; ++i) {
    auto sym = static_cast<unsigned char>(text[i]);
    auto id = v.symbol_token(sym);
    if (!id) throw_unmatched(sym);
    ids[i] = *id;
    prev[i] = static_cast<std::ptrdiff_t>(i) - 1;
    next[i] = i + 1 < n ? static_cast<std::ptrdiff_t>(i + 1) : -1;
  }

  // (rank, left position, left id, right id); smallest first.
  using Candidate = std::tuple<std::size_t, std::size_t, TokenId, TokenId>;
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;
  auto push_pair = [&](std::ptrdiff_t left) {
    if (left < 0 || next[left] < 0) return;
    auto it = ranks_.find({ids[left], ids[next[left]]});
    if (it != ranks_.end()) {
      heap.emplace(it->second.rank, static_cast<std::size_t>(left), ids[left],
                   ids[next[left]]);
    }
  };
  for (std::size_t i = 0; i + 1 < n; ++i) push_pair(static_cast<std::ptrdiff_t>(i));

  while (!heap.empty()) {
    auto [rank, left, left_id, right_id] = heap.top();
    heap.pop();
    const std::ptrdiff_t right = next[left];
    if (!alive[left] || right < 0 || ids[left] != left_id ||
        ids[right] != right_id) {
      continue;  // stale
    }
    ids[left] = ranks_.at({left_id, right_id}).product;
    alive[right] = false;
    next[left] = next[right];
    if (next[right] >= 0) prev[next[right]] = static_cast<std::ptrdiff_t>(left);
    push_pair(prev[left]);
    push_pair(static_cast<std::ptrdiff_t>(left));
  }

  TokenSeq out;
  for (std::ptrdiff_t i = 0; i >= 0; i = next[i]) out.push_back(ids[i]);
  return out;
}

std::vector<MergePair> resolve_merges(
    const Vocabulary& vocab,
    std::span<const std::pair<ByteText, ByteText>> surface_pairs) {
  std::vector<MergePair> merges;
  merges.reserve(surface_pairs.size());
  for (const auto& [left, right] : surface_pairs) {
    auto l = vocab.find(left);
    auto r = vocab.find(right);
    if (!l || !r) {
      throw Error("merge operand \"" + escape_surface(l ? right : left) +
                  "\" is not in the vocabulary");
    }
    merges.emplace_back(*l, *r);
  }
  return merges;
}

}  // namespace lvr
