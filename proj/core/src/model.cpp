#include "lvr/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "lvr/error.hpp"

namespace lvr {

namespace {

constexpr TokenId kBoundary = std::numeric_limits<TokenId>::max();

void check_distribution(const std::vector<double>& probs, std::size_t size,
                        const char* what) {
  if (probs.size() != size) {
    throw Error(std::string(what) + ": expected " + std::to_string(size) +
                " probabilities, got " + std::to_string(probs.size()));
  }
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw Error(std::string(what) + ": probabilities must be finite and >= 0");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kNormalizationTolerance) {
    throw Error(std::string(what) + ": probabilities sum to " +
                std::to_string(sum) + ", not 1");
  }
}

}  // namespace

double NextTokenDistribution::sum() const {
  return std::accumulate(probs.begin(), probs.end(), 0.0);
}

void check_prefix(const Tokenizer& tokenizer, std::span<const TokenId> prefix) {
  const Vocabulary& v = tokenizer.vocab();
  for (TokenId id : prefix) {
    if (!v.contains(id)) {
      throw InvalidPrefix("prefix has unknown token id " + std::to_string(id));
    }
    if (v.is_eos(id)) throw InvalidPrefix("prefix continues after EOS");
  }
  if (!tokenizer.is_valid(prefix)) {
    throw InvalidPrefix("prefix is not a valid tokenization of its text");
  }
}

NextTokenDistribution mask_invalid(const Tokenizer& tokenizer,
                                   std::span<const TokenId> prefix,
                                   NextTokenDistribution raw, bool renormalize) {
  const Vocabulary& v = tokenizer.vocab();
  if (raw.size() != v.size()) {
    throw Error("distribution size does not match the vocabulary");
  }
  const ByteText text = tokenizer.decode(prefix);
  bool removed = false;
  double kept = 0.0;
  for (TokenId x = 0; x < raw.size(); ++x) {
    if (raw.probs[x] == 0.0) continue;
    if (!tokenizer.is_valid_extension(prefix, text, x)) {
      raw.probs[x] = 0.0;
      removed = true;
    } else {
      kept += raw.probs[x];
    }
  }
  if (kept <= 0.0) {
    throw ZeroMassError("every continuation with nonzero mass is invalid");
  }
  if (removed && renormalize) {
    for (double& p : raw.probs) p /= kept;
  }
  return raw;
}

double marginal(const LanguageModel& model, std::span<const TokenId> tokens) {
  if (!model.tokenizer().is_valid(tokens)) {
    throw InvalidPrefix("marginal of an invalid token sequence");
  }
  double p = 1.0;
  for (std::size_t s = 0; s < tokens.size() && p > 0.0; ++s) {
    p *= model.next_token_dist(tokens.first(s))[tokens[s]];
  }
  return p;
}

TableModel::TableModel(std::shared_ptr<const Tokenizer> tokenizer,
                       std::map<TokenSeq, std::vector<double>> table,
                       std::vector<double> default_probs)
    : TableModel(std::move(tokenizer), std::move(table),
                 std::move(default_probs), Options{}) {}

TableModel::TableModel(std::shared_ptr<const Tokenizer> tokenizer,
                       std::map<TokenSeq, std::vector<double>> table,
                       std::vector<double> default_probs, Options options)
    : tokenizer_(std::move(tokenizer)),
      table_(std::move(table)),
      default_(std::move(default_probs)),
      options_(options) {
  if (!tokenizer_) throw Error("table model needs a tokenizer");
  const std::size_t n = tokenizer_->vocab().size();
  check_distribution(default_, n, "default distribution");
  for (const auto& [prefix, probs] : table_) {
    check_distribution(probs, n, "table entry");
  }
}

NextTokenDistribution TableModel::next_token_dist(
    std::span<const TokenId> prefix) const {
  check_prefix(*tokenizer_, prefix);
  auto it = table_.find(TokenSeq(prefix.begin(), prefix.end()));
  NextTokenDistribution raw{it != table_.end() ? it->second : default_};
  auto masked = mask_invalid(*tokenizer_, prefix, std::move(raw),
                             options_.renormalize);
  if (!options_.renormalize &&
      std::abs(masked.sum() - 1.0) > kNormalizationTolerance) {
    throw Error("table distribution puts mass on invalid continuations");
  }
  return masked;
}

NgramModel::NgramModel(std::shared_ptr<const Tokenizer> tokenizer,
                       std::size_t order, double alpha)
    : tokenizer_(std::move(tokenizer)), order_(order), alpha_(alpha) {}

NgramModel NgramModel::train(std::shared_ptr<const Tokenizer> tokenizer,
                             std::span<const ByteText> corpus,
                             std::size_t order, double alpha) {
  if (!tokenizer) throw Error("n-gram model needs a tokenizer");
  if (corpus.empty()) throw Error("n-gram training corpus is empty");
  if (order == 0) throw Error("n-gram order must be at least 1");
  if (!(alpha > 0.0)) throw Error("smoothing constant must be positive");
  const auto eos = tokenizer->vocab().eos();
  if (!eos) throw Error("n-gram training needs a vocabulary with EOS");

  NgramModel model(std::move(tokenizer), order, alpha);
  const std::size_t n = model.tokenizer_->vocab().size();
  for (const ByteText& doc : corpus) {
    TokenSeq seq = model.tokenizer_->encode(doc);
    for (TokenId id : seq) {
      if (id == *eos) throw Error("corpus document contains the EOS symbol");
    }
    seq.push_back(*eos);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      Counts& c = model.counts_[model.context_of(std::span(seq).first(t))];
      if (c.next.empty()) c.next.assign(n, 0);
      ++c.next[seq[t]];
      ++c.total;
    }
  }
  return model;
}

TokenSeq NgramModel::context_of(std::span<const TokenId> history) const {
  TokenSeq ctx(order_, kBoundary);
  const std::size_t take = std::min(order_, history.size());
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(take));
  return ctx;
}

NextTokenDistribution NgramModel::next_token_dist(
    std::span<const TokenId> prefix) const {
  check_prefix(*tokenizer_, prefix);
  const std::size_t n = tokenizer_->vocab().size();
  NextTokenDistribution raw{std::vector<double>(n)};
  auto it = counts_.find(context_of(prefix));
  const double total = it != counts_.end() ? static_cast<double>(it->second.total) : 0.0;
  const double denom = total + alpha_ * static_cast<double>(n);
  for (TokenId x = 0; x < n; ++x) {
    const double count =
        it != counts_.end() ? static_cast<double>(it->second.next[x]) : 0.0;
    raw.probs[x] = (count + alpha_) / denom;
  }
  return mask_invalid(*tokenizer_, prefix, std::move(raw), true);
}

}  // namespace lvr
