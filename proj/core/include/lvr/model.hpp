#pragma once

#include <map>
#include <memory>
#include <span>
#include <vector>

#include "lvr/tokenizer.hpp"

namespace lvr {

// Probabilities indexed by token id over one vocabulary.
struct NextTokenDistribution {
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
  double operator[](TokenId id) const { return probs[id]; }
  double sum() const;
};

inline constexpr double kNormalizationTolerance = 1e-9;

// Source of next-token distributions p(x_{t+1} | x_{1:t}) over the vocabulary
// of its tokenizer. Implementations are immutable and next_token_dist is a
// pure function, so one model can serve many threads.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual const std::shared_ptr<const Tokenizer>& tokenizer_ptr() const = 0;

  // Full distribution over the vocabulary given a valid prefix. Throws
  // InvalidPrefix when the prefix is not valid or continues past EOS.
  virtual NextTokenDistribution next_token_dist(
      std::span<const TokenId> prefix) const = 0;

  const Tokenizer& tokenizer() const { return *tokenizer_ptr(); }
  const Vocabulary& vocab() const { return tokenizer().vocab(); }
};

// Throws InvalidPrefix unless `prefix` is valid and does not contain EOS.
void check_prefix(const Tokenizer& tokenizer, std::span<const TokenId> prefix);

// Zeroes every x for which prefix ++ [x] is invalid. If mass was removed and
// `renormalize` is set, the survivors are rescaled to sum to one; a
// distribution with nothing to remove is returned unchanged. Throws
// ZeroMassError when no mass survives.
NextTokenDistribution mask_invalid(const Tokenizer& tokenizer,
                                   std::span<const TokenId> prefix,
                                   NextTokenDistribution raw,
                                   bool renormalize = true);

inline NextTokenDistribution mask_invalid(const LanguageModel& model,
                                          std::span<const TokenId> prefix,
                                          NextTokenDistribution raw,
                                          bool renormalize = true) {
  return mask_invalid(model.tokenizer(), prefix, std::move(raw), renormalize);
}

// p(x_1 ... x_t *) as the running product of conditionals; 1 for the empty
// sequence. The product stops at the first zero factor. Throws InvalidPrefix
// for an invalid sequence.
double marginal(const LanguageModel& model, std::span<const TokenId> tokens);

// Hand-written conditional tables. Prefixes missing from the table use the
// default distribution. Every distribution is validity-masked on lookup.
class TableModel final : public LanguageModel {
 public:
  struct Options {
    // When false, a lookup whose masked mass drifts from one is an error
    // instead of being rescaled.
    bool renormalize = true;
  };

  TableModel(std::shared_ptr<const Tokenizer> tokenizer,
             std::map<TokenSeq, std::vector<double>> table,
             std::vector<double> default_probs);
  TableModel(std::shared_ptr<const Tokenizer> tokenizer,
             std::map<TokenSeq, std::vector<double>> table,
             std::vector<double> default_probs, Options options);

  const std::shared_ptr<const Tokenizer>& tokenizer_ptr() const override {
    return tokenizer_;
  }
  NextTokenDistribution next_token_dist(
      std::span<const TokenId> prefix) const override;

  const std::map<TokenSeq, std::vector<double>>& table() const { return table_; }
  const std::vector<double>& default_probs() const { return default_; }
  const Options& options() const { return options_; }

 private:
  std::shared_ptr<const Tokenizer> tokenizer_;
  std::map<TokenSeq, std::vector<double>> table_;
  std::vector<double> default_;
  Options options_;
};

// Additively smoothed n-gram model conditioned on the previous `order`
// tokens. Documents are encoded and terminated with EOS before counting;
// positions before the start of a document use a boundary context.
class NgramModel final : public LanguageModel {
 public:
  // Throws Error on an empty corpus, order 0, alpha <= 0 or a vocabulary
  // without EOS.
  static NgramModel train(std::shared_ptr<const Tokenizer> tokenizer,
                          std::span<const ByteText> corpus, std::size_t order,
                          double alpha);

  const std::shared_ptr<const Tokenizer>& tokenizer_ptr() const override {
    return tokenizer_;
  }
  NextTokenDistribution next_token_dist(
      std::span<const TokenId> prefix) const override;

  std::size_t order() const { return order_; }
  double alpha() const { return alpha_; }

 private:
  struct Counts {
    std::vector<std::uint32_t> next;
    std::uint64_t total = 0;
  };

  NgramModel(std::shared_ptr<const Tokenizer> tokenizer, std::size_t order,
             double alpha);
  TokenSeq context_of(std::span<const TokenId> history) const;

  std::shared_ptr<const Tokenizer> tokenizer_;
  std::size_t order_;
  double alpha_;
  std::map<TokenSeq, Counts> counts_;
};

}  // namespace lvr
