#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "lvr/model.hpp"
#include "lvr/nested.hpp"

namespace lvr {

// Top-K value meaning "keep every single-token extension" (K = |V|).
inline constexpr std::size_t kExactTopK = std::numeric_limits<std::size_t>::max();
inline constexpr std::size_t kDefaultTopK = 300;

// A valid outer token sequence together with its cached marginal
// p_V(seq *) and its nested encoding over the sub-vocabulary.
struct CoverEntry {
  TokenSeq seq;
  TokenSeq nested;
  double marginal = 0.0;

  friend bool operator==(const CoverEntry&, const CoverEntry&) = default;
};

// Relative cover of a sub-token prefix y_{1:k}: the valid outer sequences
// whose nested encoding extends y_{1:k} while their last-token-dropped
// prefix does not.
struct RelativeCover {
  TokenSeq key;
  std::vector<CoverEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool contains(std::span<const TokenId> seq) const;
  // Marginal mass of the cover, summed in entry order.
  double mass() const;

  friend bool operator==(const RelativeCover&, const RelativeCover&) = default;
};

// Next-sub-token distribution plus the diagnostics the reduction produces.
struct SubTokenDistribution {
  std::vector<double> probs;         // normalized over the sub-vocabulary
  std::vector<double> unnormalized;  // p(y_{1:k} y *) per sub-token y
  double normalizer = 0.0;           // sum of `unnormalized`
  double dropped_mass = 0.0;         // extension mass cut by top-K
  std::vector<std::size_t> cover_sizes;  // |C(y_{1:k} y)| per sub-token y
};

enum class ReductionAlgorithm { naive, efficient };

// Stateful lossless vocabulary reduction of one model onto the inner
// vocabulary of a nested tokenizer.
//
// The session owns the sampled sub-token prefix, the relative-cover cache
// (the cover of the prefix and, once a distribution has been computed, the
// covers of every one-token extension) and the marginal cache holding
// p_V(x *) for every sequence in a cached cover. Each distribution costs one
// model call at the canonical outer retokenization of the prefix; all other
// marginals come from the caches.
//
// Sessions are single-owner and copyable; a copy continues independently.
class ReductionSession {
 public:
  // Throws Error when topk == 0 or when the nested tokenizer's outer
  // vocabulary is not the model's vocabulary.
  ReductionSession(std::shared_ptr<const LanguageModel> model,
                   std::shared_ptr<const NestedTokenizer> nested,
                   std::size_t topk = kDefaultTopK);

  // Reference computation: for every sub-token, scans the whole cover and
  // the whole outer vocabulary. Ignores top-K.
  SubTokenDistribution next_subtoken_dist_naive();
  // One pass over the cover, bucketed by each entry's next sub-token, and one
  // pass over the top-K extensions of the canonical retokenization.
  SubTokenDistribution next_subtoken_dist_efficient();

  // Commits to `chosen`. Computes the distribution first if needed. Throws
  // ZeroMassError if the chosen sub-token has no mass.
  void step(TokenId chosen);

  // Changes K for the steps that follow. The current cover is kept as is;
  // anything computed from it under the old K is discarded.
  void set_topk(std::size_t topk);

  // Cover of `y_prefix`. Either the prefix itself or a one-token extension
  // of it (computed on demand); anything else throws Error.
  const RelativeCover& relative_cover(std::span<const TokenId> y_prefix);

  const TokenSeq& prefix() const { return prefix_; }
  const ByteText& text() const { return text_; }
  std::size_t topk() const { return topk_; }
  bool exact() const;
  bool terminated() const;
  const RelativeCover& current_cover() const;
  const std::optional<SubTokenDistribution>& last_distribution() const {
    return last_;
  }

  std::size_t cover_cache_size() const { return cover_cache_.size(); }
  std::size_t prob_cache_size() const { return prob_cache_.size(); }
  std::optional<double> cached_marginal(const TokenSeq& seq) const;

  const LanguageModel& model() const { return *model_; }
  const NestedTokenizer& nested() const { return *nested_; }

 private:
  SubTokenDistribution expand(ReductionAlgorithm algorithm);
  const CoverEntry* find_equal_entry(const RelativeCover& cover) const;

  std::shared_ptr<const LanguageModel> model_;
  std::shared_ptr<const NestedTokenizer> nested_;
  std::size_t topk_;
  TokenSeq prefix_;
  ByteText text_;
  std::map<TokenSeq, RelativeCover> cover_cache_;
  std::unordered_map<TokenSeq, double, TokenSeqHash> prob_cache_;
  std::optional<SubTokenDistribution> last_;
};

// Lossy baseline: retokenize the prefix text with the model's tokenizer,
// zero every token outside the sub-vocabulary and renormalize. The result
// is indexed by sub-vocabulary id; dropped_mass reports the mass removed.
SubTokenDistribution naive_restriction_dist(const LanguageModel& model,
                                            const Vocabulary& sub_vocab,
                                            std::span<const TokenId> prefix);

struct Decoding {
  enum class Kind { greedy, sample };
  Kind kind = Kind::greedy;
  std::uint64_t seed = 0;

  static Decoding greedy() { return {Kind::greedy, 0}; }
  static Decoding sampling(std::uint64_t seed) { return {Kind::sample, seed}; }
};

// Seeded token picker shared by single-model and ensemble generation.
// Greedy takes the highest probability, ties to the lowest id; sampling
// draws by inverse CDF from a 64-bit Mersenne twister.
class TokenPicker {
 public:
  explicit TokenPicker(const Decoding& decoding);
  TokenId pick(std::span<const double> probs);

 private:
  Decoding decoding_;
  std::mt19937_64 rng_;
};

struct GenerationStep {
  std::size_t index = 0;
  TokenId chosen = 0;
  const SubTokenDistribution* dist = nullptr;
};

using StepObserver = std::function<void(const GenerationStep&)>;

// Samples up to `max_subtokens` sub-tokens, stopping after EOS.
TokenSeq generate(ReductionSession& session, const Decoding& decoding,
                  std::size_t max_subtokens, const StepObserver& observer = {});

}  // namespace lvr
