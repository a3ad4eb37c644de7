#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "lvr/error.hpp"
#include "lvr/reduction.hpp"

namespace lvr {

enum class CombineMode { poe, moe };

// A product of experts whose members share no supported token. Carries each
// member's support (ids with positive probability) for diagnostics.
class ZeroProductError : public ZeroMassError {
 public:
  ZeroProductError(const std::string& what, std::vector<std::vector<TokenId>> supports)
      : ZeroMassError(what), supports_(std::move(supports)) {}
  const std::vector<std::vector<TokenId>>& supports() const { return supports_; }

 private:
  std::vector<std::vector<TokenId>> supports_;
};

// A member failed while computing its distribution or advancing.
class EnsembleMemberError : public Error {
 public:
  EnsembleMemberError(std::size_t member, const std::string& what)
      : Error("ensemble member " + std::to_string(member) + ": " + what),
        member_(member) {}
  std::size_t member() const { return member_; }

 private:
  std::size_t member_;
};

// Uniform-weight product, renormalized. Throws ZeroProductError when the
// product vanishes everywhere.
std::vector<double> poe_combine(std::span<const std::vector<double>> dists);
// Uniform-weight mixture (elementwise mean).
std::vector<double> moe_combine(std::span<const std::vector<double>> dists);
std::vector<double> combine(CombineMode mode, std::span<const std::vector<double>> dists);

SubTokenDistribution poe_combine(std::span<const SubTokenDistribution> dists);
SubTokenDistribution moe_combine(std::span<const SubTokenDistribution> dists);

struct EnsembleMember {
  std::shared_ptr<const LanguageModel> model;
  std::shared_ptr<const NestedTokenizer> nested;  // onto the shared sub-vocabulary
  std::size_t topk = kDefaultTopK;
};

struct EnsembleSpec {
  std::vector<EnsembleMember> members;
  CombineMode mode = CombineMode::poe;
};

// Reduction sessions of every member advanced in lock-step on a shared
// sub-token prefix.
class EnsembleSession {
 public:
  // Throws Error without members or when the members' sub-vocabularies
  // differ.
  explicit EnsembleSession(const EnsembleSpec& spec);

  // Combined distribution; each member's own is kept in member_dists().
  SubTokenDistribution next_dist();
  void step(TokenId chosen);

  bool terminated() const { return sessions_.front().terminated(); }
  const ByteText& text() const { return sessions_.front().text(); }
  const TokenSeq& prefix() const { return sessions_.front().prefix(); }
  const Vocabulary& sub_vocab() const { return sessions_.front().nested().inner().vocab(); }
  CombineMode mode() const { return mode_; }
  std::span<const ReductionSession> sessions() const { return sessions_; }
  std::span<const SubTokenDistribution> member_dists() const { return member_dists_; }

 private:
  std::vector<ReductionSession> sessions_;
  std::vector<SubTokenDistribution> member_dists_;
  CombineMode mode_;
};

struct EnsembleStep {
  std::size_t index = 0;
  TokenId chosen = 0;
  const SubTokenDistribution* combined = nullptr;
  std::span<const SubTokenDistribution> members;
};

using EnsembleObserver = std::function<void(const EnsembleStep&)>;

TokenSeq ensemble_generate(const EnsembleSpec& spec, const Decoding& decoding,
                           std::size_t max_subtokens,
                           const EnsembleObserver& observer = {});

// Generation that runs until at least `min_bytes` bytes exist, restarting
// from the empty prefix after every EOS. EOS counts as one step and one
// byte. One picker drives every restart, so runs are reproducible.
struct ByteRun {
  ByteText text;
  std::size_t steps = 0;
  std::size_t documents = 0;
};

ByteRun generate_bytes(const EnsembleSpec& spec, const Decoding& decoding,
                       std::size_t min_bytes);

// Vocabulary holding every member surface, first member's order first.
Vocabulary union_vocabulary(std::span<const Vocabulary* const> vocabs);

// Baseline ensemble over the union vocabulary: each member retokenizes the
// prefix text with its own tokenizer, its distribution is zero-extended to
// the union, and the results are combined.
std::vector<double> union_baseline_dist(std::span<const LanguageModel* const> models,
                                        const Vocabulary& union_vocab,
                                        std::span<const TokenId> prefix,
                                        CombineMode mode);

}  // namespace lvr
