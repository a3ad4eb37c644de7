#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lvr/reduction.hpp"

namespace lvr {

inline constexpr std::size_t kDefaultEnumBudget = 2'000'000;

// Valid token sequences x_{1:T} whose decoding extends `text` while that of
// x_{1:T-1} does not. Sequences that continue past EOS are never produced
// (they have probability zero). Throws BudgetExceeded when more than
// `budget` sequences would be visited.
std::vector<TokenSeq> minimal_cover(const Tokenizer& tokenizer, std::string_view text,
                                    std::size_t budget = kDefaultEnumBudget);

// p(text *) as the summed marginals of the minimal cover.
double text_prefix_prob(const LanguageModel& model, std::string_view text,
                        std::size_t budget = kDefaultEnumBudget);

// p(text *) under the reduced model: the product of reduced conditionals
// along every sub-token path that minimally covers `text`, summed. `root`
// must be a session at the empty prefix.
double reduced_text_prefix_prob(const ReductionSession& root, std::string_view text,
                                std::size_t budget = kDefaultEnumBudget);

// Prefix probabilities of every text up to `max_length` symbols at once.
// The keys include the empty text (probability 1).
using PrefixTable = std::map<ByteText, double>;

// Walks every token path with positive probability, with no validity test
// beyond what the model's own masking zeroes out.
PrefixTable enumerated_prefix_table(const LanguageModel& model, std::size_t max_length,
                                    std::size_t budget = kDefaultEnumBudget);
PrefixTable reduced_prefix_table(const ReductionSession& root, std::size_t max_length,
                                 ReductionAlgorithm algorithm = ReductionAlgorithm::efficient,
                                 std::size_t budget = kDefaultEnumBudget);
// Same walk with the lossy restriction baseline as the sub-token model.
PrefixTable naive_restriction_prefix_table(const LanguageModel& model,
                                           const Vocabulary& sub_vocab,
                                           std::size_t max_length,
                                           std::size_t budget = kDefaultEnumBudget);

// Texts over the non-EOS symbols of `alphabet` of length <= max_length,
// plus each of them followed by EOS when that still fits. Shortest first.
std::vector<ByteText> texts_up_to(const Alphabet& alphabet, std::size_t max_length);

enum class SubModelMethod { lossless, naive_restriction };

struct LosslessOptions {
  std::size_t max_length = 5;
  double tol = 1e-9;
  std::size_t budget = kDefaultEnumBudget;
  SubModelMethod method = SubModelMethod::lossless;
  std::size_t topk = kExactTopK;
  ReductionAlgorithm algorithm = ReductionAlgorithm::efficient;
};

struct PrefixProbRow {
  ByteText text;
  double cover = 0.0;       // minimal-cover formula on the original model
  double enumerated = 0.0;  // exhaustive token-path enumeration
  double reduced = 0.0;     // sub-token model
  double discrepancy = 0.0;
};

struct PrefixProbReport {
  std::string description;
  std::vector<PrefixProbRow> rows;
  double max_discrepancy = 0.0;
  ByteText worst_text;
  double tol = 0.0;
  bool pass = false;
};

// Compares the three routes on every text up to options.max_length. PASS iff
// every discrepancy is within options.tol. Throws BudgetExceeded on
// instances that are too large to enumerate.
PrefixProbReport lossless_check(std::shared_ptr<const LanguageModel> model,
                                std::shared_ptr<const Tokenizer> sub_tokenizer,
                                const LosslessOptions& options = {});

std::string report_json(const PrefixProbReport& report);

}  // namespace lvr
