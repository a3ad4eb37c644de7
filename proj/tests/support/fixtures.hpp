#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lvr/model.hpp"
#include "lvr/nested.hpp"
#include "lvr/reduction.hpp"

namespace lvr::testing {

// Binary alphabet, V = {0, 1, 00, 001} (ids 0..3), V_sub = {0, 1, 00}, both
// greedy. The model has two hand-written rows; every other prefix falls back
// to a uniform distribution restricted to valid tokens.
struct WorkedFixture {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<const Vocabulary> sub_vocab;
  std::shared_ptr<const Tokenizer> tokenizer;
  std::shared_ptr<const Tokenizer> sub_tokenizer;
  std::shared_ptr<const NestedTokenizer> nested;
  std::shared_ptr<const TableModel> model;

  // Ids in V.
  static constexpr TokenId v0 = 0, v1 = 1, v00 = 2, v001 = 3;
  // Ids in V_sub.
  static constexpr TokenId s0 = 0, s1 = 1, s00 = 2;

  ReductionSession session(std::size_t topk = kExactTopK) const {
    return ReductionSession(model, nested, topk);
  }
};

WorkedFixture worked_fixture();

enum class TokenizerKind { greedy, bpe };

// Small random instance: alphabet of 2 or 4 symbols plus EOS '$', a complete
// vocabulary of at most 8 tokens, a random complete sub-vocabulary and a
// masked table model with random rows for short valid prefixes.
struct RandomInstance {
  std::uint64_t seed = 0;
  TokenizerKind kind = TokenizerKind::greedy;
  std::shared_ptr<const Tokenizer> tokenizer;
  std::shared_ptr<const Tokenizer> sub_tokenizer;
  std::shared_ptr<const NestedTokenizer> nested;
  std::shared_ptr<const TableModel> model;

  std::string describe() const;
};

struct RandomInstanceOptions {
  TokenizerKind kind = TokenizerKind::greedy;
  bool byte_level_sub = false;  // V_sub = single symbols only
  std::size_t max_vocab = 8;
  std::size_t table_depth = 3;  // rows for valid prefixes shorter than this
  double zero_prob = 0.2;       // chance a table entry is forced to zero
};

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceOptions& options = {});

// Every valid outer sequence whose nested encoding extends `y` while that of
// its last-token-dropped prefix does not, found by exhaustive search. Never
// continues past EOS.
std::vector<TokenSeq> brute_force_relative_cover(const NestedTokenizer& nested,
                                                 const TokenSeq& y);

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& contents) const;

 private:
  std::filesystem::path path_;
};

std::filesystem::path data_dir();

}  // namespace lvr::testing
