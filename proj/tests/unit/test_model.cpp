#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lvr/error.hpp"
#include "lvr/io.hpp"

namespace lvr {
namespace {

using testing::WorkedFixture;
using testing::worked_fixture;

TEST(TableModel, WorkedExampleRows) {
  const WorkedFixture f = worked_fixture();
  EXPECT_EQ(f.model->next_token_dist(TokenSeq{}).probs,
            (std::vector<double>{0.1, 0.1, 0.5, 0.3}));
  EXPECT_EQ(f.model->next_token_dist(TokenSeq{WorkedFixture::v00}).probs,
            (std::vector<double>{0.6, 0.0, 0.3, 0.1}));
}

TEST(TableModel, DefaultIsUniformOverValidContinuations) {
  const WorkedFixture f = worked_fixture();
  // After <0>: <0>, <00>, <001> would merge with it; only <1> is valid.
  EXPECT_EQ(f.model->next_token_dist(TokenSeq{WorkedFixture::v0}).probs,
            (std::vector<double>{0.0, 1.0, 0.0, 0.0}));
  // After <1> everything is valid.
  EXPECT_EQ(f.model->next_token_dist(TokenSeq{WorkedFixture::v1}).probs,
            (std::vector<double>(4, 0.25)));
}

TEST(TableModel, RejectsInvalidPrefixes) {
  const WorkedFixture f = worked_fixture();
  EXPECT_THROW(f.model->next_token_dist(TokenSeq{WorkedFixture::v00, WorkedFixture::v1}),
               InvalidPrefix);
  EXPECT_THROW(f.model->next_token_dist(TokenSeq{7}), InvalidPrefix);
}

TEST(TableModel, RejectsUnnormalizedRows) {
  const WorkedFixture f = worked_fixture();
  EXPECT_THROW(TableModel(f.tokenizer, {{{}, {0.5, 0.5, 0.5, 0.5}}}, std::vector<double>(4, 0.25)),
               Error);
  EXPECT_THROW(TableModel(f.tokenizer, {}, std::vector<double>(3, 1.0 / 3)), Error);
  EXPECT_THROW(TableModel(f.tokenizer, {}, {1.5, -0.5, 0.0, 0.0}), Error);
}

TEST(TableModel, StrictModeRefusesSilentRenormalization) {
  const WorkedFixture f = worked_fixture();
  const TableModel strict(f.tokenizer, {}, std::vector<double>(4, 0.25), {false});
  EXPECT_THROW(strict.next_token_dist(TokenSeq{WorkedFixture::v0}), Error);
  EXPECT_EQ(strict.next_token_dist(TokenSeq{WorkedFixture::v1}).probs,
            (std::vector<double>(4, 0.25)));
}

TEST(MaskInvalid, WorkedExamples) {
  const WorkedFixture f = worked_fixture();
  const NextTokenDistribution raw{{0.4, 0.2, 0.3, 0.1}};
  const auto masked = mask_invalid(*f.tokenizer, TokenSeq{WorkedFixture::v00}, raw);
  EXPECT_EQ(masked[WorkedFixture::v1], 0.0);
  EXPECT_NEAR(masked.sum(), 1.0, 1e-15);
  EXPECT_EQ(mask_invalid(*f.tokenizer, TokenSeq{}, raw).probs, raw.probs);
  EXPECT_EQ(mask_invalid(*f.tokenizer, TokenSeq{WorkedFixture::v00}, masked).probs,
            masked.probs);
  EXPECT_THROW(mask_invalid(*f.tokenizer, TokenSeq{WorkedFixture::v0},
                            NextTokenDistribution{{1.0, 0.0, 0.0, 0.0}}),
               ZeroMassError);
}

TEST(Marginal, WorkedExamples) {
  const WorkedFixture f = worked_fixture();
  EXPECT_DOUBLE_EQ(marginal(*f.model, TokenSeq{WorkedFixture::v00, WorkedFixture::v0}), 0.3);
  EXPECT_EQ(marginal(*f.model, TokenSeq{}), 1.0);
  EXPECT_DOUBLE_EQ(marginal(*f.model, TokenSeq{WorkedFixture::v00, WorkedFixture::v001}), 0.05);
  EXPECT_THROW(marginal(*f.model, TokenSeq{WorkedFixture::v00, WorkedFixture::v1}), InvalidPrefix);
}

TEST(Marginal, ChainRuleAndMonotonicity) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = testing::random_instance(seed);
    const Vocabulary& v = inst.tokenizer->vocab();
    TokenSeq seq;
    for (int depth = 0; depth < 4; ++depth) {
      const auto dist = inst.model->next_token_dist(seq);
      EXPECT_NEAR(dist.sum(), 1.0, kNormalizationTolerance);
      TokenId best = 0;
      for (TokenId x = 0; x < v.size(); ++x) {
        TokenSeq ext = seq;
        ext.push_back(x);
        if (!inst.tokenizer->is_valid(ext)) EXPECT_EQ(dist[x], 0.0);
        if (!v.is_eos(x) && dist[x] > dist[best]) best = x;
      }
      if (v.is_eos(best) || dist[best] == 0.0) break;
      TokenSeq next = seq;
      next.push_back(best);
      const double parent = marginal(*inst.model, seq);
      EXPECT_EQ(marginal(*inst.model, next), parent * dist[best]);
      EXPECT_LE(marginal(*inst.model, next), parent);
      seq = next;
    }
  }
}

TEST(Ngram, CountsAndSmoothing) {
  auto vocab = parse_vocabulary(R"(["a", "b", "$"])", '$');
  auto tok = make_tokenizer(vocab, std::nullopt);
  const std::vector<ByteText> corpus = {"ab", "ab"};
  const NgramModel m = NgramModel::train(tok, corpus, 1, 0.1);
  const auto after_a = m.next_token_dist(TokenSeq{0});
  EXPECT_GT(after_a[1], after_a[0]);
  EXPECT_NEAR(after_a.sum(), 1.0, 1e-12);

  const std::vector<ByteText> single = {"a"};
  const NgramModel s = NgramModel::train(tok, single, 1, 0.1);
  const auto d = s.next_token_dist(TokenSeq{0});
  EXPECT_GT(d[2], d[0]);
  EXPECT_GT(d[2], d[1]);

  const NgramModel flat = NgramModel::train(tok, corpus, 2, 1e9);
  for (double p : flat.next_token_dist(TokenSeq{0, 1}).probs) EXPECT_NEAR(p, 1.0 / 3, 1e-6);
}

TEST(Ngram, MasksInvalidContinuations) {
  auto vocab = parse_vocabulary(R"(["a", "b", "$", "ab"])", '$');
  auto tok = make_tokenizer(vocab, std::nullopt);
  const std::vector<ByteText> corpus = {"abab", "ba"};
  const NgramModel m = NgramModel::train(tok, corpus, 2, 0.5);
  // Greedy would merge "a" + "b": <a><b> is not a fixed point.
  EXPECT_EQ(m.next_token_dist(TokenSeq{0})[1], 0.0);
  EXPECT_GT(m.next_token_dist(TokenSeq{0})[3], 0.0);  // <a><ab> is valid
}

TEST(Ngram, RejectsBadTrainingInput) {
  auto vocab = parse_vocabulary(R"(["a", "b", "$"])", '$');
  auto tok = make_tokenizer(vocab, std::nullopt);
  const std::vector<ByteText> none;
  const std::vector<ByteText> some = {"ab"};
  const std::vector<ByteText> with_eos = {"a$b"};
  EXPECT_THROW(NgramModel::train(tok, none, 1, 0.1), Error);
  EXPECT_THROW(NgramModel::train(tok, some, 0, 0.1), Error);
  EXPECT_THROW(NgramModel::train(tok, some, 1, 0.0), Error);
  EXPECT_THROW(NgramModel::train(tok, with_eos, 1, 0.1), Error);
  auto no_eos = make_tokenizer(parse_vocabulary(R"(["a", "b"])"), std::nullopt);
  EXPECT_THROW(NgramModel::train(no_eos, some, 1, 0.1), Error);
}

TEST(Prefix, NoContinuationPastEos) {
  auto vocab = parse_vocabulary(R"(["a", "$"])", '$');
  auto tok = make_tokenizer(vocab, std::nullopt);
  const TableModel m(tok, {}, {0.5, 0.5});
  EXPECT_THROW(m.next_token_dist(TokenSeq{1}), InvalidPrefix);
}

}  // namespace
}  // namespace lvr
