#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "lvr/error.hpp"
#include "lvr/io.hpp"

namespace lvr {
namespace {

using testing::WorkedFixture;
using testing::worked_fixture;

constexpr double kExact = 1e-12;

std::set<TokenSeq> seqs_of(const RelativeCover& c) {
  std::set<TokenSeq> out;
  for (const CoverEntry& e : c.entries) out.insert(e.seq);
  return out;
}

void expect_near(const std::vector<double>& got, const std::vector<double>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], kExact) << i;
}

TEST(Session, RejectsBadConfiguration) {
  const WorkedFixture f = worked_fixture();
  EXPECT_THROW(ReductionSession(f.model, f.nested, 0), Error);
  auto other = std::make_shared<const GreedyTokenizer>(f.sub_vocab);
  auto mismatched = std::make_shared<const NestedTokenizer>(other, f.sub_tokenizer);
  EXPECT_THROW(ReductionSession(f.model, mismatched), Error);
}

TEST(Session, StartsAtTheEmptyCover) {
  const WorkedFixture f = worked_fixture();
  const ReductionSession s = f.session();
  ASSERT_EQ(s.current_cover().size(), 1u);
  EXPECT_EQ(s.current_cover().entries[0], (CoverEntry{{}, {}, 1.0}));
  EXPECT_TRUE(s.exact());
  EXPECT_FALSE(s.terminated());
}

TEST(WorkedExample, FirstStep) {
  const WorkedFixture f = worked_fixture();
  ReductionSession s = f.session();
  const auto d = s.next_subtoken_dist_efficient();
  expect_near(d.unnormalized, {0.1, 0.1, 0.8});
  expect_near(d.probs, {0.1, 0.1, 0.8});
  EXPECT_EQ(d.dropped_mass, 0.0);
  EXPECT_EQ(seqs_of(s.relative_cover(TokenSeq{WorkedFixture::s0})), (std::set<TokenSeq>{{0}}));
  EXPECT_EQ(seqs_of(s.relative_cover(TokenSeq{WorkedFixture::s1})), (std::set<TokenSeq>{{1}}));
  EXPECT_EQ(seqs_of(s.relative_cover(TokenSeq{WorkedFixture::s00})),
            (std::set<TokenSeq>{{2}, {3}}));
}

TEST(WorkedExample, SecondStep) {
  const WorkedFixture f = worked_fixture();
  ReductionSession s = f.session();
  s.step(WorkedFixture::s00);
  const RelativeCover& c00 = s.current_cover();
  EXPECT_EQ(seqs_of(c00), (std::set<TokenSeq>{{2}, {3}}));
  EXPECT_NEAR(c00.mass(), 0.8, kExact);

  const auto d = s.next_subtoken_dist_efficient();
  expect_near(d.unnormalized, {0.3, 0.3, 0.2});
  expect_near(d.probs, {0.375, 0.375, 0.25});
  EXPECT_EQ(seqs_of(s.relative_cover(TokenSeq{2, 0})), (std::set<TokenSeq>{{2, 0}}));
  EXPECT_EQ(seqs_of(s.relative_cover(TokenSeq{2, 1})), (std::set<TokenSeq>{{3}}));
  EXPECT_EQ(seqs_of(s.relative_cover(TokenSeq{2, 2})), (std::set<TokenSeq>{{2, 2}, {2, 3}}));
  EXPECT_EQ(d.cover_sizes, (std::vector<std::size_t>{1, 1, 2}));
}

TEST(WorkedExample, StepOntoSingleSymbol) {
  const WorkedFixture f = worked_fixture();
  ReductionSession s = f.session();
  s.step(WorkedFixture::s1);
  EXPECT_EQ(seqs_of(s.current_cover()), (std::set<TokenSeq>{{1}}));
  EXPECT_EQ(s.text(), "1");
}

TEST(WorkedExample, NaiveMatchesEfficient) {
  const WorkedFixture f = worked_fixture();
  ReductionSession a = f.session();
  ReductionSession b = f.session();
  for (TokenId y : {WorkedFixture::s00, WorkedFixture::s00, WorkedFixture::s1}) {
    const auto da = a.next_subtoken_dist_naive();
    const auto db = b.next_subtoken_dist_efficient();
    EXPECT_EQ(da.unnormalized, db.unnormalized);
    EXPECT_EQ(da.probs, db.probs);
    for (TokenId z = 0; z < 3; ++z) {
      TokenSeq key = a.prefix();
      key.push_back(z);
      EXPECT_EQ(a.relative_cover(key), b.relative_cover(key));
    }
    a.step(y);
    b.step(y);
  }
}

TEST(WorkedExample, TopOneTruncation) {
  const WorkedFixture f = worked_fixture();
  ReductionSession s = f.session();
  s.step(WorkedFixture::s00);
  s.set_topk(1);
  EXPECT_FALSE(s.exact());
  const auto d = s.next_subtoken_dist_efficient();
  // Only the <0> extension survives: 0.5 * 0.6. <001> is a cover entry.
  expect_near(d.unnormalized, {0.3, 0.3, 0.0});
  // Excluded extensions: 0.5 * (0 + 0.3 + 0.1).
  EXPECT_NEAR(d.dropped_mass, 0.2, kExact);
  EXPECT_THROW(s.step(WorkedFixture::s00), ZeroMassError);
}

TEST(WorkedExample, TopOneFromTheStart) {
  const WorkedFixture f = worked_fixture();
  ReductionSession s = f.session(1);
  // At the root only <00> is kept, so <001> never enters C(<00>).
  const auto root = s.next_subtoken_dist_efficient();
  expect_near(root.unnormalized, {0.0, 0.0, 0.5});
  EXPECT_NEAR(root.dropped_mass, 0.5, kExact);
  s.step(WorkedFixture::s00);
  EXPECT_EQ(seqs_of(s.current_cover()), (std::set<TokenSeq>{{2}}));
  expect_near(s.next_subtoken_dist_efficient().unnormalized, {0.3, 0.0, 0.0});
}

TEST(Session, SetTopkRejectsZero) {
  ReductionSession s = worked_fixture().session();
  EXPECT_THROW(s.set_topk(0), Error);
}

TEST(WorkedExample, DroppedMassShrinksWithK) {
  const WorkedFixture f = worked_fixture();
  double previous = 1.0;
  for (std::size_t k = 1; k <= 4; ++k) {
    ReductionSession s = f.session(k);
    s.step(WorkedFixture::s00);
    const double dropped = s.next_subtoken_dist_efficient().dropped_mass;
    EXPECT_LE(dropped, previous);
    previous = dropped;
  }
  EXPECT_EQ(previous, 0.0);
}

TEST(WorkedExample, GreedyTieGoesToLowestId) {
  const WorkedFixture f = worked_fixture();
  ReductionSession s = f.session();
  const TokenSeq out = generate(s, Decoding::greedy(), 2);
  EXPECT_EQ(out, (TokenSeq{WorkedFixture::s00, WorkedFixture::s0}));
  ReductionSession empty = f.session();
  EXPECT_TRUE(generate(empty, Decoding::greedy(), 0).empty());
}

TEST(Session, CachesFollowTheCommittedBranch) {
  const WorkedFixture f = worked_fixture();
  ReductionSession s = f.session();
  EXPECT_EQ(s.cover_cache_size(), 1u);
  s.next_subtoken_dist_efficient();
  EXPECT_EQ(s.cover_cache_size(), 4u);
  s.step(WorkedFixture::s00);
  EXPECT_EQ(s.cover_cache_size(), 1u);
  EXPECT_EQ(s.prob_cache_size(), 2u);
  EXPECT_EQ(s.cached_marginal(TokenSeq{3}), 0.3);
  EXPECT_FALSE(s.cached_marginal(TokenSeq{0}));
  EXPECT_THROW(s.relative_cover(TokenSeq{0, 0}), Error);
  EXPECT_THROW(s.relative_cover(TokenSeq{2, 2, 2}), Error);
}

TEST(Session, StepRejectsUnknownAndZeroMassTokens) {
  const WorkedFixture f = worked_fixture();
  ReductionSession s = f.session();
  EXPECT_THROW(s.step(7), Error);
  s.step(WorkedFixture::s0);
  // After "0" the only valid outer continuation is <1>.
  const auto d = s.next_subtoken_dist_efficient();
  expect_near(d.probs, {0.0, 1.0, 0.0});
  EXPECT_THROW(s.step(WorkedFixture::s0), ZeroMassError);
}

TEST(NaiveRestriction, WorkedExamples) {
  const WorkedFixture f = worked_fixture();
  const auto root = naive_restriction_dist(*f.model, *f.sub_vocab, TokenSeq{});
  expect_near(root.probs, {1.0 / 7, 1.0 / 7, 5.0 / 7});
  EXPECT_NEAR(root.dropped_mass, 0.3, kExact);
  const auto after = naive_restriction_dist(*f.model, *f.sub_vocab, TokenSeq{WorkedFixture::s00});
  expect_near(after.probs, {2.0 / 3, 0.0, 1.0 / 3});
  const auto identity = naive_restriction_dist(*f.model, *f.vocab, TokenSeq{});
  expect_near(identity.probs, {0.1, 0.1, 0.5, 0.3});
}

TEST(Generate, SamplingIsReproducible) {
  const auto inst = testing::random_instance(5);
  ReductionSession a(inst.model, inst.nested, kExactTopK);
  ReductionSession b(inst.model, inst.nested, kExactTopK);
  EXPECT_EQ(generate(a, Decoding::sampling(42), 20), generate(b, Decoding::sampling(42), 20));
}

TEST(Generate, StopsAfterEos) {
  const auto inst = testing::random_instance(3);
  ReductionSession s(inst.model, inst.nested, kExactTopK);
  const TokenSeq out = generate(s, Decoding::sampling(1), 200);
  ASSERT_FALSE(out.empty());
  if (out.size() < 200) {
    EXPECT_TRUE(inst.sub_tokenizer->vocab().is_eos(out.back()));
    EXPECT_TRUE(s.terminated());
    EXPECT_THROW(s.next_subtoken_dist_efficient(), Error);
  }
}

// Compares every child cover and p-tilde with exhaustive enumeration.
void expect_matches_brute_force(ReductionSession& s, const NestedTokenizer& nested,
                                const LanguageModel& model) {
  const auto d = s.next_subtoken_dist_efficient();
  for (TokenId y = 0; y < nested.inner().vocab().size(); ++y) {
    TokenSeq key = s.prefix();
    key.push_back(y);
    const auto brute = testing::brute_force_relative_cover(nested, key);
    const RelativeCover& cover = s.relative_cover(key);
    // Zero-mass sequences can only be found by the exhaustive search.
    std::set<TokenSeq> positive;
    double mass = 0.0;
    for (const TokenSeq& x : brute) {
      const double p = marginal(model, x);
      mass += p;
      if (p > 0.0) positive.insert(x);
    }
    std::set<TokenSeq> cached;
    for (const CoverEntry& e : cover.entries) {
      if (e.marginal > 0.0) cached.insert(e.seq);
      EXPECT_EQ(e.nested, nested.encode(e.seq));
      EXPECT_EQ(e.marginal, marginal(model, e.seq));
    }
    EXPECT_EQ(cached, positive);
    EXPECT_NEAR(d.unnormalized[y], mass, kExact);
  }
}

TEST(Cover, MatchesBruteForceOnRandomInstances) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = testing::random_instance(seed);
    ReductionSession s(inst.model, inst.nested, kExactTopK);
    TokenPicker picker(Decoding::sampling(seed));
    for (int step = 0; step < 5 && !s.terminated(); ++step) {
      SCOPED_TRACE(inst.describe() + " step " + std::to_string(step));
      expect_matches_brute_force(s, *inst.nested, *inst.model);
      s.step(picker.pick(s.last_distribution()->probs));
    }
  }
}

TEST(Cover, PrefixWithoutCanonicalEntry) {
  // "abc" retokenizes to <ab><c>, whose nested encoding a.b.c differs from
  // the sampled a.bc, so no cover entry nests to the prefix exactly.
  auto vocab = parse_vocabulary(R"(["a", "b", "c", "d", "ab", "bc", "abcd"])");
  auto sub = parse_vocabulary(R"(["a", "b", "c", "d", "bc"])");
  auto outer = make_tokenizer(vocab, std::nullopt);
  auto nested = std::make_shared<const NestedTokenizer>(outer, make_tokenizer(sub, std::nullopt));
  auto model = std::make_shared<const TableModel>(outer, std::map<TokenSeq, std::vector<double>>{},
                                                  std::vector<double>(7, 1.0 / 7));
  ReductionSession s(model, nested, kExactTopK);
  ReductionSession naive(model, nested, kExactTopK);
  for (TokenId y : {TokenId{0}, TokenId{4}}) {
    expect_matches_brute_force(s, *nested, *model);
    EXPECT_EQ(naive.next_subtoken_dist_naive().unnormalized, s.last_distribution()->unnormalized);
    s.step(y);
    naive.step(y);
  }
  EXPECT_EQ(seqs_of(s.current_cover()), (std::set<TokenSeq>{{6}}));
  const auto d = s.next_subtoken_dist_efficient();
  expect_near(d.probs, {0.0, 0.0, 0.0, 1.0, 0.0});
  EXPECT_EQ(naive.next_subtoken_dist_naive().unnormalized, d.unnormalized);
}

}  // namespace
}  // namespace lvr
