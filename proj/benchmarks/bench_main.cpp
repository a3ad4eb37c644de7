#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "lvr/bpe_train.hpp"
#include "lvr/model.hpp"
#include "lvr/reduction.hpp"

namespace {

std::vector<lvr::ByteText> synthetic_corpus(std::size_t docs) {
  static const char* words[] = {"the", "cat", "sat", "on", "a", "mat", "then", "ran",
                                "to", "sea", "and", "back", "again", "at", "noon"};
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> word(0, std::size(words) - 1);
  std::uniform_int_distribution<std::size_t> len(4, 12);
  std::vector<lvr::ByteText> corpus;
  for (std::size_t d = 0; d < docs; ++d) {
    lvr::ByteText doc;
    for (std::size_t n = len(rng); n > 0; --n) {
      if (!doc.empty()) doc += ' ';
      doc += words[word(rng)];
    }
    corpus.push_back(std::move(doc));
  }
  return corpus;
}

struct Setup {
  lvr::BpeModel bpe;
  std::shared_ptr<const lvr::LanguageModel> model;
  std::shared_ptr<const lvr::NestedTokenizer> nested;
  std::vector<lvr::ByteText> corpus;

  static const Setup& get() {
    static const Setup s = [] {
      Setup s;
      s.corpus = synthetic_corpus(200);
      lvr::ByteText symbols = "abcdefghijklmnopqrstuvwxyz $";
      const auto alphabet = lvr::Alphabet::of(symbols, '$');
      s.bpe = lvr::train_bpe(s.corpus, alphabet, 40);
      s.model = std::make_shared<const lvr::NgramModel>(
          lvr::NgramModel::train(s.bpe.tokenizer, s.corpus, 2, 0.05));
      auto bytes = std::make_shared<const lvr::GreedyTokenizer>(
          std::make_shared<const lvr::Vocabulary>(lvr::symbol_vocabulary(alphabet)));
      s.nested = std::make_shared<const lvr::NestedTokenizer>(s.bpe.tokenizer, bytes);
      return s;
    }();
    return s;
  }
};

void BM_BpeEncode(benchmark::State& state) {
  const Setup& s = Setup::get();
  std::size_t bytes = 0;
  for (auto _ : state) {
    for (const auto& doc : s.corpus) {
      benchmark::DoNotOptimize(s.bpe.tokenizer->encode(doc));
      bytes += doc.size();
    }
  }
  state.SetBytesProcessed(static_cast<int64_t>(bytes));
}
BENCHMARK(BM_BpeEncode);

void run_reduction(benchmark::State& state, lvr::ReductionAlgorithm algorithm,
                   std::size_t topk) {
  const Setup& s = Setup::get();
  const std::size_t steps = 16;
  for (auto _ : state) {
    lvr::ReductionSession session(s.model, s.nested, topk);
    lvr::TokenPicker picker(lvr::Decoding::sampling(3));
    for (std::size_t i = 0; i < steps && !session.terminated(); ++i) {
      const auto dist = algorithm == lvr::ReductionAlgorithm::naive
                            ? session.next_subtoken_dist_naive()
                            : session.next_subtoken_dist_efficient();
      session.step(picker.pick(dist.probs));
    }
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * steps));
}

void BM_ReductionNaive(benchmark::State& state) {
  run_reduction(state, lvr::ReductionAlgorithm::naive, lvr::kExactTopK);
}
BENCHMARK(BM_ReductionNaive);

void BM_ReductionEfficient(benchmark::State& state) {
  run_reduction(state, lvr::ReductionAlgorithm::efficient,
                static_cast<std::size_t>(state.range(0)));
}
BENCHMARK(BM_ReductionEfficient)->Arg(4)->Arg(16)->Arg(1 << 20);

}  // namespace
BENCHMARK_MAIN();
