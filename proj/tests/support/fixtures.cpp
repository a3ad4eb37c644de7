#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>

#include "lvr/io.hpp"
#include "lvr/mcv.hpp"

namespace lvr::testing {

WorkedFixture worked_fixture() {
  WorkedFixture f;
  const Alphabet binary = Alphabet::of("01");
  f.vocab = std::make_shared<const Vocabulary>(binary, std::vector<ByteText>{"0", "1", "00", "001"});
  f.sub_vocab = std::make_shared<const Vocabulary>(binary, std::vector<ByteText>{"0", "1", "00"});
  f.tokenizer = std::make_shared<const GreedyTokenizer>(f.vocab);
  f.sub_tokenizer = std::make_shared<const GreedyTokenizer>(f.sub_vocab);
  f.nested = std::make_shared<const NestedTokenizer>(f.tokenizer, f.sub_tokenizer);
  std::map<TokenSeq, std::vector<double>> table{
      {{}, {0.1, 0.1, 0.5, 0.3}},
      {{WorkedFixture::v00}, {0.6, 0.0, 0.3, 0.1}},
  };
  f.model = std::make_shared<const TableModel>(f.tokenizer, std::move(table),
                                               std::vector<double>(4, 0.25));
  return f;
}

namespace {

std::vector<double> random_row(std::mt19937_64& rng, std::size_t n, double zero_prob) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> row(n);
  for (double& p : row) p = u(rng) < zero_prob ? 0.0 : u(rng) + 0.01;
  double total = 0.0;
  for (double p : row) total += p;
  if (total == 0.0) {
    std::fill(row.begin(), row.end(), 1.0);
    total = static_cast<double>(n);
  }
  for (double& p : row) p /= total;
  return row;
}

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

}  // namespace

std::string RandomInstance::describe() const {
  std::string out = "seed=" + std::to_string(seed) +
                    (kind == TokenizerKind::bpe ? " bpe" : " greedy") + " V=[";
  for (const ByteText& s : tokenizer->vocab().surfaces()) out += s + " ";
  out += "] V_sub=[";
  for (const ByteText& s : sub_tokenizer->vocab().surfaces()) out += s + " ";
  return out + "]";
}

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceOptions& options) {
  std::mt19937_64 rng(seed);
  RandomInstance inst;
  inst.seed = seed;
  inst.kind = options.kind;

  const std::string symbols = std::uniform_int_distribution<int>(0, 1)(rng) ? "ab" : "abcd";
  const Alphabet alphabet = Alphabet::of(symbols + "$", '$');
  std::vector<ByteText> surfaces;
  for (char c : symbols) surfaces.emplace_back(1, c);
  surfaces.emplace_back("$");

  std::vector<std::pair<ByteText, ByteText>> merges;
  const std::size_t target = std::uniform_int_distribution<std::size_t>(
      surfaces.size(), std::max(surfaces.size(), options.max_vocab))(rng);
  std::uniform_int_distribution<std::size_t> len(2, 3);
  for (int attempt = 0; attempt < 200 && surfaces.size() < target; ++attempt) {
    if (options.kind == TokenizerKind::bpe) {
      std::vector<ByteText> operands;
      for (const ByteText& s : surfaces) {
        if (s != "$") operands.push_back(s);
      }
      const ByteText l = pick(rng, operands);
      const ByteText r = pick(rng, operands);
      if (l.size() + r.size() > 3) continue;
      if (std::find(surfaces.begin(), surfaces.end(), l + r) != surfaces.end()) continue;
      merges.emplace_back(l, r);
      surfaces.push_back(l + r);
    } else {
      ByteText s;
      std::uniform_int_distribution<std::size_t> sym(0, symbols.size() - 1);
      for (std::size_t i = len(rng); i > 0; --i) s += symbols[sym(rng)];
      if (std::find(surfaces.begin(), surfaces.end(), s) == surfaces.end()) surfaces.push_back(s);
    }
  }
  auto vocab = std::make_shared<const Vocabulary>(alphabet, surfaces);
  inst.tokenizer = options.kind == TokenizerKind::bpe
                       ? make_tokenizer(vocab, merges)
                       : make_tokenizer(vocab, std::nullopt);

  std::vector<ByteText> sub_surfaces;
  for (const ByteText& s : surfaces) {
    const bool keep = s.size() == 1 ||
                      (!options.byte_level_sub && std::uniform_int_distribution<int>(0, 1)(rng));
    if (keep) sub_surfaces.push_back(s);
  }
  auto sub_vocab = std::make_shared<const Vocabulary>(alphabet, sub_surfaces);
  if (options.kind == TokenizerKind::bpe) {
    auto* bpe = dynamic_cast<const BpeTokenizer*>(inst.tokenizer.get());
    auto kept = restrict_merges(*vocab, bpe->merges(), *sub_vocab);
    inst.sub_tokenizer = std::make_shared<const BpeTokenizer>(sub_vocab, std::move(kept));
  } else {
    inst.sub_tokenizer = std::make_shared<const GreedyTokenizer>(sub_vocab);
  }
  inst.nested = std::make_shared<const NestedTokenizer>(inst.tokenizer, inst.sub_tokenizer);

  // Rows for every valid, EOS-free prefix shorter than table_depth.
  std::map<TokenSeq, std::vector<double>> table;
  std::vector<TokenSeq> layer{TokenSeq{}};
  for (std::size_t depth = 0; depth < options.table_depth; ++depth) {
    std::vector<TokenSeq> next;
    for (const TokenSeq& prefix : layer) {
      if (!inst.tokenizer->is_valid(prefix)) continue;
      table.emplace(prefix, random_row(rng, vocab->size(), options.zero_prob));
      for (TokenId x = 0; x < vocab->size(); ++x) {
        if (vocab->is_eos(x)) continue;
        TokenSeq child = prefix;
        child.push_back(x);
        next.push_back(std::move(child));
      }
    }
    layer = std::move(next);
  }
  // A valid prefix whose row masks to nothing would make the model partial;
  // give such rows their uniform fallback instead.
  for (auto& [prefix, row] : table) {
    double kept = 0.0;
    for (TokenId x = 0; x < vocab->size(); ++x) {
      TokenSeq ext = prefix;
      ext.push_back(x);
      if (inst.tokenizer->is_valid(ext)) kept += row[x];
    }
    if (kept == 0.0) std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
  }
  inst.model = std::make_shared<const TableModel>(
      inst.tokenizer, std::move(table),
      std::vector<double>(vocab->size(), 1.0 / static_cast<double>(vocab->size())));
  return inst;
}

std::vector<TokenSeq> brute_force_relative_cover(const NestedTokenizer& nested,
                                                 const TokenSeq& y) {
  const Vocabulary& v = nested.outer().vocab();
  std::vector<TokenSeq> cover;
  TokenSeq x;
  TokenSeq n;
  std::function<void()> visit = [&]() {
    if (starts_with(n, y)) {
      if (nested.outer().is_valid(x)) cover.push_back(x);
      return;
    }
    if (!starts_with(y, n)) return;
    if (!x.empty() && v.is_eos(x.back())) return;
    for (TokenId t = 0; t < v.size(); ++t) {
      const auto sub = nested.nested_of(t);
      x.push_back(t);
      n.insert(n.end(), sub.begin(), sub.end());
      visit();
      n.resize(n.size() - sub.size());
      x.pop_back();
    }
  };
  visit();
  return cover;
}

TempDir::TempDir() {
  static std::mt19937_64 rng(std::random_device{}());
  path_ = std::filesystem::temp_directory_path() / ("lvr-test-" + std::to_string(rng()));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::filesystem::path TempDir::write(const std::string& name,
                                     const std::string& contents) const {
  const auto p = path_ / name;
  std::ofstream(p, std::ios::binary) << contents;
  return p;
}

std::filesystem::path data_dir() { return LVR_TEST_DATA_DIR; }

}  // namespace lvr::testing
