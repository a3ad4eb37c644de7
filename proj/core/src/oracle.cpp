#include "lvr/oracle.hpp"

#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "lvr/error.hpp"

namespace lvr {

namespace {

class Budget {
 public:
  explicit Budget(std::size_t limit) : limit_(limit) {}
  void charge() {
    if (++used_ > limit_) {
      throw BudgetExceeded("enumeration exceeded its budget of " +
                           std::to_string(limit_) + " sequences");
    }
  }

 private:
  std::size_t limit_;
  std::size_t used_ = 0;
};

bool compatible(std::string_view a, std::string_view b) {
  return starts_with(a, b) || starts_with(b, a);
}

// Depth-first walk over a token tree. Each node is reached with its path
// probability; when a child's text first passes a text prefix of length
// <= max_length, the child's probability is credited to that prefix.
// `filter` restricts the walk to branches compatible with one text.
template <typename State, typename Children>
void walk(const State& root, std::size_t max_length, std::string_view filter,
          Budget& budget, PrefixTable& table, Children children) {
  table[""] = 1.0;
  std::function<void(const State&, const ByteText&, double)> visit =
      [&](const State& node, const ByteText& text, double p) {
        children(node, [&](State child, const ByteText& child_text, double q, bool final) {
          if (!(q > 0.0) || !compatible(child_text, filter)) return;
          budget.charge();
          const std::size_t top = std::min(child_text.size(), max_length);
          for (std::size_t len = text.size() + 1; len <= top; ++len) {
            table[child_text.substr(0, len)] += q;
          }
          if (!final && child_text.size() < max_length) visit(child, child_text, q);
        }, text, p);
      };
  visit(root, ByteText{}, 1.0);
}

struct TokenNode {
  TokenSeq seq;
};

}  // namespace

std::vector<TokenSeq> minimal_cover(const Tokenizer& tokenizer, std::string_view text,
                                    std::size_t budget_limit) {
  const Vocabulary& v = tokenizer.vocab();
  Budget budget(budget_limit);
  std::vector<TokenSeq> cover;
  TokenSeq seq;
  ByteText decoded;
  std::function<void()> visit = [&]() {
    budget.charge();
    if (starts_with(decoded, text)) {
      if (tokenizer.is_valid(seq)) cover.push_back(seq);
      return;
    }
    if (!starts_with(text, decoded)) return;
    if (!seq.empty() && v.is_eos(seq.back())) return;
    for (TokenId x = 0; x < v.size(); ++x) {
      seq.push_back(x);
      decoded += v.surface(x);
      visit();
      decoded.resize(decoded.size() - v.surface(x).size());
      seq.pop_back();
    }
  };
  visit();
  return cover;
}

double text_prefix_prob(const LanguageModel& model, std::string_view text,
                        std::size_t budget) {
  std::unordered_map<TokenSeq, NextTokenDistribution, TokenSeqHash> memo;
  double total = 0.0;
  for (const TokenSeq& x : minimal_cover(model.tokenizer(), text, budget)) {
    double p = 1.0;
    TokenSeq prefix;
    for (TokenId t : x) {
      auto it = memo.find(prefix);
      if (it == memo.end()) it = memo.emplace(prefix, model.next_token_dist(prefix)).first;
      p *= it->second[t];
      if (p == 0.0) break;
      prefix.push_back(t);
    }
    total += p;
  }
  return total;
}

PrefixTable enumerated_prefix_table(const LanguageModel& model, std::size_t max_length,
                                    std::size_t budget_limit) {
  Budget budget(budget_limit);
  PrefixTable table;
  const Vocabulary& v = model.vocab();
  walk(TokenNode{}, max_length, "", budget, table,
       [&](const TokenNode& node, auto&& emit, const ByteText& text, double p) {
         const NextTokenDistribution cond = model.next_token_dist(node.seq);
         for (TokenId x = 0; x < v.size(); ++x) {
           if (!(cond[x] > 0.0)) continue;
           TokenNode child{node.seq};
           child.seq.push_back(x);
           emit(std::move(child), text + v.surface(x), p * cond[x], v.is_eos(x));
         }
       });
  return table;
}

namespace {

PrefixTable reduced_walk(const ReductionSession& root, std::size_t max_length,
                         std::string_view filter, ReductionAlgorithm algorithm,
                         std::size_t budget_limit) {
  if (!root.prefix().empty()) throw Error("reduced walk must start at the empty prefix");
  Budget budget(budget_limit);
  PrefixTable table;
  const Vocabulary& sub = root.nested().inner().vocab();
  walk(root, max_length, filter, budget, table,
       [&](const ReductionSession& node, auto&& emit, const ByteText& text, double p) {
         ReductionSession expanded = node;
         const SubTokenDistribution dist = algorithm == ReductionAlgorithm::naive
                                               ? expanded.next_subtoken_dist_naive()
                                               : expanded.next_subtoken_dist_efficient();
         for (TokenId y = 0; y < sub.size(); ++y) {
           if (!(dist.probs[y] > 0.0)) continue;
           const ByteText child_text = text + sub.surface(y);
           if (!compatible(child_text, filter)) continue;
           ReductionSession child = expanded;
           child.step(y);
           emit(std::move(child), child_text, p * dist.probs[y], sub.is_eos(y));
         }
       });
  return table;
}

}  // namespace

double reduced_text_prefix_prob(const ReductionSession& root, std::string_view text,
                                std::size_t budget) {
  const PrefixTable table = reduced_walk(root, text.size(), text,
                                         ReductionAlgorithm::efficient, budget);
  auto it = table.find(ByteText(text));
  return it == table.end() ? 0.0 : it->second;
}

PrefixTable reduced_prefix_table(const ReductionSession& root, std::size_t max_length,
                                 ReductionAlgorithm algorithm, std::size_t budget) {
  return reduced_walk(root, max_length, "", algorithm, budget);
}

PrefixTable naive_restriction_prefix_table(const LanguageModel& model,
                                           const Vocabulary& sub_vocab,
                                           std::size_t max_length,
                                           std::size_t budget_limit) {
  Budget budget(budget_limit);
  PrefixTable table;
  walk(TokenNode{}, max_length, "", budget, table,
       [&](const TokenNode& node, auto&& emit, const ByteText& text, double p) {
         SubTokenDistribution dist;
         try {
           dist = naive_restriction_dist(model, sub_vocab, node.seq);
         } catch (const ZeroMassError&) {
           return;
         }
         for (TokenId y = 0; y < sub_vocab.size(); ++y) {
           if (!(dist.probs[y] > 0.0)) continue;
           TokenNode child{node.seq};
           child.seq.push_back(y);
           emit(std::move(child), text + sub_vocab.surface(y), p * dist.probs[y],
                sub_vocab.is_eos(y));
         }
       });
  return table;
}

std::vector<ByteText> texts_up_to(const Alphabet& alphabet, std::size_t max_length) {
  std::vector<unsigned char> symbols;
  for (unsigned char s : alphabet.symbols()) {
    if (alphabet.eos() != s) symbols.push_back(s);
  }
  std::vector<ByteText> texts{""};
  std::vector<ByteText> layer{""};
  for (std::size_t len = 1; len <= max_length; ++len) {
    std::vector<ByteText> next;
    for (const ByteText& t : layer) {
      for (unsigned char s : symbols) next.push_back(t + static_cast<char>(s));
    }
    if (alphabet.eos()) {
      for (const ByteText& t : layer) texts.push_back(t + static_cast<char>(*alphabet.eos()));
    }
    texts.insert(texts.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return texts;
}

PrefixProbReport lossless_check(std::shared_ptr<const LanguageModel> model,
                                std::shared_ptr<const Tokenizer> sub_tokenizer,
                                const LosslessOptions& options) {
  const Alphabet& alphabet = model->vocab().alphabet();
  const std::size_t plain = alphabet.size() - (alphabet.eos() ? 1 : 0);
  if (std::pow(static_cast<double>(std::max<std::size_t>(plain, 1)),
               static_cast<double>(options.max_length)) > static_cast<double>(options.budget)) {
    throw BudgetExceeded("too many texts of length " + std::to_string(options.max_length) +
                         " over " + std::to_string(plain) + " symbols for the budget");
  }
  auto nested = std::make_shared<const NestedTokenizer>(model->tokenizer_ptr(), sub_tokenizer);

  PrefixProbReport report;
  report.tol = options.tol;
  report.description = "|A|=" + std::to_string(alphabet.size()) +
                       " |V|=" + std::to_string(model->vocab().size()) +
                       " |V_sub|=" + std::to_string(sub_tokenizer->vocab().size()) +
                       " L=" + std::to_string(options.max_length) + " method=" +
                       (options.method == SubModelMethod::lossless ? "lossless"
                                                                   : "naive_restriction");

  const PrefixTable enumerated =
      enumerated_prefix_table(*model, options.max_length, options.budget);
  const PrefixTable reduced =
      options.method == SubModelMethod::lossless
          ? reduced_prefix_table(ReductionSession(model, nested, options.topk),
                                 options.max_length, options.algorithm, options.budget)
          : naive_restriction_prefix_table(*model, sub_tokenizer->vocab(),
                                           options.max_length, options.budget);
  auto lookup = [](const PrefixTable& t, const ByteText& k) {
    auto it = t.find(k);
    return it == t.end() ? 0.0 : it->second;
  };

  for (const ByteText& text : texts_up_to(alphabet, options.max_length)) {
    PrefixProbRow row;
    row.text = text;
    row.cover = text_prefix_prob(*model, text, options.budget);
    row.enumerated = lookup(enumerated, text);
    row.reduced = lookup(reduced, text);
    row.discrepancy = std::max(std::abs(row.cover - row.reduced),
                               std::abs(row.cover - row.enumerated));
    if (report.rows.empty() || row.discrepancy > report.max_discrepancy) {
      report.max_discrepancy = row.discrepancy;
      report.worst_text = text;
    }
    report.rows.push_back(std::move(row));
  }
  report.pass = report.max_discrepancy <= options.tol;
  return report;
}

std::string report_json(const PrefixProbReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const PrefixProbRow& r : report.rows) {
    rows.push_back({{"text", escape_surface(r.text)},
                    {"cover", r.cover},
                    {"enumerated", r.enumerated},
                    {"reduced", r.reduced},
                    {"discrepancy", r.discrepancy}});
  }
  nlohmann::json j = {{"instance", report.description},
                      {"tol", report.tol},
                      {"max_discrepancy", report.max_discrepancy},
                      {"worst_text", escape_surface(report.worst_text)},
                      {"pass", report.pass},
                      {"rows", rows}};
  return j.dump(1) + "\n";
}

}  // namespace lvr
