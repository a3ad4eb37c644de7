#include "lvr/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <optional>

#include "lvr/ensemble.hpp"
#include "lvr/error.hpp"
#include "lvr/io.hpp"
#include "lvr/mcv.hpp"
#include "lvr/oracle.hpp"

namespace lvr::cli {

namespace {

using nlohmann::json;

// Bad flag values and combinations; reported like parse errors.
class UsageError : public Error {
 public:
  using Error::Error;
};

struct Config {
  std::vector<std::string> vocab;
  std::vector<std::string> merges;
  std::string eos;
  std::optional<std::string> text;
  std::string model;
  std::vector<std::string> members;
  std::string subvocab;
  std::string sub_merges;
  std::optional<std::string> k;
  std::uint64_t seed = 0;
  std::size_t max_steps = 64;
  std::string mode = "poe";
  std::string decoding = "greedy";
  std::string trace;
  std::string out;
  std::size_t length = 5;
  double tol = 1e-9;
  std::string baseline;
  std::size_t bytes = 500;
};

std::size_t parse_k(const std::optional<std::string>& k, std::size_t fallback) {
  if (!k) return fallback;
  if (*k == "exact") return kExactTopK;
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(*k, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != k->size() || v == 0) throw UsageError("--k must be a positive integer or \"exact\"");
  return static_cast<std::size_t>(v);
}

Decoding decoding_of(const Config& cfg) {
  if (cfg.decoding == "greedy") return Decoding::greedy();
  if (cfg.decoding == "sample") return Decoding::sampling(cfg.seed);
  throw UsageError("--decoding must be greedy or sample");
}

CombineMode mode_of(const Config& cfg) {
  if (cfg.mode == "poe") return CombineMode::poe;
  if (cfg.mode == "moe") return CombineMode::moe;
  throw UsageError("--mode must be poe or moe");
}

std::optional<unsigned char> eos_of(const Config& cfg) {
  if (cfg.eos.empty()) return std::nullopt;
  return parse_eos_symbol(cfg.eos);
}

std::size_t enum_budget() {
  const char* env = std::getenv("LVR_ENUM_BUDGET");
  if (!env || !*env) return kDefaultEnumBudget;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || v == 0) throw UsageError("LVR_ENUM_BUDGET must be a positive integer");
  return static_cast<std::size_t>(v);
}

std::vector<std::shared_ptr<const LanguageModel>> load_models(const Config& cfg) {
  std::vector<std::shared_ptr<const LanguageModel>> models;
  if (!cfg.model.empty()) models.push_back(load_model(cfg.model));
  for (const std::string& m : cfg.members) models.push_back(load_model(m));
  if (models.empty()) throw UsageError("no model given (--model or --members)");
  return models;
}

// The sub-vocabulary tokenizer named by --subvocab, shared by all models.
std::shared_ptr<const Tokenizer> sub_tokenizer(
    const Config& cfg, const std::vector<std::shared_ptr<const LanguageModel>>& models,
    const std::string& spec) {
  const Alphabet& alphabet = models.front()->vocab().alphabet();
  for (const auto& m : models) {
    if (!(m->vocab().alphabet() == alphabet)) {
      throw UsageError("models are over different alphabets");
    }
  }
  if (spec == "bytes") {
    return std::make_shared<const GreedyTokenizer>(
        std::make_shared<const Vocabulary>(symbol_vocabulary(alphabet)));
  }
  if (spec == "mcv") {
    std::vector<const BpeTokenizer*> bpes;
    for (const auto& m : models) {
      auto* bpe = dynamic_cast<const BpeTokenizer*>(&m->tokenizer());
      if (!bpe) throw UsageError("--subvocab mcv needs BPE models (give each a merges file)");
      bpes.push_back(bpe);
    }
    if (bpes.size() == 1) return models.front()->tokenizer_ptr();
    return build_mcv(bpes).tokenizer;
  }
  auto vocab = load_vocabulary(spec, alphabet.eos());
  std::optional<std::vector<SurfacePair>> merges;
  if (!cfg.sub_merges.empty()) merges = load_merges(cfg.sub_merges);
  return make_tokenizer(vocab, merges);
}

EnsembleSpec ensemble_spec(const std::vector<std::shared_ptr<const LanguageModel>>& models,
                           const std::shared_ptr<const Tokenizer>& sub, std::size_t topk,
                           CombineMode mode) {
  EnsembleSpec spec;
  spec.mode = mode;
  for (const auto& m : models) {
    spec.members.push_back(
        {m, std::make_shared<const NestedTokenizer>(m->tokenizer_ptr(), sub), topk});
  }
  return spec;
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (path.empty()) return;
    file_.open(path, std::ios::binary);
    if (!file_) throw Error("cannot write " + path);
    out_ = &file_;
  }
  std::ostream& stream() { return *out_; }
  bool is_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

json dist_record(std::size_t step, TokenId chosen, const Vocabulary& sub,
                 const SubTokenDistribution& d) {
  return {{"step", step},
          {"chosen", chosen},
          {"chosen_surface", escape_surface(sub.surface(chosen))},
          {"probs", d.probs},
          {"unnormalized", d.unnormalized},
          {"normalizer", d.normalizer},
          {"dropped_mass", d.dropped_mass},
          {"cover_sizes", d.cover_sizes}};
}

void write_text(const Config& cfg, std::ostream& out, const ByteText& text) {
  Output o(cfg.out, out);
  o.stream() << text;
  if (!o.is_file()) o.stream() << '\n';
}

int cmd_tokenize(const Config& cfg, std::istream& in, std::ostream& out) {
  if (cfg.vocab.size() != 1 || cfg.merges.size() > 1) {
    throw UsageError("tokenize takes one --vocab and at most one --merges");
  }
  auto vocab = load_vocabulary(cfg.vocab[0], eos_of(cfg));
  std::optional<std::vector<SurfacePair>> merges;
  if (!cfg.merges.empty()) merges = load_merges(cfg.merges[0]);
  auto tokenizer = make_tokenizer(vocab, merges);
  const std::string text =
      cfg.text ? *cfg.text
               : std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  for (TokenId id : tokenizer->encode(text)) {
    out << id << '\t' << to_hex(vocab->surface(id)) << '\n';
  }
  return kOk;
}

int cmd_reduce_generate(const Config& cfg, std::ostream& out) {
  const auto models = load_models(cfg);
  if (models.size() != 1) throw UsageError("reduce-generate takes exactly one --model");
  const auto sub = sub_tokenizer(cfg, models, cfg.subvocab.empty() ? "bytes" : cfg.subvocab);
  auto nested = std::make_shared<const NestedTokenizer>(models[0]->tokenizer_ptr(), sub);
  ReductionSession session(models[0], nested, parse_k(cfg.k, kDefaultTopK));

  Output trace(cfg.trace, out);
  const Vocabulary& sub_vocab = sub->vocab();
  const TokenSeq ys = generate(session, decoding_of(cfg), cfg.max_steps,
                               [&](const GenerationStep& s) {
                                 if (!cfg.trace.empty()) {
                                   trace.stream() << dist_record(s.index, s.chosen, sub_vocab, *s.dist).dump() << '\n';
                                 }
                               });
  write_text(cfg, out, sub_vocab.decode(ys));
  return kOk;
}

int cmd_build_mcv(const Config& cfg, std::ostream& out) {
  if (cfg.vocab.size() < 2 || cfg.vocab.size() != cfg.merges.size()) {
    throw UsageError("build-mcv needs at least two --vocab, each with its --merges");
  }
  std::vector<std::shared_ptr<const Tokenizer>> owned;
  std::vector<const BpeTokenizer*> bpes;
  for (std::size_t i = 0; i < cfg.vocab.size(); ++i) {
    owned.push_back(make_tokenizer(load_vocabulary(cfg.vocab[i], eos_of(cfg)),
                                   load_merges(cfg.merges[i])));
    bpes.push_back(static_cast<const BpeTokenizer*>(owned.back().get()));
  }
  const McvResult mcv = build_mcv(bpes);
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    save_vocabulary(std::filesystem::path(cfg.out) / "vocab.json", *mcv.vocab);
    save_merges(std::filesystem::path(cfg.out) / "merges.txt", *mcv.vocab, mcv.merges);
  }
  json sizes = json::array();
  for (const BpeTokenizer* t : bpes) sizes.push_back(t->vocab().size());
  out << json{{"input_vocab_sizes", sizes},
              {"input_merge_counts", [&] {
                 json m = json::array();
                 for (const BpeTokenizer* t : bpes) m.push_back(t->merges().size());
                 return m;
               }()},
              {"mcv_vocab_size", mcv.vocab->size()},
              {"mcv_merge_count", mcv.merges.size()},
              {"source", mcv.source}}
             .dump(1)
      << '\n';
  return kOk;
}

int union_generate(const Config& cfg, std::ostream& out,
                   const std::vector<std::shared_ptr<const LanguageModel>>& models) {
  std::vector<const Vocabulary*> vocabs;
  std::vector<const LanguageModel*> raw;
  for (const auto& m : models) {
    vocabs.push_back(&m->vocab());
    raw.push_back(m.get());
  }
  const Vocabulary u = union_vocabulary(vocabs);
  TokenPicker picker(decoding_of(cfg));
  Output trace(cfg.trace, out);
  TokenSeq prefix;
  for (std::size_t i = 0; i < cfg.max_steps; ++i) {
    const std::vector<double> d = union_baseline_dist(raw, u, prefix, mode_of(cfg));
    const TokenId chosen = picker.pick(d);
    if (!cfg.trace.empty()) {
      trace.stream() << json{{"step", i},
                             {"chosen", chosen},
                             {"chosen_surface", escape_surface(u.surface(chosen))},
                             {"probs", d}}
                            .dump()
                     << '\n';
    }
    prefix.push_back(chosen);
    if (u.is_eos(chosen)) break;
  }
  write_text(cfg, out, u.decode(prefix));
  return kOk;
}

int cmd_ensemble_generate(const Config& cfg, std::ostream& out) {
  const auto models = load_models(cfg);
  if (cfg.baseline == "union") return union_generate(cfg, out, models);
  if (!cfg.baseline.empty()) throw UsageError("--baseline must be union");
  const auto sub = sub_tokenizer(cfg, models, cfg.subvocab.empty() ? "mcv" : cfg.subvocab);
  const EnsembleSpec spec =
      ensemble_spec(models, sub, parse_k(cfg.k, kDefaultTopK), mode_of(cfg));

  Output trace(cfg.trace, out);
  const Vocabulary& sub_vocab = sub->vocab();
  const TokenSeq ys = ensemble_generate(
      spec, decoding_of(cfg), cfg.max_steps, [&](const EnsembleStep& s) {
        if (cfg.trace.empty()) return;
        json record = dist_record(s.index, s.chosen, sub_vocab, *s.combined);
        json members = json::array();
        for (const SubTokenDistribution& d : s.members) {
          members.push_back({{"probs", d.probs}, {"dropped_mass", d.dropped_mass}});
        }
        record["members"] = members;
        trace.stream() << record.dump() << '\n';
      });
  write_text(cfg, out, sub_vocab.decode(ys));
  return kOk;
}

int cmd_verify_lossless(const Config& cfg, std::ostream& out) {
  const auto models = load_models(cfg);
  if (models.size() != 1) throw UsageError("verify-lossless takes exactly one --model");
  LosslessOptions options;
  options.max_length = cfg.length;
  options.tol = cfg.tol;
  options.budget = enum_budget();
  options.topk = parse_k(cfg.k, kExactTopK);
  if (cfg.baseline == "naive") {
    options.method = SubModelMethod::naive_restriction;
  } else if (!cfg.baseline.empty()) {
    throw UsageError("--baseline must be naive");
  }
  const auto sub = sub_tokenizer(cfg, models, cfg.subvocab.empty() ? "bytes" : cfg.subvocab);
  const PrefixProbReport report = lossless_check(models[0], sub, options);
  if (!cfg.out.empty()) {
    Output o(cfg.out, out);
    o.stream() << report_json(report);
  }
  out << (report.pass ? "PASS" : "FAIL") << " max_discrepancy=" << report.max_discrepancy
      << " worst_text=\"" << escape_surface(report.worst_text) << "\" texts="
      << report.rows.size() << " tol=" << report.tol << " (" << report.description << ")\n";
  return report.pass ? kOk : kVerificationFailed;
}

json bench_run(const std::string& label, const EnsembleSpec& spec, const Decoding& decoding,
               std::size_t bytes) {
  const auto start = std::chrono::steady_clock::now();
  const ByteRun run = generate_bytes(spec, decoding, bytes);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double steps = static_cast<double>(run.steps);
  const double produced = static_cast<double>(run.text.size());
  return {{"subvocab", label},
          {"sub_vocab_size", spec.members.front().nested->inner().vocab().size()},
          {"steps", run.steps},
          {"bytes", run.text.size()},
          {"documents", run.documents},
          {"bytes_per_step", produced / steps},
          {"seconds", seconds},
          {"steps_per_sec", seconds > 0 ? steps / seconds : 0.0},
          {"bytes_per_sec", seconds > 0 ? produced / seconds : 0.0}};
}

int cmd_bench(const Config& cfg, std::ostream& out) {
  const auto models = load_models(cfg);
  const std::size_t topk = parse_k(cfg.k, kDefaultTopK);
  const CombineMode mode = mode_of(cfg);
  const Decoding decoding = decoding_of(cfg);
  const std::string other = cfg.subvocab.empty() ? "mcv" : cfg.subvocab;

  const json bytes_run = bench_run(
      "bytes", ensemble_spec(models, sub_tokenizer(cfg, models, "bytes"), topk, mode),
      decoding, cfg.bytes);
  const json other_run = bench_run(
      other, ensemble_spec(models, sub_tokenizer(cfg, models, other), topk, mode), decoding,
      cfg.bytes);
  const json report{
      {"target_bytes", cfg.bytes},
      {"members", models.size()},
      {"runs", {bytes_run, other_run}},
      {"bytes_per_step_ratio",
       other_run["bytes_per_step"].get<double>() / bytes_run["bytes_per_step"].get<double>()},
      {"steps_ratio", bytes_run["steps"].get<double>() / other_run["steps"].get<double>()}};
  Output o(cfg.out, out);
  o.stream() << report.dump(1) << '\n';
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Lossless vocabulary reduction toolkit", "lvr"};
  app.require_subcommand(1);
  Config cfg;

  auto* tokenize = app.add_subcommand("tokenize", "Encode text and list its tokens");
  tokenize->add_option("--vocab", cfg.vocab, "Vocabulary JSON")->required()->expected(1);
  tokenize->add_option("--merges", cfg.merges, "BPE merges file")->expected(1);
  tokenize->add_option("--text", cfg.text, "Text to encode (default: standard input)");

  auto* reduce = app.add_subcommand("reduce-generate", "Generate through a reduced model");
  auto* mcv = app.add_subcommand("build-mcv", "Build the maximal common vocabulary");
  mcv->add_option("--vocab", cfg.vocab, "Member vocabulary JSON (repeat)")->required();
  mcv->add_option("--merges", cfg.merges, "Member merges file (repeat, same order)")->required();
  auto* ensemble = app.add_subcommand("ensemble-generate", "Generate with a lock-step ensemble");
  auto* verify = app.add_subcommand("verify-lossless", "Check prefix probabilities by enumeration");
  auto* bench = app.add_subcommand("bench", "Compare byte-level and larger sub-vocabularies");

  for (auto* sub : {tokenize, mcv}) {
    sub->add_option("--eos", cfg.eos, "Single EOS symbol reserved in the alphabet");
  }
  for (auto* sub : {reduce, verify}) {
    sub->add_option("--model", cfg.model, "Model JSON")->required();
  }
  ensemble->add_option("--members", cfg.members, "Member model JSON files")->required();
  bench->add_option("--members", cfg.members, "Member model JSON files")->required();
  for (auto* sub : {reduce, ensemble, verify, bench}) {
    sub->add_option("--subvocab", cfg.subvocab, "Sub-vocabulary: bytes, mcv or a vocabulary path");
    sub->add_option("--sub-merges", cfg.sub_merges, "Merges for a --subvocab path (BPE)");
    sub->add_option("--k", cfg.k, "Top-K extensions per step, or exact");
  }
  for (auto* sub : {reduce, ensemble, bench}) {
    sub->add_option("--seed", cfg.seed, "Sampling seed");
    sub->add_option("--decoding", cfg.decoding, "greedy or sample");
  }
  for (auto* sub : {reduce, ensemble}) {
    sub->add_option("--max-steps", cfg.max_steps, "Maximum sub-tokens to generate");
    sub->add_option("--trace", cfg.trace, "JSON-lines trace output");
  }
  for (auto* sub : {ensemble, bench}) {
    sub->add_option("--mode", cfg.mode, "poe or moe");
  }
  for (auto* sub : {reduce, mcv, ensemble, verify, bench}) {
    sub->add_option("--out", cfg.out, "Output path (directory for build-mcv)");
  }
  ensemble->add_option("--baseline", cfg.baseline, "union: ensemble over the union vocabulary");
  verify->add_option("--baseline", cfg.baseline, "naive: restriction baseline instead of reduction");
  verify->add_option("--length", cfg.length, "Longest text to check");
  verify->add_option("--tol", cfg.tol, "Absolute tolerance");
  bench->add_option("--bytes", cfg.bytes, "Bytes to generate per configuration");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (*tokenize) return cmd_tokenize(cfg, in, out);
    if (*reduce) return cmd_reduce_generate(cfg, out);
    if (*mcv) return cmd_build_mcv(cfg, out);
    if (*ensemble) return cmd_ensemble_generate(cfg, out);
    if (*verify) return cmd_verify_lossless(cfg, out);
    if (*bench) return cmd_bench(cfg, out);
  } catch (const UsageError& e) {
    err << "lvr: " << e.what() << '\n';
    return kUsageError;
  } catch (const ParseError& e) {
    err << "lvr: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "lvr: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace lvr::cli
