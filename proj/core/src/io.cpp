#include "lvr/io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "lvr/error.hpp"

namespace lvr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

std::shared_ptr<const Vocabulary> vocabulary_from_json(
    const json& j, std::optional<unsigned char> eos) {
  if (!j.is_array()) throw ParseError("vocabulary must be a JSON array of strings");
  std::vector<ByteText> surfaces;
  std::string symbols;
  for (const json& item : j) {
    if (!item.is_string()) throw ParseError("vocabulary entries must be strings");
    surfaces.push_back(unescape_surface(item.get<std::string>()));
    if (surfaces.back().size() == 1) symbols += surfaces.back();
  }
  if (symbols.empty()) throw ParseError("vocabulary has no single-symbol tokens");
  try {
    return std::make_shared<const Vocabulary>(Alphabet::of(symbols, eos),
                                              std::move(surfaces));
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(std::string("invalid vocabulary: ") + e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("model file lacks \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("model field \"") + key + "\": " + e.what());
  }
}

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<const Vocabulary> parse_vocabulary(const std::string& json_text,
                                                   std::optional<unsigned char> eos) {
  return vocabulary_from_json(parse_json(json_text, "vocabulary"), eos);
}

std::shared_ptr<const Vocabulary> load_vocabulary(const fs::path& path,
                                                  std::optional<unsigned char> eos) {
  return vocabulary_from_json(parse_json(read_file(path), path.string()), eos);
}

std::string vocabulary_json(const Vocabulary& vocab) {
  json j = json::array();
  for (const ByteText& s : vocab.surfaces()) j.push_back(escape_surface(s));
  return j.dump(1) + "\n";
}

void save_vocabulary(const fs::path& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << vocabulary_json(vocab);
}

std::vector<SurfacePair> parse_merges(const std::string& text) {
  std::vector<SurfacePair> merges;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
      throw ParseError("merges line " + std::to_string(line_no) +
                       ": expected LEFT<TAB>RIGHT");
    }
    merges.emplace_back(unescape_surface(line.substr(0, tab)),
                        unescape_surface(line.substr(tab + 1)));
    if (merges.back().first.empty() || merges.back().second.empty()) {
      throw ParseError("merges line " + std::to_string(line_no) + ": empty surface");
    }
  }
  return merges;
}

std::vector<SurfacePair> load_merges(const fs::path& path) {
  return parse_merges(read_file(path));
}

std::string merges_text(const Vocabulary& vocab, std::span<const MergePair> merges) {
  std::string out;
  for (const auto& [l, r] : merges) {
    out += escape_surface(vocab.surface(l));
    out += '\t';
    out += escape_surface(vocab.surface(r));
    out += '\n';
  }
  return out;
}

void save_merges(const fs::path& path, const Vocabulary& vocab,
                 std::span<const MergePair> merges) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << merges_text(vocab, merges);
}

std::shared_ptr<const Tokenizer> make_tokenizer(
    std::shared_ptr<const Vocabulary> vocab,
    const std::optional<std::vector<SurfacePair>>& merges) {
  if (!merges) return std::make_shared<const GreedyTokenizer>(std::move(vocab));
  auto resolved = resolve_merges(*vocab, *merges);
  return std::make_shared<const BpeTokenizer>(std::move(vocab), std::move(resolved));
}

unsigned char parse_eos_symbol(const std::string& escaped) {
  const ByteText s = unescape_surface(escaped);
  if (s.size() != 1) throw ParseError("EOS must be a single symbol, got \"" + escaped + "\"");
  return static_cast<unsigned char>(s[0]);
}

std::shared_ptr<const LanguageModel> load_model(const fs::path& path) {
  const json j = parse_json(read_file(path), path.string());
  if (!j.is_object()) throw ParseError(path.string() + ": model must be a JSON object");
  const fs::path base = path.parent_path();

  std::optional<unsigned char> eos;
  if (j.contains("eos")) eos = parse_eos_symbol(field<std::string>(j, "eos"));

  if (!j.contains("vocab")) throw ParseError("model file lacks \"vocab\"");
  const json& v = j.at("vocab");
  std::shared_ptr<const Vocabulary> vocab =
      v.is_string() ? load_vocabulary(resolve(base, v.get<std::string>()), eos)
                    : vocabulary_from_json(v, eos);

  std::optional<std::vector<SurfacePair>> merges;
  if (j.contains("merges")) {
    merges = load_merges(resolve(base, field<std::string>(j, "merges")));
  }
  auto tokenizer = make_tokenizer(vocab, merges);

  const std::string type = j.value("type", std::string("table"));
  if (type == "table") {
    std::map<TokenSeq, std::vector<double>> table;
    if (j.contains("entries")) {
      for (const json& e : field<json>(j, "entries")) {
        TokenSeq prefix = field<TokenSeq>(e, "prefix");
        if (!table.emplace(std::move(prefix), field<std::vector<double>>(e, "probs")).second) {
          throw ParseError("duplicate table prefix in " + path.string());
        }
      }
    }
    std::vector<double> fallback;
    if (j.contains("default")) {
      fallback = field<std::vector<double>>(j, "default");
    } else {
      fallback.assign(vocab->size(), 1.0 / static_cast<double>(vocab->size()));
    }
    TableModel::Options opts;
    opts.renormalize = j.value("renormalize", true);
    return std::make_shared<const TableModel>(tokenizer, std::move(table),
                                              std::move(fallback), opts);
  }
  if (type == "ngram") {
    const auto corpus = load_corpus(resolve(base, field<std::string>(j, "corpus")));
    return std::make_shared<const NgramModel>(
        NgramModel::train(tokenizer, corpus, field<std::size_t>(j, "order"),
                          j.value("alpha", 0.1)));
  }
  throw ParseError("unknown model type \"" + type + "\"");
}

std::vector<ByteText> load_corpus(const fs::path& path) {
  std::vector<ByteText> docs;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) docs.push_back(line);
  return docs;
}

}  // namespace lvr
