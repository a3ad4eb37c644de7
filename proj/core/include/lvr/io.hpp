#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lvr/model.hpp"
#include "lvr/tokenizer.hpp"

namespace lvr {

using SurfacePair = std::pair<ByteText, ByteText>;

// Vocabulary files are a JSON array of escaped surfaces; the array index is
// the token id. The alphabet is the set of single-symbol surfaces; `eos`
// reserves one of them as the terminator.
std::shared_ptr<const Vocabulary> parse_vocabulary(
    const std::string& json_text, std::optional<unsigned char> eos = std::nullopt);
std::shared_ptr<const Vocabulary> load_vocabulary(
    const std::filesystem::path& path, std::optional<unsigned char> eos = std::nullopt);
std::string vocabulary_json(const Vocabulary& vocab);
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);

// Merges files hold one "LEFT<TAB>RIGHT" pair of escaped surfaces per line;
// the line order is the merge rank. Blank lines are ignored.
std::vector<SurfacePair> parse_merges(const std::string& text);
std::vector<SurfacePair> load_merges(const std::filesystem::path& path);
std::string merges_text(const Vocabulary& vocab, std::span<const MergePair> merges);
void save_merges(const std::filesystem::path& path, const Vocabulary& vocab,
                 std::span<const MergePair> merges);

// BPE when merges are given, greedy longest-match otherwise.
std::shared_ptr<const Tokenizer> make_tokenizer(
    std::shared_ptr<const Vocabulary> vocab,
    const std::optional<std::vector<SurfacePair>>& merges);

// Parses a single-symbol EOS spelling ("$", "\x00").
unsigned char parse_eos_symbol(const std::string& escaped);

// Model files are JSON objects. Relative paths inside are resolved against
// the model file's directory.
//
//   {"type": "table", "vocab": <path or array>, "merges": <path>?,
//    "eos": "<symbol>"?, "renormalize": bool?,
//    "entries": [{"prefix": [ids], "probs": [...]}], "default": [...]}
//
//   {"type": "ngram", "vocab": ..., "merges": ..., "eos": "<symbol>",
//    "corpus": <path>, "order": n, "alpha": a}
std::shared_ptr<const LanguageModel> load_model(const std::filesystem::path& path);

// One document per line; a trailing newline does not add an empty document.
std::vector<ByteText> load_corpus(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace lvr
