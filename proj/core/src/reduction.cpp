#include "lvr/reduction.hpp"

#include <algorithm>
#include <numeric>

#include "lvr/error.hpp"

namespace lvr {

namespace {

TokenSeq appended(std::span<const TokenId> seq, TokenId next) {
  TokenSeq out(seq.begin(), seq.end());
  out.push_back(next);
  return out;
}

TokenSeq appended(std::span<const TokenId> seq, std::span<const TokenId> tail) {
  TokenSeq out(seq.begin(), seq.end());
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

// Ids of the k largest values (ties to the lower id), returned in id order.
std::vector<TokenId> top_k_ids(const std::vector<double>& values, std::size_t k) {
  std::vector<TokenId> ids(values.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  if (k >= ids.size()) return ids;
  auto by_value = [&](TokenId a, TokenId b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  };
  std::nth_element(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k),
                   ids.end(), by_value);
  ids.resize(k);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

bool RelativeCover::contains(std::span<const TokenId> seq) const {
  return std::any_of(entries.begin(), entries.end(), [&](const CoverEntry& e) {
    return std::equal(e.seq.begin(), e.seq.end(), seq.begin(), seq.end());
  });
}

double RelativeCover::mass() const {
  double m = 0.0;
  for (const CoverEntry& e : entries) m += e.marginal;
  return m;
}

ReductionSession::ReductionSession(std::shared_ptr<const LanguageModel> model,
                                   std::shared_ptr<const NestedTokenizer> nested,
                                   std::size_t topk)
    : model_(std::move(model)), nested_(std::move(nested)), topk_(topk) {
  if (!model_ || !nested_) throw Error("reduction session needs a model and a nested tokenizer");
  if (topk_ == 0) throw Error("top-K must be at least 1");
  if (!nested_->outer().vocab().same_as(model_->vocab())) {
    throw Error("the nested tokenizer's outer vocabulary is not the model's vocabulary");
  }
  cover_cache_.emplace(TokenSeq{}, RelativeCover{{}, {CoverEntry{{}, {}, 1.0}}});
  prob_cache_.emplace(TokenSeq{}, 1.0);
}

bool ReductionSession::exact() const {
  return topk_ >= model_->vocab().size();
}

bool ReductionSession::terminated() const {
  const auto eos = nested_->inner().vocab().eos();
  return eos && !prefix_.empty() && prefix_.back() == *eos;
}

const RelativeCover& ReductionSession::current_cover() const {
  return cover_cache_.at(prefix_);
}

std::optional<double> ReductionSession::cached_marginal(const TokenSeq& seq) const {
  auto it = prob_cache_.find(seq);
  if (it == prob_cache_.end()) return std::nullopt;
  return it->second;
}

const CoverEntry* ReductionSession::find_equal_entry(const RelativeCover& cover) const {
  for (const CoverEntry& e : cover.entries) {
    if (e.nested.size() == prefix_.size()) return &e;
  }
  return nullptr;
}

SubTokenDistribution ReductionSession::next_subtoken_dist_naive() {
  return expand(ReductionAlgorithm::naive);
}

SubTokenDistribution ReductionSession::next_subtoken_dist_efficient() {
  return expand(ReductionAlgorithm::efficient);
}

SubTokenDistribution ReductionSession::expand(ReductionAlgorithm algorithm) {
  if (terminated()) throw Error("the sampled prefix already ends with EOS");
  const RelativeCover& cover = current_cover();
  const Tokenizer& outer = nested_->outer();
  const std::size_t n_sub = nested_->inner().vocab().size();
  const std::size_t n_outer = outer.vocab().size();
  const std::size_t k = prefix_.size();

  // Canonical retokenization of the prefix text over the outer vocabulary.
  // Single-token extensions apply only when it nests back to the prefix
  // exactly; otherwise no valid sequence has that nested encoding and every
  // cover entry comes from the previous cover.
  const TokenSeq canonical = outer.encode(text_);
  bool extend = false;
  double base = 0.0;
  if (algorithm == ReductionAlgorithm::naive) {
    auto it = prob_cache_.find(canonical);
    if (it != prob_cache_.end() && nested_->encode(canonical) == prefix_) {
      extend = true;
      base = it->second;
    }
  } else if (const CoverEntry* eq = find_equal_entry(cover)) {
    if (eq->seq != canonical) {
      throw Error(
          "cover entry whose nested encoding equals the prefix is not the "
          "canonical retokenization of the prefix text");
    }
    extend = true;
    base = eq->marginal;
  }

  std::vector<double> joint;
  if (extend) {
    const NextTokenDistribution cond = model_->next_token_dist(canonical);
    joint.resize(n_outer);
    for (TokenId x = 0; x < n_outer; ++x) joint[x] = base * cond[x];
  }
  auto extension = [&](TokenId x) {
    return CoverEntry{appended(canonical, x), appended(prefix_, nested_->nested_of(x)),
                      joint[x]};
  };

  std::vector<std::vector<CoverEntry>> buckets(n_sub);
  SubTokenDistribution dist;

  if (algorithm == ReductionAlgorithm::naive) {
    std::vector<bool> valid(n_outer, false);
    if (extend) {
      for (TokenId x = 0; x < n_outer; ++x) {
        valid[x] = outer.is_valid_extension(canonical, text_, x);
      }
    }
    for (TokenId y = 0; y < n_sub; ++y) {
      const TokenSeq target = appended(prefix_, y);
      for (const CoverEntry& e : cover.entries) {
        if (starts_with(e.nested, target)) buckets[y].push_back(e);
      }
      if (!extend) continue;
      for (TokenId x = 0; x < n_outer; ++x) {
        if (valid[x] && nested_->first_subtoken(x) == y) {
          buckets[y].push_back(extension(x));
        }
      }
    }
  } else {
    for (const CoverEntry& e : cover.entries) {
      if (e.nested.size() == k) continue;
      buckets[e.nested[k]].push_back(e);
    }
    if (extend) {
      const std::vector<TokenId> kept = top_k_ids(joint, topk_);
      if (kept.size() < n_outer) {
        std::vector<bool> is_kept(n_outer, false);
        for (TokenId x : kept) is_kept[x] = true;
        for (TokenId x = 0; x < n_outer; ++x) {
          if (!is_kept[x]) dist.dropped_mass += joint[x];
        }
      }
      for (TokenId x : kept) {
        if (!outer.is_valid_extension(canonical, text_, x)) continue;
        buckets[nested_->first_subtoken(x)].push_back(extension(x));
      }
    }
  }

  dist.unnormalized.assign(n_sub, 0.0);
  dist.cover_sizes.assign(n_sub, 0);
  for (TokenId y = 0; y < n_sub; ++y) {
    for (const CoverEntry& e : buckets[y]) dist.unnormalized[y] += e.marginal;
    dist.cover_sizes[y] = buckets[y].size();
    dist.normalizer += dist.unnormalized[y];
  }
  if (!(dist.normalizer > 0.0)) {
    throw ZeroMassError("every sub-token continuation of the prefix has zero mass");
  }
  dist.probs.resize(n_sub);
  for (TokenId y = 0; y < n_sub; ++y) {
    dist.probs[y] = dist.unnormalized[y] / dist.normalizer;
  }

  // Keep the prefix cover, replace any previously expanded children.
  for (auto it = cover_cache_.begin(); it != cover_cache_.end();) {
    it = it->first == prefix_ ? std::next(it) : cover_cache_.erase(it);
  }
  for (TokenId y = 0; y < n_sub; ++y) {
    for (const CoverEntry& e : buckets[y]) prob_cache_.emplace(e.seq, e.marginal);
    TokenSeq key = appended(prefix_, y);
    cover_cache_.emplace(key, RelativeCover{key, std::move(buckets[y])});
  }
  last_ = dist;
  return dist;
}

void ReductionSession::step(TokenId chosen) {
  const Vocabulary& sub = nested_->inner().vocab();
  if (!sub.contains(chosen)) {
    throw Error("unknown sub-token id " + std::to_string(chosen));
  }
  if (!last_) next_subtoken_dist_efficient();
  if (!(last_->unnormalized[chosen] > 0.0)) {
    throw ZeroMassError("sub-token \"" + escape_surface(sub.surface(chosen)) +
                        "\" has zero probability after the current prefix");
  }
  TokenSeq key = appended(prefix_, chosen);
  auto node = cover_cache_.extract(key);
  cover_cache_.clear();
  cover_cache_.insert(std::move(node));
  prefix_ = std::move(key);
  text_ += sub.surface(chosen);
  last_.reset();

  prob_cache_.clear();
  for (const CoverEntry& e : current_cover().entries) {
    prob_cache_.emplace(e.seq, e.marginal);
  }
}

void ReductionSession::set_topk(std::size_t topk) {
  if (topk == 0) throw Error("top-K must be at least 1");
  topk_ = topk;
  auto node = cover_cache_.extract(prefix_);
  cover_cache_.clear();
  cover_cache_.insert(std::move(node));
  last_.reset();
}

const RelativeCover& ReductionSession::relative_cover(std::span<const TokenId> y_prefix) {
  const TokenSeq key(y_prefix.begin(), y_prefix.end());
  if (auto it = cover_cache_.find(key); it != cover_cache_.end()) return it->second;
  if (key.size() == prefix_.size() + 1 && starts_with(key, prefix_) &&
      nested_->inner().vocab().contains(key.back())) {
    next_subtoken_dist_efficient();
    return cover_cache_.at(key);
  }
  throw Error("relative cover requested for a prefix whose ancestor covers are not cached");
}

SubTokenDistribution naive_restriction_dist(const LanguageModel& model,
                                            const Vocabulary& sub_vocab,
                                            std::span<const TokenId> prefix) {
  const ByteText text = sub_vocab.decode(prefix);
  const TokenSeq retokenized = model.tokenizer().encode(text);
  const NextTokenDistribution cond = model.next_token_dist(retokenized);
  const Vocabulary& v = model.vocab();

  SubTokenDistribution dist;
  dist.unnormalized.resize(sub_vocab.size());
  dist.cover_sizes.assign(sub_vocab.size(), 0);
  for (TokenId y = 0; y < sub_vocab.size(); ++y) {
    auto x = v.find(sub_vocab.surface(y));
    if (!x) {
      throw Error("sub-vocabulary token \"" + escape_surface(sub_vocab.surface(y)) +
                  "\" is not in the model's vocabulary");
    }
    dist.unnormalized[y] = cond[*x];
    dist.normalizer += cond[*x];
  }
  if (!(dist.normalizer > 0.0)) {
    throw ZeroMassError("restriction to the sub-vocabulary removes all mass");
  }
  dist.dropped_mass = std::max(0.0, cond.sum() - dist.normalizer);
  dist.probs.resize(sub_vocab.size());
  for (TokenId y = 0; y < sub_vocab.size(); ++y) {
    dist.probs[y] = dist.unnormalized[y] / dist.normalizer;
  }
  return dist;
}

TokenPicker::TokenPicker(const Decoding& decoding)
    : decoding_(decoding), rng_(decoding.seed) {}

TokenId TokenPicker::pick(std::span<const double> probs) {
  if (probs.empty()) throw Error("cannot pick from an empty distribution");
  if (decoding_.kind == Decoding::Kind::greedy) {
    TokenId best = 0;
    for (TokenId y = 1; y < probs.size(); ++y) {
      if (probs[y] > probs[best]) best = y;
    }
    if (!(probs[best] > 0.0)) throw ZeroMassError("distribution has no mass");
    return best;
  }
  // 53 random bits -> uniform double in [0, 1).
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  double total = 0.0;
  for (double p : probs) total += p;
  if (!(total > 0.0)) throw ZeroMassError("distribution has no mass");
  const double target = u * total;
  double cumulative = 0.0;
  std::optional<TokenId> last_positive;
  for (TokenId y = 0; y < probs.size(); ++y) {
    if (!(probs[y] > 0.0)) continue;
    cumulative += probs[y];
    last_positive = y;
    if (target < cumulative) return y;
  }
  return *last_positive;
}

TokenSeq generate(ReductionSession& session, const Decoding& decoding,
                  std::size_t max_subtokens, const StepObserver& observer) {
  TokenPicker picker(decoding);
  TokenSeq out;
  for (std::size_t i = 0; i < max_subtokens && !session.terminated(); ++i) {
    const SubTokenDistribution dist = session.next_subtoken_dist_efficient();
    const TokenId chosen = picker.pick(dist.probs);
    if (observer) observer(GenerationStep{i, chosen, &dist});
    session.step(chosen);
    out.push_back(chosen);
  }
  return out;
}

}  // namespace lvr
