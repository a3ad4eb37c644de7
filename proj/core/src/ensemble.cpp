#include "lvr/ensemble.hpp"

#include <set>

namespace lvr {

namespace {

void check_same_size(std::span<const std::vector<double>> dists) {
  if (dists.empty()) throw Error("nothing to combine");
  for (const auto& d : dists) {
    if (d.size() != dists.front().size()) {
      throw Error("combined distributions have different sizes");
    }
  }
}

std::vector<TokenId> support_of(const std::vector<double>& d) {
  std::vector<TokenId> s;
  for (TokenId i = 0; i < d.size(); ++i) {
    if (d[i] > 0.0) s.push_back(i);
  }
  return s;
}

std::vector<std::vector<double>> probs_of(std::span<const SubTokenDistribution> dists) {
  std::vector<std::vector<double>> out;
  for (const auto& d : dists) out.push_back(d.probs);
  return out;
}

SubTokenDistribution as_distribution(std::vector<double> probs) {
  SubTokenDistribution d;
  d.unnormalized = probs;
  d.normalizer = 1.0;
  d.probs = std::move(probs);
  return d;
}

}  // namespace

std::vector<double> poe_combine(std::span<const std::vector<double>> dists) {
  check_same_size(dists);
  // A lone member is passed through untouched so that a one-member ensemble
  // samples exactly like plain reduction.
  if (dists.size() == 1) return dists.front();
  std::vector<double> out(dists.front().size(), 1.0);
  for (const auto& d : dists) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= d[i];
  }
  double total = 0.0;
  for (double p : out) total += p;
  if (!(total > 0.0)) {
    std::vector<std::vector<TokenId>> supports;
    std::string what = "product of experts is zero everywhere; member supports:";
    for (const auto& d : dists) {
      supports.push_back(support_of(d));
      what += " {";
      for (std::size_t i = 0; i < supports.back().size(); ++i) {
        what += (i ? "," : "") + std::to_string(supports.back()[i]);
      }
      what += "}";
    }
    throw ZeroProductError(what, std::move(supports));
  }
  for (double& p : out) p /= total;
  return out;
}

std::vector<double> moe_combine(std::span<const std::vector<double>> dists) {
  check_same_size(dists);
  std::vector<double> out(dists.front().size(), 0.0);
  for (const auto& d : dists) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += d[i];
  }
  const double n = static_cast<double>(dists.size());
  for (double& p : out) p /= n;
  return out;
}

std::vector<double> combine(CombineMode mode, std::span<const std::vector<double>> dists) {
  return mode == CombineMode::poe ? poe_combine(dists) : moe_combine(dists);
}

SubTokenDistribution poe_combine(std::span<const SubTokenDistribution> dists) {
  const auto probs = probs_of(dists);
  return as_distribution(poe_combine(std::span<const std::vector<double>>(probs)));
}

SubTokenDistribution moe_combine(std::span<const SubTokenDistribution> dists) {
  const auto probs = probs_of(dists);
  return as_distribution(moe_combine(std::span<const std::vector<double>>(probs)));
}

EnsembleSession::EnsembleSession(const EnsembleSpec& spec) : mode_(spec.mode) {
  if (spec.members.empty()) throw Error("an ensemble needs at least one member");
  for (std::size_t i = 0; i < spec.members.size(); ++i) {
    const EnsembleMember& m = spec.members[i];
    try {
      sessions_.emplace_back(m.model, m.nested, m.topk);
    } catch (const Error& e) {
      throw EnsembleMemberError(i, e.what());
    }
    const Vocabulary& sub = sessions_.back().nested().inner().vocab();
    if (i > 0 && !sub.same_as(sub_vocab())) {
      throw Error("ensemble members reduce onto different sub-vocabularies");
    }
  }
}

SubTokenDistribution EnsembleSession::next_dist() {
  member_dists_.clear();
  for (std::size_t i = 0; i < sessions_.size(); ++i) {
    try {
      member_dists_.push_back(sessions_[i].next_subtoken_dist_efficient());
    } catch (const Error& e) {
      throw EnsembleMemberError(i, e.what());
    }
  }
  SubTokenDistribution combined = mode_ == CombineMode::poe
                                      ? poe_combine(member_dists_)
                                      : moe_combine(member_dists_);
  for (const auto& d : member_dists_) combined.dropped_mass += d.dropped_mass;
  return combined;
}

void EnsembleSession::step(TokenId chosen) {
  for (std::size_t i = 0; i < sessions_.size(); ++i) {
    try {
      sessions_[i].step(chosen);
    } catch (const Error& e) {
      throw EnsembleMemberError(i, e.what());
    }
  }
}

TokenSeq ensemble_generate(const EnsembleSpec& spec, const Decoding& decoding,
                           std::size_t max_subtokens, const EnsembleObserver& observer) {
  EnsembleSession ens(spec);
  TokenPicker picker(decoding);
  TokenSeq out;
  for (std::size_t i = 0; i < max_subtokens && !ens.terminated(); ++i) {
    const SubTokenDistribution dist = ens.next_dist();
    const TokenId chosen = picker.pick(dist.probs);
    if (observer) observer(EnsembleStep{i, chosen, &dist, ens.member_dists()});
    ens.step(chosen);
    out.push_back(chosen);
  }
  return out;
}

ByteRun generate_bytes(const EnsembleSpec& spec, const Decoding& decoding,
                       std::size_t min_bytes) {
  const EnsembleSession fresh(spec);
  TokenPicker picker(decoding);
  ByteRun run;
  while (run.text.size() < min_bytes) {
    EnsembleSession ens = fresh;
    ++run.documents;
    while (run.text.size() < min_bytes && !ens.terminated()) {
      const TokenId chosen = picker.pick(ens.next_dist().probs);
      ens.step(chosen);
      run.text += ens.sub_vocab().surface(chosen);
      ++run.steps;
    }
  }
  return run;
}

Vocabulary union_vocabulary(std::span<const Vocabulary* const> vocabs) {
  if (vocabs.empty()) throw Error("union of no vocabularies");
  std::vector<ByteText> surfaces(vocabs[0]->surfaces().begin(),
                                 vocabs[0]->surfaces().end());
  std::set<ByteText> seen(surfaces.begin(), surfaces.end());
  for (const Vocabulary* v : vocabs.subspan(1)) {
    if (!(v->alphabet() == vocabs[0]->alphabet())) {
      throw Error("vocabularies are over different alphabets");
    }
    for (const ByteText& s : v->surfaces()) {
      if (seen.insert(s).second) surfaces.push_back(s);
    }
  }
  return Vocabulary(vocabs[0]->alphabet(), std::move(surfaces));
}

std::vector<double> union_baseline_dist(std::span<const LanguageModel* const> models,
                                        const Vocabulary& union_vocab,
                                        std::span<const TokenId> prefix,
                                        CombineMode mode) {
  const ByteText text = union_vocab.decode(prefix);
  std::vector<std::vector<double>> extended;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const LanguageModel& m = *models[i];
    const NextTokenDistribution cond = m.next_token_dist(m.tokenizer().encode(text));
    std::vector<double> d(union_vocab.size(), 0.0);
    for (TokenId x = 0; x < m.vocab().size(); ++x) {
      auto u = union_vocab.find(m.vocab().surface(x));
      if (!u) throw EnsembleMemberError(i, "token outside the union vocabulary");
      d[*u] = cond[x];
    }
    extended.push_back(std::move(d));
  }
  return combine(mode, extended);
}

}  // namespace lvr
