#include "emif/corpus.hpp"

#include "emif/errors.hpp"
#include "emif/random.hpp"

#include <cmath>
#include <cstdio>

namespace emif {

std::string claim_token(std::size_t pair) { return "claim" + std::to_string(pair); }
std::string refutation_token(std::size_t pair) { return "refute" + std::to_string(pair); }
std::string contradiction_token(std::size_t pair) { return "contra" + std::to_string(pair); }

void SynthConfig::validate() const {
  if (!(noise_fraction >= 0.0 && noise_fraction <= 1.0))
    throw ValidationError("noise fraction must lie in [0, 1]");
  if (vocab_size < 1 || topic_tokens < 1 || claim_pairs < 1 || examples < 1 || comments < 1 ||
      relevant < 1 || sentences < 1)
    throw ValidationError("synthetic config counts must be >= 1");
  if (sentence_length < 2 || comment_length < 2 || relevant_length < 2)
    throw ValidationError("synthetic unit lengths must be >= 2 (topic token plus planted token)");
}

namespace {

std::string noise_token(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "w%03zu", i);
  return buf;
}

std::string topic_token(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "topic%02zu", i);
  return buf;
}

// A unit of `length` noise tokens with the topic token and, optionally, one
// planted token at distinct random positions.
TokenSeq make_unit(Rng& rng, const SynthConfig& cfg, std::size_t length, const std::string& topic,
                   const std::string* planted) {
  TokenSeq unit(length);
  for (auto& t : unit) t = noise_token(uniform_index(rng, cfg.vocab_size));
  const std::size_t topic_pos = uniform_index(rng, length);
  unit[topic_pos] = topic;
  if (planted != nullptr) {
    std::size_t pos = uniform_index(rng, length - 1);
    if (pos >= topic_pos) ++pos;
    unit[pos] = *planted;
  }
  return unit;
}

// Units carrying the planted token; the remaining noise share carries none.
std::vector<bool> carrier_flags(Rng& rng, std::size_t count, double noise_fraction) {
  const auto noisy = static_cast<std::size_t>(std::floor(noise_fraction * static_cast<double>(count) + 0.5));
  std::vector<bool> flags(count, true);
  for (std::size_t i = 0; i < std::min(noisy, count); ++i) flags[i] = false;
  shuffle_range(flags.begin(), flags.end(), rng);
  return flags;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  std::vector<int> labels(cfg.examples);
  for (std::size_t i = 0; i < cfg.examples; ++i) labels[i] = i < cfg.examples / 2 ? 0 : 1;
  shuffle_range(labels.begin(), labels.end(), rng);

  Dataset ds;
  ds.examples.reserve(cfg.examples);
  for (std::size_t i = 0; i < cfg.examples; ++i) {
    LabeledExample ex;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%05zu", i);
    ex.id = id;
    ex.label = labels[i];

    const std::string topic = topic_token(uniform_index(rng, cfg.topic_tokens));
    const std::size_t claim = uniform_index(rng, cfg.claim_pairs);
    bool has_planted = true;
    std::size_t planted_pair = claim;
    if (ex.label == 0) {
      if (cfg.claim_pairs >= 2)
        planted_pair = (claim + 1 + uniform_index(rng, cfg.claim_pairs - 1)) % cfg.claim_pairs;
      else
        has_planted = false;
    }

    const std::string claim_tok = claim_token(claim);
    const std::size_t claim_sentence = uniform_index(rng, cfg.sentences);
    for (std::size_t s = 0; s < cfg.sentences; ++s)
      ex.sentences.push_back(
          make_unit(rng, cfg, cfg.sentence_length, topic, s == claim_sentence ? &claim_tok : nullptr));

    const std::string refute = refutation_token(planted_pair);
    for (bool carrier : carrier_flags(rng, cfg.comments, cfg.noise_fraction))
      ex.comments.push_back(
          make_unit(rng, cfg, cfg.comment_length, topic, carrier && has_planted ? &refute : nullptr));

    const std::string contra = contradiction_token(planted_pair);
    for (bool carrier : carrier_flags(rng, cfg.relevant, cfg.noise_fraction))
      ex.relevant.push_back(
          make_unit(rng, cfg, cfg.relevant_length, topic, carrier && has_planted ? &contra : nullptr));

    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

}  // namespace emif
