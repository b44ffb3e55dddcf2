#pragma once

#include "emif/corpus.hpp"
#include "emif/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace emif {

struct WeightedText {
  std::size_t index = 0;  // position in the original example
  std::string text;
  double weight = 0.0;

  bool operator==(const WeightedText&) const = default;
};

struct WordWeight {
  std::string token;
  double weight = 0.0;

  bool operator==(const WordWeight&) const = default;
};

struct RelevantEvidence {
  std::size_t index = 0;
  std::string text;
  double similarity = 0.0;
  bool selected = false;

  bool operator==(const RelevantEvidence&) const = default;
};

/// The evidence behind one prediction, copied from a single forward pass.
struct ExplanationRecord {
  std::string id;
  int predicted_label = 0;
  double p_fake = 0.0;
  std::vector<WeightedText> sentences;       // article order, weight = v_a
  std::size_t top_sentence = 0;              // argmax v_a
  std::vector<WordWeight> top_sentence_words;  // alpha of the top sentence
  std::vector<WeightedText> comments;        // by v_c, descending
  std::vector<RelevantEvidence> relevant;    // by S, ascending
  std::vector<std::size_t> selected;         // divergence selection order

  bool operator==(const ExplanationRecord&) const = default;
};

ExplanationRecord explanation_from_pass(const ForwardPass& pass, const LabeledExample& example);

ExplanationRecord extract_explanation(const ModelParams& params, const LabeledExample& example,
                                      const Vocabulary& vocab, Variant variant);

/// Rounds to `digits` significant digits, the precision used by export_json.
double round_significant(double value, int digits = 6);
ExplanationRecord rounded(const ExplanationRecord& record);

/// Deterministic key order, numbers at 6 significant digits.
std::string export_json(const ExplanationRecord& record);
ExplanationRecord parse_explanation_json(std::string_view text);

/// Self-contained static page; shading opacity is weight / max weight.
std::string render_html_string(const ExplanationRecord& record);
void render_html(const ExplanationRecord& record, const std::filesystem::path& path);

}  // namespace emif
