#include "emif/explain.hpp"

#include "emif/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace emif {

using ojson = nlohmann::ordered_json;

namespace {

std::string unit_text(const std::vector<TokenSeq>& units, std::size_t i) {
  return i < units.size() ? join_tokens(units[i]) : std::string();
}

}  // namespace

ExplanationRecord explanation_from_pass(const ForwardPass& pass, const LabeledExample& example) {
  ExplanationRecord r;
  r.id = example.id;
  r.predicted_label = pass.predicted();
  r.p_fake = pass.probs[1];

  const Vector& va = pass.coattention.news_weights;
  for (std::size_t i = 0; i < pass.news.units.size(); ++i)
    r.sentences.push_back({i, unit_text(example.sentences, i), va[static_cast<Eigen::Index>(i)]});
  Eigen::Index top = 0;
  va.maxCoeff(&top);
  r.top_sentence = static_cast<std::size_t>(top);
  const UnitEncoding& top_unit = pass.news.units[r.top_sentence];
  for (std::size_t t = 0; t < top_unit.tokens.size(); ++t) {
    const std::string token = r.top_sentence < example.sentences.size() && t < example.sentences[r.top_sentence].size()
                                  ? example.sentences[r.top_sentence][t]
                                  : std::string(Vocabulary::kPadToken);
    r.top_sentence_words.push_back({token, top_unit.attention.weights[static_cast<Eigen::Index>(t)]});
  }

  if (pass.uses_comments()) {
    const Vector& vc = pass.coattention.comment_weights;
    for (std::size_t j = 0; j < pass.comments.units.size(); ++j)
      r.comments.push_back({j, unit_text(example.comments, j), vc[static_cast<Eigen::Index>(j)]});
    std::stable_sort(r.comments.begin(), r.comments.end(),
                     [](const WeightedText& a, const WeightedText& b) { return a.weight > b.weight; });
  }

  if (pass.uses_relevant()) {
    r.selected = pass.evidence.indices;
    for (std::size_t k = 0; k < pass.relevant.units.size(); ++k) {
      const bool chosen = std::find(r.selected.begin(), r.selected.end(), k) != r.selected.end();
      r.relevant.push_back({k, unit_text(example.relevant, k), pass.similarity[static_cast<Eigen::Index>(k)], chosen});
    }
    std::stable_sort(r.relevant.begin(), r.relevant.end(),
                     [](const RelevantEvidence& a, const RelevantEvidence& b) { return a.similarity < b.similarity; });
  }
  return r;
}

ExplanationRecord extract_explanation(const ModelParams& params, const LabeledExample& example,
                                      const Vocabulary& vocab, Variant variant) {
  const IndexedExample indexed = index_example(example, vocab);
  return explanation_from_pass(forward(params, indexed, variant, 0.0), example);
}

double round_significant(double value, int digits) {
  if (value == 0.0 || !std::isfinite(value)) return value;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

ExplanationRecord rounded(const ExplanationRecord& record) {
  ExplanationRecord r = record;
  r.p_fake = round_significant(r.p_fake);
  for (auto& s : r.sentences) s.weight = round_significant(s.weight);
  for (auto& w : r.top_sentence_words) w.weight = round_significant(w.weight);
  for (auto& c : r.comments) c.weight = round_significant(c.weight);
  for (auto& e : r.relevant) e.similarity = round_significant(e.similarity);
  return r;
}

std::string export_json(const ExplanationRecord& record) {
  const ExplanationRecord r = rounded(record);
  ojson j;
  j["id"] = r.id;
  j["prediction"] = {{"label", r.predicted_label}, {"p_fake", r.p_fake}};
  ojson sentences = ojson::array();
  for (const auto& s : r.sentences) sentences.push_back({{"index", s.index}, {"text", s.text}, {"weight", s.weight}});
  j["sentences"] = std::move(sentences);
  ojson words = ojson::array();
  for (const auto& w : r.top_sentence_words) words.push_back({{"token", w.token}, {"weight", w.weight}});
  j["top_sentence_words"] = std::move(words);
  ojson comments = ojson::array();
  for (const auto& c : r.comments) comments.push_back({{"index", c.index}, {"text", c.text}, {"weight", c.weight}});
  j["comments"] = std::move(comments);
  ojson relevant = ojson::array();
  for (const auto& e : r.relevant)
    relevant.push_back({{"index", e.index}, {"text", e.text}, {"similarity", e.similarity}, {"selected", e.selected}});
  j["relevant"] = std::move(relevant);
  return j.dump(2) + "\n";
}

ExplanationRecord parse_explanation_json(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("explanation is not valid JSON: ") + e.what());
  }
  try {
    ExplanationRecord r;
    r.id = j.at("id").get<std::string>();
    r.predicted_label = j.at("prediction").at("label").get<int>();
    r.p_fake = j.at("prediction").at("p_fake").get<double>();
    for (const auto& s : j.at("sentences"))
      r.sentences.push_back({s.at("index").get<std::size_t>(), s.at("text").get<std::string>(), s.at("weight").get<double>()});
    for (const auto& w : j.at("top_sentence_words"))
      r.top_sentence_words.push_back({w.at("token").get<std::string>(), w.at("weight").get<double>()});
    for (const auto& c : j.at("comments"))
      r.comments.push_back({c.at("index").get<std::size_t>(), c.at("text").get<std::string>(), c.at("weight").get<double>()});
    for (const auto& e : j.at("relevant")) {
      r.relevant.push_back({e.at("index").get<std::size_t>(), e.at("text").get<std::string>(),
                            e.at("similarity").get<double>(), e.at("selected").get<bool>()});
      if (r.relevant.back().selected) r.selected.push_back(r.relevant.back().index);
    }
    // Ties in v_a resolve to the first sentence, as in the forward pass.
    std::size_t top = 0;
    for (std::size_t i = 1; i < r.sentences.size(); ++i)
      if (r.sentences[i].weight > r.sentences[top].weight) top = i;
    r.top_sentence = r.sentences.empty() ? 0 : r.sentences[top].index;
    return r;
  } catch (const ojson::exception& e) {
    throw ValidationError(std::string("malformed explanation: ") + e.what());
  }
}

namespace {

std::string escape_html(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string number(double v, const char* format = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

// Affine weight -> opacity map; the largest weight is fully opaque.
std::string shade(double weight, double max_weight) {
  const double opacity = max_weight > 0.0 ? std::clamp(weight / max_weight, 0.0, 1.0) : 0.0;
  return "background-color:rgba(214,39,40," + number(opacity, "%.4f") + ")";
}

template <class Items, class Get>
double max_of(const Items& items, Get get) {
  double m = 0.0;
  for (const auto& it : items) m = std::max(m, get(it));
  return m;
}

}  // namespace

std::string render_html_string(const ExplanationRecord& r) {
  std::string h;
  h += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  h += "<title>Evidence for " + escape_html(r.id) + "</title>\n</head>\n";
  h += "<body style=\"font-family:sans-serif;max-width:60em;margin:2em auto;line-height:1.6\">\n";
  h += "<h1>" + escape_html(r.id) + "</h1>\n";
  h += "<p class=\"prediction\">Prediction: <strong>" + std::string(r.predicted_label == 1 ? "fake" : "true") +
       "</strong> (p_fake = " + number(r.p_fake) + ")</p>\n";

  const double max_sentence = max_of(r.sentences, [](const WeightedText& s) { return s.weight; });
  h += "<h2>News</h2>\n<p>\n";
  for (const auto& s : r.sentences)
    h += "<span class=\"sentence\" data-weight=\"" + number(s.weight) + "\" style=\"" + shade(s.weight, max_sentence) +
         "\">" + escape_html(s.text) + ".</span>\n";
  h += "</p>\n";

  const double max_word = max_of(r.top_sentence_words, [](const WordWeight& w) { return w.weight; });
  h += "<h2>Most attended sentence</h2>\n<p>\n";
  for (const auto& w : r.top_sentence_words)
    h += "<span class=\"word\" data-weight=\"" + number(w.weight) + "\" style=\"" + shade(w.weight, max_word) + "\">" +
         escape_html(w.token) + "</span>\n";
  h += "</p>\n";

  const double max_comment = max_of(r.comments, [](const WeightedText& c) { return c.weight; });
  h += "<h2>Comments</h2>\n<ol>\n";
  for (const auto& c : r.comments)
    h += "<li class=\"comment\" data-weight=\"" + number(c.weight) + "\" style=\"" + shade(c.weight, max_comment) +
         "\">" + escape_html(c.text) + " <small>(" + number(c.weight, "%.4f") + ")</small></li>\n";
  h += "</ol>\n";

  h += "<h2>Divergent relevant news</h2>\n<ol>\n";
  for (const auto& e : r.relevant) {
    if (!e.selected) continue;
    h += "<li class=\"relevant\" data-divergence=\"" + number(1.0 - e.similarity) + "\">" + escape_html(e.text) +
         " <small>(divergence " + number(1.0 - e.similarity, "%.4f") + ")</small></li>\n";
  }
  h += "</ol>\n</body>\n</html>\n";
  return h;
}

void render_html(const ExplanationRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << render_html_string(record);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace emif
