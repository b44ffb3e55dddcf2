#include "emif/errors.hpp"
#include "emif/explain.hpp"
#include "emif/training.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

namespace emif {
namespace {

struct Fixture {
  Dataset dataset;
  Vocabulary vocab;
  ModelParams params;
};

Fixture make_fixture() {
  SynthConfig s;
  s.examples = 12;
  Fixture f;
  f.dataset = generate_synthetic(s);
  f.vocab = build_vocabulary(f.dataset);
  ModelDims d;
  d.vocab = f.vocab.size();
  d.dim = 4;
  d.coattention = 4;
  d.divergence = 4;
  d.top_k = 3;
  f.params = ModelParams::initialize(d, 3);
  return f;
}

bool same_6_digits(double a, double b) { return round_significant(a) == round_significant(b); }

TEST(RoundSignificant, SixDigits) {
  EXPECT_EQ(round_significant(1.0 / 3.0), 0.333333);
  EXPECT_EQ(round_significant(123456789.0), 123457000.0);
  EXPECT_EQ(round_significant(0.0), 0.0);
}

TEST(ExportJson, ThirdSerialisesWithSixDigits) {
  ExplanationRecord r;
  r.id = "x";
  r.sentences = {{0, "a b", 1.0 / 3.0}, {1, "c", 2.0 / 3.0}};
  const std::string json = export_json(r);
  EXPECT_NE(json.find("0.333333"), std::string::npos);
  EXPECT_EQ(json.find("0.3333333"), std::string::npos);
}

TEST(ExportJson, DeterministicAndRoundTrips) {
  const Fixture f = make_fixture();
  for (const auto& ex : f.dataset.examples) {
    const ExplanationRecord r = extract_explanation(f.params, ex, f.vocab, Variant::Full);
    const std::string a = export_json(r);
    EXPECT_EQ(a, export_json(r));
    EXPECT_EQ(parse_explanation_json(a), rounded(r));
  }
  EXPECT_THROW(parse_explanation_json("{"), ParseError);
}

TEST(Explanation, WeightsMatchForwardPass) {
  const Fixture f = make_fixture();
  for (const auto& ex : f.dataset.examples) {
    const ForwardPass pass = forward(f.params, index_example(ex, f.vocab), Variant::Full, 1.0);
    const ExplanationRecord r = parse_explanation_json(export_json(extract_explanation(f.params, ex, f.vocab, Variant::Full)));
    EXPECT_TRUE(same_6_digits(r.p_fake, pass.probs[1]));
    for (const auto& s : r.sentences) EXPECT_TRUE(same_6_digits(s.weight, pass.coattention.news_weights[s.index]));
    for (const auto& c : r.comments) EXPECT_TRUE(same_6_digits(c.weight, pass.coattention.comment_weights[c.index]));
    for (const auto& e : r.relevant) EXPECT_TRUE(same_6_digits(e.similarity, pass.similarity[e.index]));
    const auto& alpha = pass.news.units[r.top_sentence].attention.weights;
    for (std::size_t i = 0; i < r.top_sentence_words.size(); ++i)
      EXPECT_TRUE(same_6_digits(r.top_sentence_words[i].weight, alpha[static_cast<Eigen::Index>(i)]));
    EXPECT_EQ(r.selected, pass.evidence.indices);
  }
}

TEST(Explanation, OrderingAndNormalisation) {
  const Fixture f = make_fixture();
  const ExplanationRecord r = extract_explanation(f.params, f.dataset.examples[0], f.vocab, Variant::Full);
  double total = 0.0;
  for (std::size_t i = 0; i < r.sentences.size(); ++i) {
    EXPECT_EQ(r.sentences[i].index, i);
    total += r.sentences[i].weight;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_TRUE(std::is_sorted(r.comments.begin(), r.comments.end(),
                             [](const auto& a, const auto& b) { return a.weight > b.weight; }));
  EXPECT_TRUE(std::is_sorted(r.relevant.begin(), r.relevant.end(),
                             [](const auto& a, const auto& b) { return a.similarity < b.similarity; }));
  EXPECT_EQ(r.selected.size(), 3u);
  EXPECT_EQ(r.sentences[r.top_sentence].text, join_tokens(f.dataset.examples[0].sentences[r.top_sentence]));
}

TEST(Explanation, UniformWeightsWithoutCoAttention) {
  const Fixture f = make_fixture();
  const ExplanationRecord r = extract_explanation(f.params, f.dataset.examples[1], f.vocab, Variant::NoCoAttention);
  for (const auto& s : r.sentences) EXPECT_NEAR(s.weight, 1.0 / double(r.sentences.size()), 1e-15);
}

TEST(RenderHtml, ShadesByRelativeWeightAndEscapes) {
  ExplanationRecord r;
  r.id = "a<b>";
  r.sentences = {{0, "first & only", 0.25}, {1, "second", 0.75}};
  r.top_sentence = 1;
  r.top_sentence_words = {{"second", 1.0}};
  r.comments = {{0, "<script>", 1.0}};
  r.relevant = {{0, "rel", 0.2, true}, {1, "other", 0.8, false}};
  r.selected = {0};
  const std::string html = render_html_string(r);
  EXPECT_EQ(html.find("<script>"), std::string::npos);
  EXPECT_NE(html.find("a&lt;b&gt;"), std::string::npos);
  EXPECT_NE(html.find("first &amp; only"), std::string::npos);
  EXPECT_NE(html.find("rgba(214,39,40,0.3333)"), std::string::npos);
  EXPECT_NE(html.find("rgba(214,39,40,1.0000)"), std::string::npos);
  const std::regex sentence("class=\"sentence\"");
  EXPECT_EQ(std::distance(std::sregex_iterator(html.begin(), html.end(), sentence), std::sregex_iterator()), 2);
  EXPECT_NE(html.find("class=\"relevant\""), std::string::npos);
  EXPECT_EQ(html.find(">other"), std::string::npos);
}

TEST(RenderHtml, WritesFile) {
  const Fixture f = make_fixture();
  const ExplanationRecord r = extract_explanation(f.params, f.dataset.examples[0], f.vocab, Variant::Full);
  const auto path = std::filesystem::temp_directory_path() / "emif_explain.html";
  render_html(r, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), render_html_string(r));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace emif
