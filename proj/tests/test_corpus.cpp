#include "emif/corpus.hpp"
#include "emif/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>

namespace emif {
namespace {

Dataset parse(const std::string& text, const TruncationLimits& limits = {}) {
  std::istringstream in(text);
  return parse_dataset(in, limits, "test");
}

TEST(Tokenize, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(tokenize("Hello, World!"), TokenSeq({"hello", "world"}));
  EXPECT_EQ(tokenize("  \"quoted\"  (x) "), TokenSeq({"quoted", "x"}));
  EXPECT_EQ(tokenize("don't"), TokenSeq({"don't"}));
}

TEST(Tokenize, SplitsOnUnicodeWhitespace) {
  EXPECT_EQ(tokenize("a　b c\td"), TokenSeq({"a", "b", "c", "d"}));
}

TEST(Tokenize, DropsPunctuationOnlyTokens) { EXPECT_EQ(tokenize("-- ... !"), TokenSeq{}); }

TEST(Tokenize, LowercasesAsciiOnly) { EXPECT_EQ(tokenize("CAFÉ"), TokenSeq({"cafÉ"})); }

TEST(SegmentSentences, SplitsOnTerminators) {
  const auto s = segment_sentences("One fish. Two fish! Red fish? Blue");
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(tokenize(s[3]), TokenSeq({"blue"}));
}

TEST(ParseDataset, AcceptsBothTextForms) {
  const Dataset ds = parse(
      R"({"id":"a","text":"First one. Second one.","label":1,"comments":["c one"],"relevant":["r one"]})"
      "\n"
      R"({"id":"b","text":["Only sentence"],"label":0})"
      "\n");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.examples[0].sentences.size(), 2u);
  EXPECT_EQ(ds.examples[0].comments, std::vector<TokenSeq>({{"c", "one"}}));
  EXPECT_TRUE(ds.examples[1].comments.empty());
  EXPECT_TRUE(ds.examples[1].relevant.empty());
  EXPECT_EQ(ds.examples[1].label, 0);
}

TEST(ParseDataset, SkipsBlankLines) {
  EXPECT_EQ(parse("\n" R"({"id":"a","text":"x","label":0})" "\n\n").size(), 1u);
}

TEST(ParseDataset, MissingLabelIsValidationError) {
  try {
    parse(R"({"id":"a","text":"x"})" "\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("label"), std::string::npos);
  }
}

TEST(ParseDataset, MalformedJsonNamesTheLine) {
  try {
    parse(R"({"id":"a","text":"x","label":0})" "\n{oops\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(ParseDataset, RejectsBadLabelAndDuplicateIds) {
  EXPECT_THROW(parse(R"({"id":"a","text":"x","label":2})"), ValidationError);
  EXPECT_THROW(parse(R"({"id":"a","text":"x","label":0})" "\n" R"({"id":"a","text":"y","label":1})"),
               ValidationError);
  EXPECT_THROW(parse(R"({"text":"x","label":0})"), ValidationError);
}

TEST(ParseDataset, AppliesTruncationLimits) {
  TruncationLimits limits;
  limits.max_sentences = 1;
  limits.sentence_tokens = 2;
  limits.max_comments = 1;
  const Dataset ds = parse(R"({"id":"a","text":"a b c. d e","label":0,"comments":["x","y"]})", limits);
  EXPECT_EQ(ds.examples[0].sentences, std::vector<TokenSeq>({{"a", "b"}}));
  EXPECT_EQ(ds.examples[0].comments.size(), 1u);
}

TEST(LoadDataset, MissingFileIsIoError) {
  EXPECT_THROW(load_dataset("/nonexistent/path.jsonl"), IoError);
}

TEST(RoundTrip, SerializeThenParseIsEqual) {
  SynthConfig cfg;
  cfg.examples = 40;
  const Dataset ds = generate_synthetic(cfg);
  EXPECT_EQ(parse(to_jsonl(ds)), ds);
  const auto path = std::filesystem::temp_directory_path() / "emif_roundtrip.jsonl";
  save_dataset(ds, path);
  EXPECT_EQ(load_dataset(path), ds);
  std::filesystem::remove(path);
}

TEST(Stats, MatchDirectCounts) {
  const Dataset ds = parse(
      R"({"id":"a","text":"x","label":1,"comments":["c","d","e"],"relevant":["r"]})"
      "\n"
      R"({"id":"b","text":"y","label":0,"comments":["c"],"relevant":["r","s"]})");
  const DatasetStats s = dataset_stats(ds);
  EXPECT_EQ(s.news, 2u);
  EXPECT_EQ(s.fake_news, 1u);
  EXPECT_EQ(s.true_news, 1u);
  EXPECT_EQ(s.comments, 4u);
  EXPECT_EQ(s.total_data(), 6u);
  EXPECT_DOUBLE_EQ(s.avg_relevant_per_news(), 1.5);
  const std::string table = format_stats(s);
  EXPECT_NE(table.find("Avg.Relevant News per News"), std::string::npos);
  EXPECT_NE(table.find("1.50"), std::string::npos);
}

Dataset balanced(std::size_t n) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i)
    ds.examples.push_back({"e" + std::to_string(i), {{"w"}}, {}, {}, static_cast<int>(i % 2)});
  return ds;
}

TEST(Split, StratifiedAndSized) {
  const auto splits = split_dataset(balanced(100), {0.8, 0.1, 0.1}, 3);
  EXPECT_EQ(splits[0].size(), 80u);
  EXPECT_EQ(splits[1].size(), 10u);
  EXPECT_EQ(splits[2].size(), 10u);
  for (const auto& s : splits) {
    const auto fake = std::count_if(s.examples.begin(), s.examples.end(), [](const auto& e) { return e.label == 1; });
    EXPECT_LE(std::abs(static_cast<long>(fake) - static_cast<long>(s.size()) / 2), 1);
  }
  EXPECT_EQ(splits[0].split_tag, SplitTag::Train);
  EXPECT_EQ(splits[2].split_tag, SplitTag::Test);
}

TEST(Split, PartitionsEveryExampleOnce) {
  const auto splits = split_dataset(balanced(37), {0.7, 0.2, 0.1}, 11);
  std::map<std::string, int> seen;
  for (const auto& s : splits)
    for (const auto& e : s.examples) ++seen[e.id];
  EXPECT_EQ(seen.size(), 37u);
  for (const auto& [id, n] : seen) EXPECT_EQ(n, 1) << id;
}

TEST(Split, DeterministicPerSeed) {
  const Dataset ds = balanced(50);
  EXPECT_EQ(split_dataset(ds, {0.8, 0.1, 0.1}, 5), split_dataset(ds, {0.8, 0.1, 0.1}, 5));
  EXPECT_NE(split_dataset(ds, {0.8, 0.1, 0.1}, 5)[0], split_dataset(ds, {0.8, 0.1, 0.1}, 6)[0]);
}

TEST(Split, RejectsBadRatios) {
  EXPECT_THROW(split_dataset(balanced(10), {0.5, 0.5, 0.5}, 1), ValidationError);
  EXPECT_THROW(split_dataset(balanced(10), {1.0, 0.0, 0.0}, 1), ValidationError);
}

TEST(Vocabulary, FrequencyThenLexicographicOrder) {
  Dataset ds;
  ds.examples.push_back({"a", {{"b", "a", "c", "c"}}, {{"b"}}, {}, 0});
  const Vocabulary v = build_vocabulary(ds);
  EXPECT_EQ(v.tokens(), std::vector<std::string>({"<pad>", "<unk>", "b", "c", "a"}));
  EXPECT_EQ(v.index("zzz"), Vocabulary::kUnk);
  EXPECT_EQ(v.index("c"), 3);
}

TEST(Vocabulary, MinFreqAndMaxSize) {
  Dataset ds;
  ds.examples.push_back({"a", {{"x", "x", "y", "y", "z"}}, {}, {}, 0});
  EXPECT_EQ(build_vocabulary(ds, 2).size(), 4u);
  EXPECT_EQ(build_vocabulary(ds, 1, 3).tokens(), std::vector<std::string>({"<pad>", "<unk>", "x"}));
}

TEST(IndexExample, EmptySourcesBecomeOnePadUnit) {
  LabeledExample ex{"a", {{"x", "y"}}, {}, {}, 1};
  Dataset ds;
  ds.examples.push_back(ex);
  const IndexedExample ix = index_example(ex, build_vocabulary(ds));
  ASSERT_EQ(ix.comments.size(), 1u);
  EXPECT_EQ(ix.comments[0], IndexSeq({Vocabulary::kPad}));
  ASSERT_EQ(ix.relevant.size(), 1u);
  EXPECT_EQ(ix.relevant[0], IndexSeq({Vocabulary::kPad}));
  EXPECT_EQ(ix.label, 1);
}

bool contains(const TokenSeq& unit, const std::string& token) {
  return std::find(unit.begin(), unit.end(), token) != unit.end();
}

std::size_t claim_of(const LabeledExample& ex, std::size_t pairs) {
  for (std::size_t p = 0; p < pairs; ++p)
    for (const auto& s : ex.sentences)
      if (contains(s, claim_token(p))) return p;
  return pairs;
}

TEST(Synthetic, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.examples = 32;
  EXPECT_EQ(to_jsonl(generate_synthetic(cfg)), to_jsonl(generate_synthetic(cfg)));
}

TEST(Synthetic, BalancedLabels) {
  const Dataset ds = generate_synthetic(SynthConfig{});
  const auto fake = std::count_if(ds.examples.begin(), ds.examples.end(), [](const auto& e) { return e.label == 1; });
  EXPECT_LE(std::abs(static_cast<long>(fake) - 500), 1);
}

TEST(Synthetic, OneClaimTokenInOneSentence) {
  SynthConfig cfg;
  cfg.examples = 100;
  for (const auto& ex : generate_synthetic(cfg).examples) {
    std::size_t hits = 0;
    for (const auto& s : ex.sentences)
      for (const auto& t : s) hits += t.rfind("claim", 0) == 0;
    EXPECT_EQ(hits, 1u) << ex.id;
  }
}

TEST(Synthetic, ZeroNoiseFakeCommentsAllRefute) {
  SynthConfig cfg;
  cfg.examples = 100;
  cfg.noise_fraction = 0.0;
  for (const auto& ex : generate_synthetic(cfg).examples) {
    if (ex.label != 1) continue;
    const std::string refute = refutation_token(claim_of(ex, cfg.claim_pairs));
    for (const auto& c : ex.comments) EXPECT_TRUE(contains(c, refute)) << ex.id;
  }
}

TEST(Synthetic, MajorityOfFakeSourcesCarryPairedTokens) {
  SynthConfig cfg;
  cfg.examples = 200;
  for (const auto& ex : generate_synthetic(cfg).examples) {
    if (ex.label != 1) continue;
    const std::size_t claim = claim_of(ex, cfg.claim_pairs);
    const auto refuting = std::count_if(ex.comments.begin(), ex.comments.end(),
                                        [&](const auto& c) { return contains(c, refutation_token(claim)); });
    const auto contradicting = std::count_if(ex.relevant.begin(), ex.relevant.end(),
                                             [&](const auto& r) { return contains(r, contradiction_token(claim)); });
    EXPECT_GT(2 * refuting, static_cast<long>(ex.comments.size()));
    EXPECT_GT(2 * contradicting, static_cast<long>(ex.relevant.size()));
  }
}

// The paired refutation token decides the label on its own, so the planted
// signal exists before any training.
TEST(Synthetic, PairedRefutationRuleSeparatesClasses) {
  SynthConfig cfg;
  const Dataset ds = generate_synthetic(cfg);
  std::size_t correct = 0;
  for (const auto& ex : ds.examples) {
    const std::string refute = refutation_token(claim_of(ex, cfg.claim_pairs));
    const bool any = std::any_of(ex.comments.begin(), ex.comments.end(), [&](const auto& c) { return contains(c, refute); });
    correct += (any ? 1 : 0) == ex.label;
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(ds.size()), 0.95);
}

TEST(Synthetic, RejectsInvalidConfig) {
  SynthConfig cfg;
  cfg.noise_fraction = 1.5;
  EXPECT_THROW(generate_synthetic(cfg), ValidationError);
  cfg = SynthConfig{};
  cfg.comments = 0;
  EXPECT_THROW(generate_synthetic(cfg), ValidationError);
}

}  // namespace
}  // namespace emif
