#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace emif {

using TokenSeq = std::vector<std::string>;
using IndexSeq = std::vector<int>;

/// One news article with its comment thread, relevant-news pool and label
/// (0 = true, 1 = fake). Token sequences are already preprocessed.
struct LabeledExample {
  std::string id;
  std::vector<TokenSeq> sentences;
  std::vector<TokenSeq> comments;
  std::vector<TokenSeq> relevant;
  int label = 0;

  bool operator==(const LabeledExample&) const = default;
};

enum class SplitTag { Train, Val, Test, All };

std::string_view to_string(SplitTag tag);

struct Dataset {
  std::vector<LabeledExample> examples;
  SplitTag split_tag = SplitTag::All;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  bool operator==(const Dataset&) const = default;
};

/// Truncation limits: N sentences of n tokens, M comments of m tokens, R
/// relevant articles of l tokens.
struct TruncationLimits {
  std::size_t max_sentences = 10;
  std::size_t sentence_tokens = 30;
  std::size_t max_comments = 20;
  std::size_t comment_tokens = 30;
  std::size_t max_relevant = 30;
  std::size_t relevant_tokens = 50;
};

// ---------------------------------------------------------------------------
// Text preprocessing

/// Lowercases, splits on (Unicode) whitespace and strips leading/trailing
/// punctuation from every token. Tokens that end up empty are dropped.
TokenSeq tokenize(std::string_view text);

/// Splits raw text into sentences on '.', '!' and '?'. Empty pieces are
/// dropped.
std::vector<std::string> segment_sentences(std::string_view text);

std::string join_tokens(const TokenSeq& tokens);

// ---------------------------------------------------------------------------
// JSON-lines ingestion

LabeledExample truncate(LabeledExample example, const TruncationLimits& limits);

/// Parses a JSON-lines stream. `source` is used in diagnostics only.
Dataset parse_dataset(std::istream& in, const TruncationLimits& limits,
                      std::string_view source = "<stream>");
Dataset load_dataset(const std::filesystem::path& path,
                     const TruncationLimits& limits = {});

std::string to_jsonl(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Counts in the layout of the dataset statistics table: total data is news
/// plus comments.
struct DatasetStats {
  std::size_t news = 0;
  std::size_t true_news = 0;
  std::size_t fake_news = 0;
  std::size_t comments = 0;
  std::size_t relevant = 0;

  std::size_t total_data() const { return news + comments; }
  double avg_relevant_per_news() const {
    return news == 0 ? 0.0 : static_cast<double>(relevant) / static_cast<double>(news);
  }
};

DatasetStats dataset_stats(const Dataset& dataset);
std::string format_stats(const DatasetStats& stats);

// ---------------------------------------------------------------------------
// Splitting

/// Stratified, seeded split into (train, val, test). Ratios must be positive
/// and sum to 1.
std::array<Dataset, 3> split_dataset(const Dataset& dataset,
                                     const std::array<double, 3>& ratios,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Vocabulary

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  /// Builds from a full index→token list whose first two entries must be the
  /// reserved PAD and UNK tokens.
  explicit Vocabulary(std::vector<std::string> tokens);

  int index(std::string_view token) const;
  const std::string& token(int index) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> lookup_;
};

/// Tokens with frequency >= min_freq ordered by descending frequency, then
/// lexicographically, truncated to max_size - 2 and prefixed with PAD/UNK.
Vocabulary build_vocabulary(const Dataset& dataset, std::size_t min_freq = 1,
                            std::size_t max_size = 50000);

/// Vocabulary-indexed form of an example, ready for the model. Empty comment
/// or relevant lists are replaced by a single all-PAD unit.
struct IndexedExample {
  std::string id;
  std::vector<IndexSeq> sentences;
  std::vector<IndexSeq> comments;
  std::vector<IndexSeq> relevant;
  int label = 0;
};

IndexedExample index_example(const LabeledExample& example, const Vocabulary& vocab);
std::vector<IndexedExample> index_dataset(const Dataset& dataset, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Synthetic data

/// Generator for a dataset with a planted, co-attention-dependent signal.
///
/// Every article makes one claim (token "claimI") in one sentence. Comments
/// that are not noise carry a refutation token and relevant articles that are
/// not noise carry a contradiction token. For fake articles those tokens are
/// the ones paired with the article's claim ("refuteI", "contraI"); for true
/// articles they belong to a different pair, so the label is only
/// recoverable by matching comments against the news content.
struct SynthConfig {
  std::size_t vocab_size = 5;       // noise-token vocabulary
  std::size_t topic_tokens = 8;
  std::size_t claim_pairs = 2;
  std::size_t examples = 1000;
  std::size_t comments = 6;         // per example
  std::size_t relevant = 6;         // per example
  double noise_fraction = 0.2;      // share of comments/relevant without a planted token
  std::uint64_t seed = 7;

  std::size_t sentences = 4;
  std::size_t sentence_length = 4;
  std::size_t comment_length = 4;
  std::size_t relevant_length = 4;

  void validate() const;
};

std::string claim_token(std::size_t pair);
std::string refutation_token(std::size_t pair);
std::string contradiction_token(std::size_t pair);

Dataset generate_synthetic(const SynthConfig& config);

}  // namespace emif
