#include "emif/corpus.hpp"

#include "emif/errors.hpp"
#include "emif/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace emif {

using json = nlohmann::json;

std::string_view to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Val: return "val";
    case SplitTag::Test: return "test";
    case SplitTag::All: return "all";
  }
  return "all";
}

namespace {

void truncate_units(std::vector<TokenSeq>& units, std::size_t max_units, std::size_t max_tokens) {
  std::erase_if(units, [](const TokenSeq& t) { return t.empty(); });
  if (units.size() > max_units) units.resize(max_units);
  for (auto& u : units)
    if (u.size() > max_tokens) u.resize(max_tokens);
}

std::vector<TokenSeq> read_units(const json& record, const char* key, std::size_t line) {
  std::vector<TokenSeq> out;
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return out;
  if (!it->is_array())
    throw ValidationError("line " + std::to_string(line) + ": '" + key + "' must be a list of strings");
  for (const auto& item : *it) {
    if (!item.is_string())
      throw ValidationError("line " + std::to_string(line) + ": '" + key + "' must be a list of strings");
    out.push_back(tokenize(item.get<std::string>()));
  }
  return out;
}

LabeledExample parse_record(const json& record, std::size_t line, const TruncationLimits& limits) {
  const std::string where = "line " + std::to_string(line) + ": ";
  if (!record.is_object()) throw ValidationError(where + "record is not a JSON object");

  LabeledExample ex;
  auto id = record.find("id");
  if (id == record.end()) throw ValidationError(where + "missing field 'id'");
  if (id->is_string())
    ex.id = id->get<std::string>();
  else if (id->is_number_integer())
    ex.id = std::to_string(id->get<long long>());
  else
    throw ValidationError(where + "'id' must be a string");

  auto text = record.find("text");
  if (text == record.end() || text->is_null()) throw ValidationError(where + "missing field 'text'");
  if (text->is_string()) {
    for (const auto& s : segment_sentences(text->get<std::string>())) ex.sentences.push_back(tokenize(s));
  } else if (text->is_array()) {
    ex.sentences = read_units(record, "text", line);
  } else {
    throw ValidationError(where + "'text' must be a string or a list of strings");
  }

  auto label = record.find("label");
  if (label == record.end() || label->is_null()) throw ValidationError(where + "missing field 'label'");
  if (!label->is_number_integer() && !label->is_number_unsigned())
    throw ValidationError(where + "'label' must be 0 or 1");
  const auto value = label->get<long long>();
  if (value != 0 && value != 1) throw ValidationError(where + "label " + std::to_string(value) + " outside {0,1}");
  ex.label = static_cast<int>(value);

  ex.comments = read_units(record, "comments", line);
  ex.relevant = read_units(record, "relevant", line);

  ex = truncate(std::move(ex), limits);
  if (ex.sentences.empty()) throw ValidationError(where + "'text' contains no tokens");
  return ex;
}

}  // namespace

LabeledExample truncate(LabeledExample example, const TruncationLimits& limits) {
  truncate_units(example.sentences, limits.max_sentences, limits.sentence_tokens);
  truncate_units(example.comments, limits.max_comments, limits.comment_tokens);
  truncate_units(example.relevant, limits.max_relevant, limits.relevant_tokens);
  return example;
}

Dataset parse_dataset(std::istream& in, const TruncationLimits& limits, std::string_view source) {
  Dataset ds;
  std::set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string(source) + ": line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
    }
    LabeledExample ex;
    try {
      ex = parse_record(record, line, limits);
    } catch (const ValidationError& e) {
      throw ValidationError(std::string(source) + ": " + e.what());
    }
    if (!ids.insert(ex.id).second)
      throw ValidationError(std::string(source) + ": line " + std::to_string(line) + ": duplicate id '" + ex.id + "'");
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const TruncationLimits& limits) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  return parse_dataset(in, limits, path.string());
}

std::string to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& ex : dataset.examples) {
    json::array_t text, comments, relevant;
    for (const auto& s : ex.sentences) text.emplace_back(join_tokens(s));
    for (const auto& c : ex.comments) comments.emplace_back(join_tokens(c));
    for (const auto& r : ex.relevant) relevant.emplace_back(join_tokens(r));
    nlohmann::ordered_json record;
    record["id"] = ex.id;
    record["text"] = text;
    record["label"] = ex.label;
    record["comments"] = comments;
    record["relevant"] = relevant;
    out += record.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_jsonl(dataset);
  if (!out) throw IoError("write failed for " + path.string());
}

DatasetStats dataset_stats(const Dataset& dataset) {
  DatasetStats s;
  for (const auto& ex : dataset.examples) {
    ++s.news;
    (ex.label == 1 ? s.fake_news : s.true_news) += 1;
    s.comments += ex.comments.size();
    s.relevant += ex.relevant.size();
  }
  return s;
}

std::string format_stats(const DatasetStats& stats) {
  char avg[32];
  std::snprintf(avg, sizeof avg, "%.2f", stats.avg_relevant_per_news());
  std::ostringstream os;
  auto row = [&os](std::string_view name, const std::string& value) {
    os << name;
    for (std::size_t i = name.size(); i < 30; ++i) os << ' ';
    os << value << '\n';
  };
  row("Dataset", "Number");
  row("Total data", std::to_string(stats.total_data()));
  row("True news", std::to_string(stats.true_news));
  row("Fake news", std::to_string(stats.fake_news));
  row("User Comments", std::to_string(stats.comments));
  row("Avg.Relevant News per News", avg);
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

// Largest-remainder apportionment of `total` by `weights`; ties go to the
// lower index.
std::array<std::size_t, 3> apportion(std::size_t total, const std::array<double, 3>& quotas) {
  std::array<std::size_t, 3> counts{};
  std::size_t assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    counts[s] = static_cast<std::size_t>(std::floor(quotas[s] + 1e-9));
    assigned += counts[s];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a] - std::floor(quotas[a] + 1e-9) > quotas[b] - std::floor(quotas[b] + 1e-9);
  });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % 3) {
    ++counts[order[i]];
    ++assigned;
  }
  while (assigned > total) {
    for (std::size_t s = 3; s-- > 0 && assigned > total;) {
      if (counts[s] > 0) {
        --counts[s];
        --assigned;
      }
    }
  }
  return counts;
}

}  // namespace

std::array<Dataset, 3> split_dataset(const Dataset& dataset, const std::array<double, 3>& ratios,
                                     std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) throw ValidationError("split ratios must be positive");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("split ratios must sum to 1");

  const std::size_t n = dataset.size();
  std::array<double, 3> global_quota{};
  for (std::size_t s = 0; s < 3; ++s) global_quota[s] = ratios[s] * static_cast<double>(n);
  const auto split_sizes = apportion(n, global_quota);

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < n; ++i) by_class[dataset.examples[i].label].push_back(i);

  Rng rng(seed);
  std::array<std::size_t, 3> remaining = split_sizes;
  std::array<std::vector<std::size_t>, 3> members;
  std::size_t classes_left = by_class.size();
  for (auto& [label, idx] : by_class) {
    shuffle_range(idx.begin(), idx.end(), rng);
    std::array<std::size_t, 3> counts{};
    if (--classes_left == 0) {
      counts = remaining;
    } else {
      std::array<double, 3> quota{};
      for (std::size_t s = 0; s < 3; ++s)
        quota[s] = static_cast<double>(idx.size()) * static_cast<double>(split_sizes[s]) / static_cast<double>(n);
      counts = apportion(idx.size(), quota);
      for (std::size_t s = 0; s < 3; ++s) counts[s] = std::min(counts[s], remaining[s]);
      // Re-balance if a cap removed examples from this class.
      std::size_t placed = counts[0] + counts[1] + counts[2];
      for (std::size_t s = 0; s < 3 && placed < idx.size(); ++s) {
        const std::size_t room = remaining[s] - counts[s];
        const std::size_t add = std::min(room, idx.size() - placed);
        counts[s] += add;
        placed += add;
      }
    }
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t k = 0; k < counts[s]; ++k) members[s].push_back(idx[pos++]);
      remaining[s] -= counts[s];
    }
  }

  std::array<Dataset, 3> out;
  constexpr std::array<SplitTag, 3> tags{SplitTag::Train, SplitTag::Val, SplitTag::Test};
  for (std::size_t s = 0; s < 3; ++s) {
    shuffle_range(members[s].begin(), members[s].end(), rng);
    out[s].split_tag = tags[s];
    for (std::size_t i : members[s]) out[s].examples.push_back(dataset.examples[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{std::string(kPadToken), std::string(kUnkToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[0] != kPadToken || tokens_[1] != kUnkToken)
    throw ValidationError("vocabulary must start with the reserved PAD and UNK tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!lookup_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw ValidationError("duplicate vocabulary entry '" + tokens_[i] + "'");
  }
}

int Vocabulary::index(std::string_view token) const {
  auto it = lookup_.find(token);
  return it == lookup_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size())
    throw BoundsError("vocabulary index " + std::to_string(index) + " out of range");
  return tokens_[static_cast<std::size_t>(index)];
}

Vocabulary build_vocabulary(const Dataset& dataset, std::size_t min_freq, std::size_t max_size) {
  if (dataset.empty()) throw ValidationError("cannot build a vocabulary from an empty dataset");
  if (max_size < 2) throw ValidationError("vocabulary max_size must leave room for PAD and UNK");
  std::unordered_map<std::string, std::size_t> freq;
  auto count = [&freq](const std::vector<TokenSeq>& units) {
    for (const auto& u : units)
      for (const auto& t : u) ++freq[t];
  };
  for (const auto& ex : dataset.examples) {
    count(ex.sentences);
    count(ex.comments);
    count(ex.relevant);
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, f] : freq)
    if (f >= min_freq && tok != Vocabulary::kPadToken && tok != Vocabulary::kUnkToken) ranked.emplace_back(tok, f);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > max_size - 2) ranked.resize(max_size - 2);

  std::vector<std::string> tokens{std::string(Vocabulary::kPadToken), std::string(Vocabulary::kUnkToken)};
  for (auto& [tok, f] : ranked) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens));
}

IndexedExample index_example(const LabeledExample& example, const Vocabulary& vocab) {
  auto map_units = [&vocab](const std::vector<TokenSeq>& units) {
    std::vector<IndexSeq> out;
    out.reserve(units.size());
    for (const auto& u : units) {
      IndexSeq seq;
      seq.reserve(u.size());
      for (const auto& t : u) seq.push_back(vocab.index(t));
      out.push_back(std::move(seq));
    }
    if (out.empty()) out.push_back(IndexSeq{Vocabulary::kPad});
    return out;
  };
  IndexedExample out;
  out.id = example.id;
  out.sentences = map_units(example.sentences);
  out.comments = map_units(example.comments);
  out.relevant = map_units(example.relevant);
  out.label = example.label;
  return out;
}

std::vector<IndexedExample> index_dataset(const Dataset& dataset, const Vocabulary& vocab) {
  std::vector<IndexedExample> out;
  out.reserve(dataset.size());
  for (const auto& ex : dataset.examples) out.push_back(index_example(ex, vocab));
  return out;
}

}  // namespace emif
