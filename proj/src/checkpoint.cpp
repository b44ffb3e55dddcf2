#include "emif/checkpoint.hpp"

#include "emif/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#ifndef EMIF_VERSION
#define EMIF_VERSION "dev"
#endif

namespace emif {

using ojson = nlohmann::ordered_json;

namespace {

ojson dims_to_json(const ModelDims& d) {
  ojson j;
  j["vocab"] = d.vocab;
  j["dim"] = d.dim;
  j["coattention"] = d.coattention;
  j["divergence"] = d.divergence;
  j["top_k"] = d.top_k;
  j["shared_encoder"] = d.shared_encoder;
  j["activation"] = std::string(to_string(d.activation));
  return j;
}

ModelDims dims_from_json(const ojson& j) {
  ModelDims d;
  d.vocab = j.at("vocab").get<std::size_t>();
  d.dim = j.at("dim").get<std::size_t>();
  d.coattention = j.at("coattention").get<std::size_t>();
  d.divergence = j.at("divergence").get<std::size_t>();
  d.top_k = j.at("top_k").get<std::size_t>();
  d.shared_encoder = j.at("shared_encoder").get<bool>();
  d.activation = parse_activation(j.at("activation").get<std::string>());
  return d;
}

ojson config_to_json(const TrainConfig& c) {
  ojson j;
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch_size;
  j["lr"] = c.learning_rate;
  j["optimizer"] = std::string(to_string(c.optimizer));
  j["beta"] = c.beta;
  j["variant"] = std::string(to_string(c.variant));
  j["patience"] = c.patience;
  j["threads"] = c.threads;
  j["split"] = c.split;
  j["min_freq"] = c.min_freq;
  j["max_vocab"] = c.max_vocab;
  j["limits"] = {c.limits.max_sentences, c.limits.sentence_tokens, c.limits.max_comments,
                 c.limits.comment_tokens,  c.limits.max_relevant,    c.limits.relevant_tokens};
  return j;
}

TrainConfig config_from_json(const ojson& j) {
  TrainConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch").get<std::size_t>();
  c.learning_rate = j.at("lr").get<double>();
  c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
  c.beta = j.at("beta").get<double>();
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.patience = j.at("patience").get<std::size_t>();
  c.threads = j.at("threads").get<std::size_t>();
  c.split = j.at("split").get<std::array<double, 3>>();
  c.min_freq = j.at("min_freq").get<std::size_t>();
  c.max_vocab = j.at("max_vocab").get<std::size_t>();
  const auto limits = j.at("limits").get<std::array<std::size_t, 6>>();
  c.limits = {limits[0], limits[1], limits[2], limits[3], limits[4], limits[5]};
  return c;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ck) {
  ojson j;
  j["format_version"] = kCheckpointFormatVersion;
  j["code_version"] = EMIF_VERSION;
  j["dims"] = dims_to_json(ck.params.dims);
  j["config"] = config_to_json(ck.config);
  j["vocabulary"] = ck.vocab.tokens();
  ojson params = ojson::object();
  for (const auto& t : ck.params.tensors()) {
    ojson entry;
    entry["shape"] = {t.values.rows(), t.values.cols()};
    entry["data"] = std::vector<double>(t.values.data(), t.values.data() + t.values.size());
    params[t.name] = std::move(entry);
  }
  j["params"] = std::move(params);
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text, const std::optional<ModelDims>& expected) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion)
      throw ValidationError("unsupported checkpoint format version " + std::to_string(version));
    const ModelDims dims = dims_from_json(j.at("dims"));
    if (expected) {
      ModelDims want = *expected;
      want.vocab = dims.vocab;
      if (!(want == dims)) throw ValidationError("checkpoint dimensions differ from the requested model dimensions");
    }
    Vocabulary vocab(j.at("vocabulary").get<std::vector<std::string>>());
    if (vocab.size() != dims.vocab) throw ValidationError("checkpoint vocabulary size differs from its dims");

    Checkpoint ck{ModelParams::zeros(dims), std::move(vocab), config_from_json(j.at("config"))};
    ck.config.dims = dims;
    const auto& stored = j.at("params");
    if (stored.size() != ck.params.tensors().size())
      throw ValidationError("checkpoint holds an unexpected number of parameter groups");
    for (auto& t : ck.params.tensors()) {
      if (!stored.contains(t.name)) throw ValidationError("checkpoint lacks parameter group " + t.name);
      const auto& entry = stored.at(t.name);
      const auto shape = entry.at("shape").get<std::array<Eigen::Index, 2>>();
      if (shape[0] != t.values.rows() || shape[1] != t.values.cols())
        throw ValidationError("shape mismatch for parameter group " + t.name);
      const auto data = entry.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != t.values.size())
        throw ValidationError("data length mismatch for parameter group " + t.name);
      std::copy(data.begin(), data.end(), t.values.data());
    }
    return ck;
  } catch (const ojson::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << checkpoint_to_string(checkpoint);
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<ModelDims>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_string(buf.str(), expected);
}

}  // namespace emif
