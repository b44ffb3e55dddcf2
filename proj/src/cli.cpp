#include "emif/cli.hpp"

#include "emif/checkpoint.hpp"
#include "emif/corpus.hpp"
#include "emif/errors.hpp"
#include "emif/explain.hpp"
#include "emif/gradient_check.hpp"
#include "emif/random.hpp"
#include "emif/training.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#ifndef EMIF_VERSION
#define EMIF_VERSION "dev"
#endif

namespace emif::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

// Keys accepted by each subcommand; every key is also a --flag.
const std::map<std::string, std::vector<std::string>>& subcommand_keys() {
  static const std::vector<std::string> model = {"epochs", "batch", "lr",   "beta",      "topk",      "dim",
                                                 "coattention-dim", "divergence-dim", "optimizer", "patience", "variant", "threads",
                                                 "shared-encoder", "min-freq", "max-vocab"};
  static const std::map<std::string, std::vector<std::string>> keys = [] {
    std::map<std::string, std::vector<std::string>> k;
    k["ingest"] = {"data"};
    k["synth"] = {"n",      "out",       "noise",           "comments",        "relevant", "pairs",
                  "topics", "vocab",     "sentences", "sentence-length", "comment-length", "relevant-length"};
    k["train"] = {"data", "out"};
    k["ablate"] = {"data", "out"};
    k["eval"] = {"data", "out", "checkpoint", "split", "variant", "threads", "dim", "topk"};
    k["explain"] = {"data", "out", "checkpoint", "ids", "variant", "dim", "topk"};
    k["gradcheck"] = {"out", "step", "variant", "beta", "tol"};
    for (const char* name : {"train", "ablate"}) k[name].insert(k[name].end(), model.begin(), model.end());
    for (auto& [name, list] : k) {
      list.push_back("seed");
      list.push_back("config");
    }
    return k;
  }();
  return keys;
}

/// Resolves a setting field-wise: command-line flag, then config file, then
/// the built-in default.
class Settings {
 public:
  Settings(std::map<std::string, std::string> flags, std::map<std::string, std::string> file)
      : flags_(std::move(flags)), file_(std::move(file)) {}

  std::optional<std::string> find(const std::string& key) const {
    if (auto it = flags_.find(key); it != flags_.end()) return it->second;
    if (auto it = file_.find(key); it != file_.end()) return it->second;
    return std::nullopt;
  }
  bool has(const std::string& key) const { return find(key).has_value(); }

  std::string str(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
  }

  template <class T>
  T num(const std::string& key, T fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    T out{};
    const char* first = v->data();
    const char* last = v->data() + v->size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw UsageError("invalid value '" + *v + "' for --" + key);
    return out;
  }

  bool flag(const std::string& key, bool fallback) const {
    const auto v = find(key);
    if (!v) return fallback;
    if (*v == "1" || *v == "true" || *v == "yes") return true;
    if (*v == "0" || *v == "false" || *v == "no") return false;
    throw UsageError("invalid boolean '" + *v + "' for --" + key);
  }

  /// Every resolved key, for the manifest.
  std::map<std::string, std::string> resolved() const {
    std::map<std::string, std::string> all = file_;
    for (const auto& [k, v] : flags_) all[k] = v;
    all.erase("config");
    return all;
  }

 private:
  std::map<std::string, std::string> flags_;
  std::map<std::string, std::string> file_;
};

TrainConfig train_config(const Settings& s, const TrainConfig& base = {}) {
  TrainConfig c = base;
  c.seed = s.num<std::uint64_t>("seed", c.seed);
  c.epochs = s.num<std::size_t>("epochs", c.epochs);
  c.batch_size = s.num<std::size_t>("batch", c.batch_size);
  c.learning_rate = s.num<double>("lr", c.learning_rate);
  c.beta = s.num<double>("beta", c.beta);
  c.dims.top_k = s.num<std::size_t>("topk", c.dims.top_k);
  c.dims.dim = s.num<std::size_t>("dim", c.dims.dim);
  c.dims.coattention = s.num<std::size_t>("coattention-dim", c.dims.coattention);
  c.dims.divergence = s.num<std::size_t>("divergence-dim", c.dims.divergence);
  c.dims.shared_encoder = s.flag("shared-encoder", c.dims.shared_encoder);
  c.patience = s.num<std::size_t>("patience", c.patience);
  c.threads = s.num<std::size_t>("threads", c.threads);
  c.min_freq = s.num<std::size_t>("min-freq", c.min_freq);
  c.max_vocab = s.num<std::size_t>("max-vocab", c.max_vocab);
  if (auto v = s.find("variant")) c.variant = parse_variant(*v);
  if (auto v = s.find("optimizer")) c.optimizer = parse_optimizer(*v);
  c.validate();
  return c;
}

std::filesystem::path require_path(const Settings& s, const std::string& key) {
  auto v = s.find(key);
  if (!v || v->empty()) throw UsageError("missing required --" + key);
  return *v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_manifest(const std::filesystem::path& path, const std::string& command, const Settings& s,
                    const std::map<std::string, std::string>& extra = {}) {
  std::map<std::string, std::string> all = s.resolved();
  for (const auto& [k, v] : extra) all[k] = v;
  std::string text = "# resolved run configuration; pass back with --config to reproduce\n";
  text += "command = " + command + "\n";
  text += "code_version = " EMIF_VERSION "\n";
  for (const auto& [k, v] : all) text += k + " = " + v + "\n";
  write_text(path, text);
}

std::map<std::string, std::string> train_manifest_fields(const TrainConfig& c) {
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  return {{"seed", std::to_string(c.seed)},
          {"epochs", std::to_string(c.epochs)},
          {"batch", std::to_string(c.batch_size)},
          {"lr", fmt(c.learning_rate)},
          {"beta", fmt(c.beta)},
          {"topk", std::to_string(c.dims.top_k)},
          {"dim", std::to_string(c.dims.dim)},
          {"coattention-dim", std::to_string(c.dims.coattention)},
          {"divergence-dim", std::to_string(c.dims.divergence)},
          {"optimizer", std::string(to_string(c.optimizer))},
          {"patience", std::to_string(c.patience)},
          {"variant", std::string(to_string(c.variant))},
          {"threads", std::to_string(c.threads)},
          {"shared-encoder", c.dims.shared_encoder ? "true" : "false"},
          {"min-freq", std::to_string(c.min_freq)},
          {"max-vocab", std::to_string(c.max_vocab)}};
}

std::filesystem::path prepare_out_dir(const Settings& s) {
  const auto out = require_path(s, "out");
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

std::optional<ModelDims> requested_dims(const Settings& s, const ModelDims& stored) {
  if (!s.has("dim") && !s.has("topk")) return std::nullopt;
  ModelDims want = stored;
  want.dim = s.num<std::size_t>("dim", stored.dim);
  want.top_k = s.num<std::size_t>("topk", stored.top_k);
  return want;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Settings& s, std::ostream& out) {
  const Dataset ds = load_dataset(require_path(s, "data"));
  const DatasetStats stats = dataset_stats(ds);
  out << "examples: " << stats.news << " (true " << stats.true_news << ", fake " << stats.fake_news << ")\n";
  out << format_stats(stats);
  return 0;
}

int cmd_synth(const Settings& s, std::ostream& out) {
  SynthConfig cfg;
  cfg.examples = s.num<std::size_t>("n", cfg.examples);
  cfg.seed = s.num<std::uint64_t>("seed", cfg.seed);
  cfg.noise_fraction = s.num<double>("noise", cfg.noise_fraction);
  cfg.comments = s.num<std::size_t>("comments", cfg.comments);
  cfg.relevant = s.num<std::size_t>("relevant", cfg.relevant);
  cfg.claim_pairs = s.num<std::size_t>("pairs", cfg.claim_pairs);
  cfg.topic_tokens = s.num<std::size_t>("topics", cfg.topic_tokens);
  cfg.vocab_size = s.num<std::size_t>("vocab", cfg.vocab_size);
  cfg.sentences = s.num<std::size_t>("sentences", cfg.sentences);
  cfg.sentence_length = s.num<std::size_t>("sentence-length", cfg.sentence_length);
  cfg.comment_length = s.num<std::size_t>("comment-length", cfg.comment_length);
  cfg.relevant_length = s.num<std::size_t>("relevant-length", cfg.relevant_length);
  cfg.validate();
  const auto path = require_path(s, "out");
  const Dataset ds = generate_synthetic(cfg);
  save_dataset(ds, path);
  write_manifest(path.string() + ".manifest", "synth", s, {{"seed", std::to_string(cfg.seed)}});
  out << "wrote " << ds.size() << " examples to " << path.string() << "\n";
  return 0;
}

int cmd_train(const Settings& s, std::ostream& out) {
  const TrainConfig cfg = train_config(s);
  const auto dir = prepare_out_dir(s);
  const Dataset ds = load_dataset(require_path(s, "data"), cfg.limits);
  const PreparedData data = prepare_data(ds, cfg);
  TrainResult result = train(initial_params(data.vocab, cfg), data.train(), data.val(), cfg);
  const std::vector<IndexedExample>& report_set = data.test().empty() ? data.train() : data.test();
  const MetricsReport metrics = evaluate(result.params, report_set, cfg.variant, cfg.threads);

  TrainConfig stored = cfg;
  stored.dims = result.params.dims;
  save_checkpoint({result.params, data.vocab, stored}, dir / "checkpoint.json");
  write_text(dir / "history.csv", history_csv(result.history));
  write_text(dir / "metrics.csv", metrics_csv({{std::string(to_string(cfg.variant)), metrics}}));
  write_manifest(dir / "manifest.txt", "train", s, train_manifest_fields(cfg));
  out << "trained " << result.history.size() << " epochs (best " << result.best_epoch << "); test accuracy "
      << metrics.accuracy << ", f1 " << metrics.f1 << "\n";
  return 0;
}

int cmd_eval(const Settings& s, std::ostream& out) {
  const auto ck_path = s.has("checkpoint") ? std::filesystem::path(*s.find("checkpoint"))
                                           : require_path(s, "out") / "checkpoint.json";
  Checkpoint probe = load_checkpoint(ck_path);
  Checkpoint ck = probe;
  if (auto want = requested_dims(s, probe.params.dims)) ck = load_checkpoint(ck_path, want);
  TrainConfig cfg = ck.config;
  cfg.seed = s.num<std::uint64_t>("seed", cfg.seed);
  cfg.threads = s.num<std::size_t>("threads", cfg.threads);
  if (auto v = s.find("variant")) cfg.variant = parse_variant(*v);

  const Dataset ds = load_dataset(require_path(s, "data"), cfg.limits);
  const std::string which = s.str("split", "test");
  Dataset part;
  if (which == "all") {
    part = ds;
  } else {
    const auto splits = split_dataset(ds, cfg.split, derive_seed(cfg.seed, "split"));
    if (which == "train") part = splits[0];
    else if (which == "val") part = splits[1];
    else if (which == "test") part = splits[2];
    else throw UsageError("--split must be one of train, val, test, all");
  }
  const MetricsReport m = evaluate(ck.params, index_dataset(part, ck.vocab), cfg.variant, cfg.threads);
  const std::string csv = metrics_csv({{std::string(to_string(cfg.variant)), m}});
  if (s.has("out")) {
    const auto dir = prepare_out_dir(s);
    write_text(dir / "eval_metrics.csv", csv);
    write_manifest(dir / "eval_manifest.txt", "eval", s, {{"checkpoint", ck_path.string()}});
  }
  out << csv;
  return 0;
}

int cmd_ablate(const Settings& s, std::ostream& out) {
  const TrainConfig cfg = train_config(s);
  const auto dir = prepare_out_dir(s);
  const Dataset ds = load_dataset(require_path(s, "data"), cfg.limits);
  const PreparedData data = prepare_data(ds, cfg);
  std::vector<std::pair<std::string, MetricsReport>> rows;
  for (const auto& row : run_ablation_suite(data, cfg)) rows.emplace_back(std::string(to_string(row.variant)), row.metrics);
  const std::string csv = metrics_csv(rows);
  write_text(dir / "ablation.csv", csv);
  write_manifest(dir / "manifest.txt", "ablate", s, train_manifest_fields(cfg));
  out << csv;
  return 0;
}

std::vector<std::string> split_ids(const std::string& list) {
  std::vector<std::string> ids;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) ids.push_back(trim(item));
  return ids;
}

int cmd_explain(const Settings& s, std::ostream& out) {
  const auto dir = prepare_out_dir(s);
  const auto ck_path =
      s.has("checkpoint") ? std::filesystem::path(*s.find("checkpoint")) : dir / "checkpoint.json";
  Checkpoint ck = load_checkpoint(ck_path);
  if (auto want = requested_dims(s, ck.params.dims)) ck = load_checkpoint(ck_path, want);
  const Variant variant = s.has("variant") ? parse_variant(*s.find("variant")) : ck.config.variant;
  const Dataset ds = load_dataset(require_path(s, "data"), ck.config.limits);

  std::vector<std::string> ids = split_ids(s.str("ids", ""));
  if (ids.empty())
    for (std::size_t i = 0; i < std::min<std::size_t>(5, ds.size()); ++i) ids.push_back(ds.examples[i].id);
  for (const auto& id : ids) {
    auto it = std::find_if(ds.examples.begin(), ds.examples.end(), [&](const LabeledExample& e) { return e.id == id; });
    if (it == ds.examples.end()) throw ValidationError("no example with id '" + id + "'");
    const ExplanationRecord rec = extract_explanation(ck.params, *it, ck.vocab, variant);
    write_text(dir / (id + ".json"), export_json(rec));
    render_html(rec, dir / (id + ".html"));
    out << id << ": predicted " << (rec.predicted_label == 1 ? "fake" : "true") << " (p_fake " << rec.p_fake << ")\n";
  }
  write_manifest(dir / "explain_manifest.txt", "explain", s, {{"checkpoint", ck_path.string()}});
  return 0;
}

int cmd_gradcheck(const Settings& s, std::ostream& out) {
  GradCheckOptions opt;
  opt.step = s.num<double>("step", opt.step);
  opt.beta = s.num<double>("beta", opt.beta);
  if (auto v = s.find("variant")) opt.variant = parse_variant(*v);
  const double tol = s.num<double>("tol", 1e-3);
  const auto fx = make_gradcheck_fixture(s.num<std::uint64_t>("seed", 7));
  const GradCheckReport report = gradient_check(fx.params, fx.example, opt);
  std::ostringstream table;
  table << "group,entries,max_relative_error\n";
  for (const auto& g : report.groups) table << g.name << ',' << g.entries << ',' << g.max_relative_error << '\n';
  out << table.str();
  out << "max relative error " << report.max_error << " (" << report.worst_group << ")\n";
  if (s.has("out")) {
    const auto dir = prepare_out_dir(s);
    write_text(dir / "gradcheck.csv", table.str());
    write_manifest(dir / "manifest.txt", "gradcheck", s);
  }
  if (report.max_error > tol) {
    out << "gradient check failed: " << report.max_error << " > " << tol << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string body = trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(number) + ": expected 'key = value'");
    std::string key = trim(body.substr(0, eq));
    if (key.starts_with("--")) key.erase(0, 2);
    out[key] = trim(body.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Evidence-aware multi-source fusion for fake news detection", "emif"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EMIF_VERSION);

  const std::map<std::string, std::string> descriptions = {
      {"ingest", "validate a JSON-lines dataset and report statistics"},
      {"synth", "write a seeded synthetic dataset"},
      {"train", "train a model and write checkpoint, history and metrics"},
      {"eval", "evaluate a checkpoint"},
      {"ablate", "train and evaluate all five ablation variants"},
      {"explain", "write JSON/HTML explanations for selected examples"},
      {"gradcheck", "verify analytic gradients against finite differences"}};

  std::map<std::string, std::map<std::string, std::string>> raw;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  std::string positional_data;
  for (const auto& [name, keys] : subcommand_keys()) {
    CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
    for (const auto& key : keys) options[name][key] = sub->add_option("--" + key, raw[name][key]);
    if (name == "ingest") sub->add_option("path", positional_data, "dataset to ingest");
  }

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << EMIF_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "emif: " << e.what() << "\n";
    return 2;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  std::map<std::string, std::string> flags;
  for (const auto& [key, opt] : options[name])
    if (opt->count() > 0) flags[key] = raw[name][key];
  if (name == "ingest" && !positional_data.empty() && !flags.contains("data")) flags["data"] = positional_data;

  try {
    std::map<std::string, std::string> file;
    if (auto it = flags.find("config"); it != flags.end()) {
      file = read_config_file(it->second);
      const auto& allowed = subcommand_keys().at(name);
      for (auto f = file.begin(); f != file.end();) {
        if (f->first == "command" || f->first == "code_version") {
          f = file.erase(f);
        } else if (std::find(allowed.begin(), allowed.end(), f->first) == allowed.end()) {
          throw ValidationError("config key '" + f->first + "' does not apply to '" + name + "'");
        } else {
          ++f;
        }
      }
    }
    const Settings settings(flags, file);
    if (name == "ingest") return cmd_ingest(settings, out);
    if (name == "synth") return cmd_synth(settings, out);
    if (name == "train") return cmd_train(settings, out);
    if (name == "eval") return cmd_eval(settings, out);
    if (name == "ablate") return cmd_ablate(settings, out);
    if (name == "explain") return cmd_explain(settings, out);
    if (name == "gradcheck") return cmd_gradcheck(settings, out);
  } catch (const UsageError& e) {
    err << "emif: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "emif: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace emif::cli
