#include "emif/training.hpp"

#include "emif/errors.hpp"
#include "emif/random.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <thread>

namespace emif {

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || threads < 1) throw ValidationError("epochs, batch size and threads must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be finite and >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be finite and >= 0");
  if (dims.dim < 1 || dims.coattention < 1 || dims.divergence < 1 || dims.top_k < 1)
    throw ValidationError("model dimensions and top-K must be >= 1");
}

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is partitioned
// statically; callers write results into per-index slots so that the outcome
// does not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<int> predict(const ModelParams& params, const std::vector<IndexedExample>& data, Variant variant,
                         std::size_t threads) {
  std::vector<int> out(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) { out[i] = forward(params, data[i], variant, 0.0).predicted(); });
  return out;
}

}  // namespace

MetricsReport evaluate(const ModelParams& params, const std::vector<IndexedExample>& data, Variant variant,
                       std::size_t threads) {
  if (data.empty()) throw ValidationError("cannot evaluate on an empty dataset");
  std::vector<int> labels;
  labels.reserve(data.size());
  for (const auto& ex : data) labels.push_back(ex.label);
  return compute_metrics(predict(params, data, variant, threads), labels);
}

TrainResult train(ModelParams params, const std::vector<IndexedExample>& train_set,
                  const std::vector<IndexedExample>& val_set, const TrainConfig& config) {
  config.validate();
  if (train_set.empty()) throw ValidationError("training split is empty");
  const std::vector<IndexedExample>& validation = val_set.empty() ? train_set : val_set;

  auto optimizer = make_optimizer(config.optimizer, params.dims, config.learning_rate);
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t batch = std::min(config.batch_size, train_set.size());
  std::vector<ModelParams> slots(batch, ModelParams::zeros(params.dims));
  std::vector<LossBreakdown> losses(batch);
  ModelParams batch_grad = ModelParams::zeros(params.dims);

  TrainResult result{params, {}, 0};
  double best_f1 = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_range(order.begin(), order.end(), shuffle_rng);
    double sum_loss = 0.0, sum_kl = 0.0, sum_ce = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++batch_index) {
      const std::size_t count = std::min(batch, order.size() - start);
      parallel_for(count, config.threads, [&](std::size_t i) {
        slots[i].set_zero();
        const ForwardPass pass = forward(params, train_set[order[start + i]], config.variant, config.beta);
        losses[i] = pass.loss;
        backward(params, pass, slots[i]);
      });

      batch_grad.set_zero();
      auto acc = batch_grad.tensors();
      for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(losses[i].total))
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index + 1));
        sum_loss += losses[i].total;
        sum_kl += losses[i].kl;
        sum_ce += losses[i].ce;
        const auto g = slots[i].tensors();
        for (std::size_t t = 0; t < acc.size(); ++t) acc[t].values += g[t].values;
      }
      const double scale = 1.0 / static_cast<double>(count);
      for (auto& t : acc) t.values *= scale;
      optimizer->step(params, batch_grad);
      if (!params.all_finite())
        throw NumericError("non-finite parameters after epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index + 1));
    }

    const double n = static_cast<double>(train_set.size());
    EpochRecord rec{epoch, sum_loss / n, sum_kl / n, sum_ce / n,
                    evaluate(params, validation, config.variant, config.threads)};
    result.history.push_back(rec);
    if (rec.validation.f1 > best_f1) {
      best_f1 = rec.validation.f1;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

PreparedData prepare_data(const Dataset& dataset, const TrainConfig& config) {
  PreparedData data;
  data.splits = split_dataset(dataset, config.split, derive_seed(config.seed, "split"));
  data.vocab = build_vocabulary(data.splits[0], config.min_freq, config.max_vocab);
  for (std::size_t s = 0; s < 3; ++s) data.indexed[s] = index_dataset(data.splits[s], data.vocab);
  return data;
}

ModelParams initial_params(const Vocabulary& vocab, const TrainConfig& config) {
  ModelDims dims = config.dims;
  dims.vocab = vocab.size();
  return ModelParams::initialize(dims, derive_seed(config.seed, "init"));
}

std::vector<AblationRow> run_ablation_suite(const PreparedData& data, const TrainConfig& config) {
  std::vector<AblationRow> rows;
  const ModelParams init = initial_params(data.vocab, config);
  for (Variant v : kAllVariants) {
    TrainConfig cfg = config;
    cfg.variant = v;
    TrainResult r = train(init, data.train(), data.val(), cfg);
    rows.push_back({v, evaluate(r.params, data.test(), v, cfg.threads), r.best_epoch});
  }
  return rows;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,loss,kl,ce,val_accuracy,val_precision,val_recall,val_f1\n";
  char line[256];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.9g,%.6f,%.6f,%.6f,%.6f\n", r.epoch, r.loss, r.kl, r.ce,
                  r.validation.accuracy, r.validation.precision, r.validation.recall, r.validation.f1);
    out += line;
  }
  return out;
}

std::string metrics_csv(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::string out = "variant,accuracy,precision,recall,f1\n";
  char line[256];
  for (const auto& [name, m] : rows) {
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.6f\n", name.c_str(), m.accuracy, m.precision, m.recall,
                  m.f1);
    out += line;
  }
  return out;
}

}  // namespace emif
