#pragma once

#include "emif/corpus.hpp"
#include "emif/metrics.hpp"
#include "emif/model.hpp"
#include "emif/optimizer.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace emif {

struct TrainConfig {
  std::uint64_t seed = 7;
  std::size_t epochs = 60;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta = 1.0;
  Variant variant = Variant::Full;
  ModelDims dims;  // vocab is filled in from the vocabulary
  std::size_t patience = 10;
  TruncationLimits limits;
  std::size_t threads = 1;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::size_t min_freq = 1;
  std::size_t max_vocab = 50000;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double kl = 0.0;
  double ce = 0.0;
  MetricsReport validation;
};

struct TrainResult {
  ModelParams params;  // from the best-validation-F1 epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

/// Mini-batch optimisation of the mean total loss. Validation F1 drives
/// best-epoch selection (ties keep the earliest epoch) and early stopping;
/// an empty validation set falls back to the training set.
TrainResult train(ModelParams params, const std::vector<IndexedExample>& train_set,
                  const std::vector<IndexedExample>& val_set, const TrainConfig& config);

MetricsReport evaluate(const ModelParams& params, const std::vector<IndexedExample>& data, Variant variant,
                       std::size_t threads = 1);

/// Splits, builds the vocabulary on the training split and indexes all three
/// splits. Split order comes from the "split" sub-seed of config.seed.
struct PreparedData {
  Vocabulary vocab;
  std::array<Dataset, 3> splits;
  std::array<std::vector<IndexedExample>, 3> indexed;

  const std::vector<IndexedExample>& train() const { return indexed[0]; }
  const std::vector<IndexedExample>& val() const { return indexed[1]; }
  const std::vector<IndexedExample>& test() const { return indexed[2]; }
};

PreparedData prepare_data(const Dataset& dataset, const TrainConfig& config);

/// Fresh parameters from the "init" sub-seed.
ModelParams initial_params(const Vocabulary& vocab, const TrainConfig& config);

struct AblationRow {
  Variant variant;
  MetricsReport metrics;
  std::size_t best_epoch = 0;
};

/// Retrains every variant from identical initialisation and evaluates it on
/// the test split.
std::vector<AblationRow> run_ablation_suite(const PreparedData& data, const TrainConfig& config);

std::string history_csv(const std::vector<EpochRecord>& history);
std::string metrics_csv(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace emif
