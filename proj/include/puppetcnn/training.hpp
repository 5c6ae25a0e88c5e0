// Copyright 2026 The puppetcnn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "puppetcnn/checkpoint.hpp"
#include "puppetcnn/dataset.hpp"
#include "puppetcnn/optim.hpp"
#include "puppetcnn/puppet.hpp"

namespace pcnn {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  AdamConfig adam;
  std::uint64_t seed = 0;
  ModelConfig model;
  std::string train_data;
  std::string test_data;
  double val_fraction = 0.2;
  std::string checkpoint_path = "checkpoint.bin";
  std::string log_path = "metrics.csv";

  void validate() const;
};

/// Applies one `key = value` setting; throws ContractViolation for unknown
/// keys or unparsable values.
void apply_setting(TrainConfig& cfg, const std::string& key, const std::string& value);

/// UTF-8 lines of `key = value`; '#' starts a comment.
TrainConfig parse_config(const std::string& text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_top1 = 0.0;
  double val_top5 = 0.0;
  double mean_depth = 0.0;
  double mean_multadds = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,train_loss,val_top1,val_top5,mean_depth,mean_multadds";
std::string format_metrics_row(const EpochMetrics& m);

struct EvalResult {
  std::vector<std::size_t> ks;
  std::vector<double> topk;  // fraction in [0, 1], aligned with ks
  std::size_t samples = 0;
  double mean_multadds = 0.0;
  double mean_depth = 0.0;
  double mean_latency_s = 0.0;  // informational only

  double top(std::size_t k) const;
};

/// True when `label` is among the k largest logits, ties to the lower index.
bool in_top_k(std::span<const double> logits, std::size_t label, std::size_t k);

/// Inference-mode accuracy and cost. Throws ContractViolation when a k
/// exceeds the class count.
EvalResult evaluate(const Model& model, const Dataset& ds, std::span<const std::size_t> ks);
EvalResult evaluate(const Checkpoint& ckpt, const Dataset& ds, std::span<const std::size_t> ks);

/// Per-sample forward/backward with batch-mean gradient accumulation and one
/// Adam step per batch. Single-threaded and deterministic given the seed.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& config);

  Model& model() { return model_; }
  const Model& model() const { return model_; }
  std::size_t step() const { return adam_.t; }

  /// Mean loss over the batch. Throws NumericError on a non-finite loss.
  double train_batch(const Dataset& ds, std::span<const std::size_t> indices);

  /// One shuffled pass; returns mean training loss (0 for an empty set).
  double train_epoch(const Dataset& ds);

  /// Model exactly as a checkpoint would restore it.
  Model snapshot() const;

 private:
  TrainConfig config_;
  Model model_;
  AdamState adam_;
  std::mt19937_64 rng_;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  std::optional<Checkpoint> best;  // best validation top-1 (latest when no val set)
  Checkpoint last;
};

/// Trains on in-memory data. When `csv` is given, the header and one row per
/// epoch are written to it.
TrainResult fit(const TrainConfig& config, const Dataset& train, const Dataset& val,
                std::ostream* csv = nullptr);

/// Loads `train_data`, splits off the validation set, trains, writes the
/// metrics log and the best checkpoint.
TrainResult train(const TrainConfig& config);

}  // namespace pcnn
