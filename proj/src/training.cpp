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

#include "puppetcnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "puppetcnn/errors.hpp"

namespace pcnn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long n = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    n = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw ContractViolation("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(n);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) {
    throw ContractViolation("config key '" + key + "' expects a number, got '" + v + "'");
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ContractViolation("config key '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_count(key, trim(item)));
  if (out.empty()) throw ContractViolation("config key '" + key + "' expects a list");
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ContractViolation("batch_size must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ContractViolation("learning_rate must be > 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw ContractViolation("val_fraction must lie in [0, 1)");
  }
  model.tmpl.validate();
}

void apply_setting(TrainConfig& cfg, const std::string& key, const std::string& value) {
  auto& m = cfg.model;
  if (key == "epochs") cfg.epochs = parse_count(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_count(key, value);
  else if (key == "learning_rate") cfg.adam.learning_rate = parse_real(key, value);
  else if (key == "beta1") cfg.adam.beta1 = parse_real(key, value);
  else if (key == "beta2") cfg.adam.beta2 = parse_real(key, value);
  else if (key == "adam_eps") cfg.adam.eps = parse_real(key, value);
  else if (key == "seed") cfg.seed = parse_count(key, value);
  else if (key == "channels") m.tmpl.channels = parse_list(key, value);
  else if (key == "kernel") m.tmpl.kernel = parse_count(key, value);
  else if (key == "num_classes") m.tmpl.num_classes = parse_count(key, value);
  else if (key == "in_channels") m.tmpl.in_channels = parse_count(key, value);
  else if (key == "topology") m.tmpl.topology = topology_from_string(value);
  else if (key == "mode") m.source = param_source_from_string(value);
  else if (key == "depth_adapt") m.adapt.depth_adapt = parse_bool(key, value);
  else if (key == "param_adapt") m.adapt.param_adapt = parse_bool(key, value);
  else if (key == "pinned_depth") m.adapt.pinned_depth = parse_count(key, value);
  else if (key == "pinned_p0") m.adapt.pinned_p0 = parse_real(key, value);
  else if (key == "pinned_dl") m.adapt.pinned_dl = parse_real(key, value);
  else if (key == "max_depth") m.adapt.max_depth = parse_count(key, value);
  else if (key == "bn_momentum") m.norm.momentum = parse_real(key, value);
  else if (key == "bn_eps") m.norm.eps = parse_real(key, value);
  else if (key == "bn_scope") m.norm.scope = norm_scope_from_string(value);
  else if (key == "train_data") cfg.train_data = value;
  else if (key == "test_data") cfg.test_data = value;
  else if (key == "val_fraction") cfg.val_fraction = parse_real(key, value);
  else if (key == "checkpoint") cfg.checkpoint_path = value;
  else if (key == "log") cfg.log_path = value;
  else throw ContractViolation("unknown config key '" + key + "'");
}

TrainConfig parse_config(const std::string& text, TrainConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ContractViolation("config line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ContractViolation& e) {
      throw ContractViolation("config line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string format_metrics_row(const EpochMetrics& m) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.4f,%.1f", m.epoch, m.train_loss, m.val_top1,
                m.val_top5, m.mean_depth, m.mean_multadds);
  return buf;
}

double EvalResult::top(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return topk[i];
  }
  throw ContractViolation("top-" + std::to_string(k) + " was not evaluated");
}

bool in_top_k(std::span<const double> logits, std::size_t label, std::size_t k) {
  std::size_t rank = 0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    if (logits[j] > logits[label] || (j < label && logits[j] == logits[label])) ++rank;
  }
  return rank < k;
}

EvalResult evaluate(const Model& model, const Dataset& ds, std::span<const std::size_t> ks) {
  const std::size_t classes = model.tmpl().num_classes;
  for (auto k : ks) {
    if (k == 0 || k > classes) {
      throw ContractViolation("top-" + std::to_string(k) + " needs at least " + std::to_string(k) +
                              " classes, model has " + std::to_string(classes));
    }
  }
  EvalResult r;
  r.ks.assign(ks.begin(), ks.end());
  r.samples = ds.size();
  std::vector<std::size_t> hits(ks.size(), 0);
  double multadds = 0.0, depth = 0.0, seconds = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] >= classes) {
      throw ContractViolation("label " + std::to_string(ds.labels[i]) + " exceeds class count");
    }
    ForwardStats stats;
    AdaptationParams used;
    const auto t0 = std::chrono::steady_clock::now();
    const Tensor z = model.logits(ds.images[i], &stats, &used);
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t j = 0; j < ks.size(); ++j) hits[j] += in_top_k(z.data(), ds.labels[i], ks[j]);
    multadds += static_cast<double>(stats.multadds);
    depth += static_cast<double>(used.depth);
  }
  const double n = ds.empty() ? 1.0 : static_cast<double>(ds.size());
  for (auto h : hits) r.topk.push_back(static_cast<double>(h) / n);
  r.mean_multadds = multadds / n;
  r.mean_depth = depth / n;
  r.mean_latency_s = seconds / n;
  return r;
}

EvalResult evaluate(const Checkpoint& ckpt, const Dataset& ds, std::span<const std::size_t> ks) {
  return evaluate(model_from_checkpoint(ckpt), ds, ks);
}

Trainer::Trainer(const TrainConfig& config)
    : config_(config), model_(config.model, config.seed), rng_(config.seed) {
  config_.validate();
}

double Trainer::train_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  const auto params = model_.parameters();
  std::vector<std::vector<double>> grads;
  for (auto* p : params) grads.emplace_back(p->size(), 0.0);
  const std::size_t classes = model_.tmpl().num_classes;

  std::vector<const ImageU8*> imgs;
  for (auto idx : indices) {
    if (ds.labels[idx] >= classes) {
      throw ContractViolation("label " + std::to_string(ds.labels[idx]) + " exceeds class count");
    }
    imgs.push_back(&ds.images[idx]);
  }
  const std::vector<Tensor> z = model_.train_logits(imgs);
  const double inv = 1.0 / static_cast<double>(indices.size());
  Tensor total;
  double loss_sum = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const Tensor loss = cross_entropy(z[i], ds.labels[indices[i]]);
    if (!std::isfinite(loss.item())) {
      throw NumericError("non-finite loss at optimiser step " + std::to_string(adam_.t + 1) +
                         " (sample " + std::to_string(indices[i]) + ")");
    }
    loss_sum += loss.item();
    total = total.defined() ? ops::add(total, loss) : loss;
  }
  const Gradients g = backward(ops::scale(total, inv));
  for (std::size_t p = 0; p < params.size(); ++p) {
    grads[p] = g.of(*params[p]);
    for (auto v : grads[p]) {
      if (!std::isfinite(v)) throw NumericError("non-finite gradient");
    }
  }
  adam_step(params, grads, adam_, config_.adam);
  return loss_sum * inv;
}

double Trainer::train_epoch(const Dataset& ds) {
  if (ds.empty()) return 0.0;
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);
  double total = 0.0;
  for (std::size_t b = 0; b < order.size(); b += config_.batch_size) {
    const std::size_t e = std::min(order.size(), b + config_.batch_size);
    const std::span<const std::size_t> batch(order.data() + b, e - b);
    total += train_batch(ds, batch) * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(ds.size());
}

Model Trainer::snapshot() const { return model_from_checkpoint(to_checkpoint(model_, step())); }

TrainResult fit(const TrainConfig& config, const Dataset& train, const Dataset& val,
                std::ostream* csv) {
  Trainer trainer(config);
  TrainResult result;
  if (csv) *csv << kMetricsHeader << '\n';
  const std::size_t classes = config.model.tmpl.num_classes;
  const std::vector<std::size_t> ks{1, std::min<std::size_t>(5, classes)};
  double best = -1.0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.train_loss = trainer.train_epoch(train);
    const Checkpoint ckpt = to_checkpoint(trainer.model(), trainer.step());
    if (!val.empty()) {
      const EvalResult r = evaluate(model_from_checkpoint(ckpt), val, ks);
      m.val_top1 = r.topk[0];
      m.val_top5 = r.topk[1];
      m.mean_depth = r.mean_depth;
      m.mean_multadds = r.mean_multadds;
    }
    if (val.empty() || m.val_top1 > best) {
      best = m.val_top1;
      result.best = ckpt;
    }
    result.last = ckpt;
    result.history.push_back(m);
    if (csv) *csv << format_metrics_row(m) << '\n' << std::flush;
  }
  if (config.epochs == 0) result.last = to_checkpoint(trainer.model(), trainer.step());
  return result;
}

TrainResult train(const TrainConfig& config) {
  config.validate();
  if (config.train_data.empty()) throw ContractViolation("train_data is not set");
  const Dataset all = load_dataset(config.train_data);
  auto [train_set, val_set] = split_stratified(all, config.val_fraction, config.seed);
  std::ofstream log(config.log_path, std::ios::trunc);
  if (!log) throw FormatError("cannot write metrics log " + config.log_path);
  TrainResult result = fit(config, train_set, val_set, &log);
  save_checkpoint(result.best ? *result.best : result.last, config.checkpoint_path);
  return result;
}

}  // namespace pcnn
