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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>

#include "puppetcnn/analysis.hpp"
#include "puppetcnn/checkpoint.hpp"
#include "puppetcnn/complexity.hpp"
#include "puppetcnn/dataset.hpp"
#include "puppetcnn/errors.hpp"
#include "puppetcnn/synthetic.hpp"
#include "puppetcnn/training.hpp"

namespace pcnn::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::size_t parse_count(const std::string& s, const std::string& whole) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ContractViolation("bad number '" + s + "' in list '" + whole + "'");
  }
  return std::stoull(s);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError("cannot write " + path);
  f << text;
}

bool looks_like_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[2] = {0, 0};
  in.read(magic, 2);
  return in && magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6');
}

std::vector<ImageU8> load_images(const fs::path& path) {
  if (fs::is_directory(path)) return load_dataset(path).images;
  if (looks_like_pnm(path)) return {read_pnm(path)};
  return decode_images(read_bytes(path));
}

std::vector<std::size_t> checked_list(const std::string& text, const char* what) {
  auto v = parse_size_list(text);
  if (v.empty()) throw ContractViolation(std::string(what) + " list is empty");
  for (auto x : v) {
    if (x == 0) throw ContractViolation(std::string(what) + " values must be >= 1");
  }
  return v;
}

// Flags shared by the commands that describe a model.
struct ModelFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string mode;
  std::string topology;
  std::optional<std::size_t> cmax;
  std::string channels;
  bool no_depth_adapt = false;
  bool no_param_adapt = false;
  std::vector<std::string> settings;

  void add_to(CLI::App* app, const std::string& out_help) {
    app->add_option("--config", config, "key = value configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "random seed");
    app->add_option("--out", out, out_help);
    app->add_option("--mode", mode, "parameter source: puppet, fixed or shared");
    app->add_option("--topology", topology, "plain or residual");
    auto* c = app->add_option("--cmax", cmax, "widest stage; channels become cmax/8,/4,/2,cmax");
    auto* ch = app->add_option("--channels", channels, "stage widths, e.g. 64,128,256,512");
    c->excludes(ch);
    app->add_flag("--no-depth-adapt", no_depth_adapt, "pin the per-stage depth to pinned_depth");
    app->add_flag("--no-param-adapt", no_param_adapt, "pin p0 and dl to pinned_p0 / pinned_dl");
    app->add_option("--set", settings, "extra key=value setting (repeatable)");
  }

  TrainConfig resolve() const {
    TrainConfig cfg;
    if (!config.empty()) cfg = load_config(config);
    for (const auto& kv : settings) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ContractViolation("--set expects key=value, got '" + kv + "'");
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t") + 1);
        return s;
      };
      apply_setting(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    if (seed) cfg.seed = *seed;
    if (!mode.empty()) cfg.model.source = param_source_from_string(mode);
    if (!topology.empty()) cfg.model.tmpl.topology = topology_from_string(topology);
    if (!channels.empty()) cfg.model.tmpl.channels = checked_list(channels, "channel");
    if (cmax) {
      cfg.model.tmpl.channels = analysis::template_for_cmax(*cmax).channels;
    }
    if (no_depth_adapt) cfg.model.adapt.depth_adapt = false;
    if (no_param_adapt) cfg.model.adapt.param_adapt = false;
    return cfg;
  }
};

void print_complexity(const ImageU8& img, std::ostream& out) {
  const ComplexityScore s = complexity(img);
  const AdaptationParams a = adapt(s.combined);
  out << "E_pixel = " << fixed(s.pixel_entropy, 4) << '\n'
      << "E_freq = " << fixed(s.frequency_entropy, 4) << '\n'
      << "H = " << fixed(s.combined, 6) << '\n'
      << "dl = " << fixed(a.dl, 6) << '\n'
      << "D = " << a.depth << '\n'
      << "p0 = " << fixed(a.p0, 6) << '\n';
}

std::string eval_report(const EvalResult& r) {
  std::ostringstream os;
  os << "samples = " << r.samples << '\n';
  for (std::size_t i = 0; i < r.ks.size(); ++i) {
    os << "top" << r.ks[i] << " = " << fixed(r.topk[i], 6) << '\n';
  }
  os << "mean_depth = " << fixed(r.mean_depth, 4) << '\n'
     << "mean_multadds = " << fixed(r.mean_multadds, 1) << '\n'
     << "mean_latency_s = " << fixed(r.mean_latency_s, 6) << '\n';
  return os.str();
}

std::vector<std::size_t> default_ks(std::size_t classes) {
  std::vector<std::size_t> ks{1};
  if (classes > 1) ks.push_back(std::min<std::size_t>(5, classes));
  return ks;
}

int map_exception(std::ostream& err) {
  try {
    throw;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kFormat;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_count(item, text));
      continue;
    }
    const std::size_t lo = parse_count(item.substr(0, dash), text);
    const std::size_t hi = parse_count(item.substr(dash + 1), text);
    if (lo > hi) throw ContractViolation("empty range '" + item + "'");
    for (std::size_t v = lo; v <= hi; ++v) out.push_back(v);
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Input-adaptive CNN whose kernels are generated by an ODE-driven puppeteer"};
  app.name(args.empty() ? "puppetcnn" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  // train
  ModelFlags train_flags;
  std::string train_data, test_data, log_path;
  std::optional<std::size_t> epochs, batch_size, depth;
  std::optional<double> lr;
  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoint + metrics CSV");
  train_flags.add_to(train_cmd, "checkpoint path");
  train_cmd->add_option("--data", train_data, "training dataset directory (images.bin, labels.bin)");
  train_cmd->add_option("--test-data", test_data, "dataset evaluated once after training");
  train_cmd->add_option("--log", log_path, "metrics CSV path");
  train_cmd->add_option("--epochs", epochs, "number of epochs");
  train_cmd->add_option("--batch-size", batch_size, "samples per optimiser step");
  train_cmd->add_option("--lr", lr, "Adam learning rate");
  train_cmd->add_option("--depth", depth, "pinned depth (fixed mode, --no-depth-adapt)");

  // eval
  std::string eval_ckpt, eval_data, eval_out, eval_ks;
  auto* eval_cmd = app.add_subcommand("eval", "top-k accuracy and cost of a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "dataset directory")->required();
  eval_cmd->add_option("--k", eval_ks, "top-k list (default 1,5 clamped to the class count)");
  eval_cmd->add_option("--out", eval_out, "also write the report here");

  // predict
  std::string pred_ckpt, pred_input;
  std::optional<std::size_t> pred_index;
  auto* pred_cmd = app.add_subcommand("predict", "classify one image");
  pred_cmd->add_option("--checkpoint", pred_ckpt, "checkpoint file")->required();
  pred_cmd->add_option("input", pred_input, "PGM/PPM image, images.bin or dataset directory")
      ->required();
  pred_cmd->add_option("--index", pred_index, "image index inside a dataset (default 0)");

  // complexity
  std::string cx_input, cx_out;
  std::optional<std::size_t> cx_index;
  auto* cx_cmd = app.add_subcommand("complexity", "entropy-based complexity and adaptation");
  cx_cmd->add_option("input", cx_input, "PGM/PPM image, images.bin or dataset directory")
      ->required();
  cx_cmd->add_option("--index", cx_index, "report a single image of a dataset");
  cx_cmd->add_option("--out", cx_out, "CSV path for whole-dataset reports (default stdout)");

  // analyze-params
  std::string ap_cmax = "64,128,256,512,1024,2048,4096", ap_depths = "1,2,4,8", ap_out;
  auto* ap_cmd = app.add_subcommand("analyze-params", "stored vs generated parameters per c_max");
  ap_cmd->add_option("--cmax", ap_cmax, "maximum channel widths")->capture_default_str();
  ap_cmd->add_option("--depth-list", ap_depths, "depths for generated counts")
      ->capture_default_str();
  ap_cmd->add_option("--out", ap_out, "CSV path (default stdout)");

  // sweep-depth
  ModelFlags sweep_flags;
  std::string sweep_depths = "1-50";
  std::size_t image_size = 32;
  auto* sweep_cmd = app.add_subcommand("sweep-depth", "parameters and multiply-adds against depth");
  sweep_flags.add_to(sweep_cmd, "CSV path (default stdout)");
  sweep_cmd->add_option("--depth-list", sweep_depths, "depths, e.g. 1-50 or 1,2,4")
      ->capture_default_str();
  sweep_cmd->add_option("--image-size", image_size, "square input side for multiply-adds")
      ->capture_default_str();

  // make-synthetic
  std::string syn_kind = "stripes", syn_out;
  synthetic::StripeOptions syn;
  std::uint64_t syn_seed = 0;
  auto* syn_cmd = app.add_subcommand("make-synthetic", "write a generated dataset directory");
  syn_cmd->add_option("--kind", syn_kind, "stripes or mixed")
      ->check(CLI::IsMember({"stripes", "mixed"}))
      ->capture_default_str();
  syn_cmd->add_option("--count", syn.count, "number of images")->capture_default_str();
  syn_cmd->add_option("--size", syn.size, "image side")->capture_default_str();
  syn_cmd->add_option("--classes", syn.classes, "orientation classes (stripes)")
      ->capture_default_str();
  syn_cmd->add_option("--noise", syn.noise_stddev, "Gaussian pixel noise (stripes)")
      ->capture_default_str();
  syn_cmd->add_option("--seed", syn_seed, "random seed")->capture_default_str();
  syn_cmd->add_option("--out", syn_out, "output directory")->required();

  std::vector<const char*> argv;
  argv.push_back(args.empty() ? "puppetcnn" : args[0].c_str());
  for (std::size_t i = 1; i < args.size(); ++i) argv.push_back(args[i].c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) {
      TrainConfig cfg = train_flags.resolve();
      if (!train_flags.out.empty()) cfg.checkpoint_path = train_flags.out;
      if (!train_data.empty()) cfg.train_data = train_data;
      if (!test_data.empty()) cfg.test_data = test_data;
      if (!log_path.empty()) cfg.log_path = log_path;
      if (epochs) cfg.epochs = *epochs;
      if (batch_size) cfg.batch_size = *batch_size;
      if (lr) cfg.adam.learning_rate = *lr;
      if (depth) {
        cfg.model.adapt.pinned_depth = *depth;
        cfg.model.adapt.max_depth = std::max(cfg.model.adapt.max_depth, *depth);
      }
      const TrainResult result = train(cfg);
      out << kMetricsHeader << '\n';
      for (const auto& m : result.history) out << format_metrics_row(m) << '\n';
      out << "checkpoint = " << cfg.checkpoint_path << '\n';
      if (!cfg.test_data.empty()) {
        const Dataset test = load_dataset(cfg.test_data);
        const auto ks = default_ks(cfg.model.tmpl.num_classes);
        out << eval_report(evaluate(result.best ? *result.best : result.last, test, ks));
      }
      return kOk;
    }
    if (*eval_cmd) {
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      const Model model = model_from_checkpoint(ckpt);
      const auto ks = eval_ks.empty() ? default_ks(model.tmpl().num_classes)
                                      : checked_list(eval_ks, "k");
      const std::string report = eval_report(evaluate(model, load_dataset(eval_data), ks));
      out << report;
      if (!eval_out.empty()) write_text(eval_out, report, out);
      return kOk;
    }
    if (*pred_cmd) {
      const Model model = model_from_checkpoint(load_checkpoint(pred_ckpt));
      const auto images = load_images(pred_input);
      const std::size_t idx = pred_index.value_or(0);
      if (idx >= images.size()) {
        throw ContractViolation("index " + std::to_string(idx) + " out of range (" +
                                std::to_string(images.size()) + " images)");
      }
      const Prediction p = model.predict(images[idx]);
      out << "label = " << p.label << '\n'
          << "H = " << fixed(p.adaptation.h, 6) << '\n'
          << "D = " << p.adaptation.depth << '\n'
          << "logits =";
      for (std::size_t i = 0; i < p.logits.size(); ++i) {
        out << (i ? "," : " ") << fixed(p.logits[i], 6);
      }
      out << '\n';
      return kOk;
    }
    if (*cx_cmd) {
      const auto images = load_images(cx_input);
      if (images.size() == 1 || cx_index) {
        const std::size_t idx = cx_index.value_or(0);
        if (idx >= images.size()) {
          throw ContractViolation("index " + std::to_string(idx) + " out of range (" +
                                  std::to_string(images.size()) + " images)");
        }
        print_complexity(images[idx], out);
        return kOk;
      }
      std::ostringstream csv;
      csv << "index,E_pixel,E_freq,H,dl,D,p0\n";
      for (std::size_t i = 0; i < images.size(); ++i) {
        const ComplexityScore s = complexity(images[i]);
        const AdaptationParams a = adapt(s.combined);
        csv << i << ',' << fixed(s.pixel_entropy, 6) << ',' << fixed(s.frequency_entropy, 6) << ','
            << fixed(s.combined, 6) << ',' << fixed(a.dl, 6) << ',' << a.depth << ','
            << fixed(a.p0, 6) << '\n';
      }
      write_text(cx_out, csv.str(), out);
      return kOk;
    }
    if (*ap_cmd) {
      const auto cmaxes = checked_list(ap_cmax, "c_max");
      const auto depths = checked_list(ap_depths, "depth");
      write_text(ap_out, analysis::to_csv(analysis::analyze_params(cmaxes, depths)), out);
      return kOk;
    }
    if (*sweep_cmd) {
      const TrainConfig cfg = sweep_flags.resolve();
      const auto depths = checked_list(sweep_depths, "depth");
      const auto rows = analysis::sweep_depth(cfg.model.tmpl, cfg.model.source, depths, image_size);
      write_text(sweep_flags.out, analysis::to_csv(rows), out);
      return kOk;
    }
    if (*syn_cmd) {
      const Dataset ds = syn_kind == "mixed" ? synthetic::mixed_complexity(syn.count, syn.size, syn_seed)
                                             : synthetic::oriented_stripes(syn, syn_seed);
      save_dataset(ds, syn_out);
      out << "wrote " << ds.size() << " images to " << syn_out << '\n';
      return kOk;
    }
  } catch (...) {
    return map_exception(err);
  }
  return kUsage;
}

}  // namespace pcnn::cli
