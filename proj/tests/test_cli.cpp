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


#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "puppetcnn/complexity.hpp"
#include "puppetcnn/dataset.hpp"
#include "puppetcnn/errors.hpp"

namespace pcnn {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "puppetcnn");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// "key = value" lines of a report.
std::map<std::string, std::string> fields(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    const auto eq = l.find(" = ");
    if (eq != std::string::npos) m[l.substr(0, eq)] = l.substr(eq + 3);
  }
  return m;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("puppetcnn_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(ParseSizeListTest, ListsAndRanges) {
  EXPECT_EQ(cli::parse_size_list("1,2,8"), (std::vector<std::size_t>{1, 2, 8}));
  EXPECT_EQ(cli::parse_size_list("1-4, 9"), (std::vector<std::size_t>{1, 2, 3, 4, 9}));
  EXPECT_EQ(cli::parse_size_list("1-50").size(), 50u);
  EXPECT_THROW(cli::parse_size_list("5-2"), ContractViolation);
  EXPECT_THROW(cli::parse_size_list("x"), ContractViolation);
}

TEST(CliTest, HelpAndUsageErrors) {
  EXPECT_EQ(run_cli({"--help"}).code, cli::kOk);
  EXPECT_NE(run_cli({"--help"}).out.find("analyze-params"), std::string::npos);
  EXPECT_EQ(run_cli({}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"analyze-params", "--bogus"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"sweep-depth", "--set", "nonsense=1"}).code, cli::kUsage);
  EXPECT_EQ(run_cli({"sweep-depth", "--mode", "plain"}).code, cli::kUsage);
}

TEST(CliTest, ComplexityOfUniformImage) {
  const auto dir = temp_dir("cx");
  std::vector<std::uint8_t> px(256);
  for (std::size_t i = 0; i < 256; ++i) px[i] = static_cast<std::uint8_t>(i);
  write_pnm(ImageU8(16, 16, 1, px), dir / "u.pgm");
  const auto r = run_cli({"complexity", (dir / "u.pgm").string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  auto f = fields(r.out);
  EXPECT_EQ(f["E_pixel"], "8.0000");
  const double h = std::stod(f["H"]);
  EXPECT_NEAR(std::stod(f["dl"]), std::tanh(1.0 / h), 1e-6);
  EXPECT_EQ(std::stoul(f["D"]), adapt(h).depth);
}

TEST(CliTest, ComplexityOfConstantImageIsDepthOne) {
  const auto dir = temp_dir("cx_const");
  write_pnm(ImageU8(8, 8, 1, std::vector<std::uint8_t>(64, 99)), dir / "c.pgm");
  const auto r = run_cli({"complexity", (dir / "c.pgm").string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(fields(r.out)["D"], "1");
  EXPECT_EQ(fields(r.out)["E_pixel"], "0.0000");
}

TEST(CliTest, ComplexityOverDatasetIsCsv) {
  const auto dir = temp_dir("cx_ds");
  ASSERT_EQ(run_cli({"make-synthetic", "--kind", "mixed", "--count", "6", "--size", "8", "--out",
                     (dir / "mixed").string()})
                .code,
            cli::kOk);
  const auto r = run_cli({"complexity", (dir / "mixed").string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0], "index,E_pixel,E_freq,H,dl,D,p0");
  const auto single = run_cli({"complexity", (dir / "mixed").string(), "--index", "2"});
  EXPECT_EQ(single.code, cli::kOk);
  EXPECT_EQ(run_cli({"complexity", (dir / "mixed").string(), "--index", "9"}).code, cli::kUsage);
}

TEST(CliTest, MissingOrCorruptInputs) {
  const auto dir = temp_dir("bad");
  EXPECT_NE(run_cli({"complexity", (dir / "nope.pgm").string()}).code, cli::kOk);
  {
    std::ofstream f(dir / "bad.pgm", std::ios::binary);
    f << "P5 4 4 255\n";
  }
  EXPECT_EQ(run_cli({"complexity", (dir / "bad.pgm").string()}).code, cli::kFormat);
  {
    std::ofstream f(dir / "ckpt.bin", std::ios::binary);
    f << "NOTACKPT";
  }
  EXPECT_EQ(run_cli({"predict", "--checkpoint", (dir / "ckpt.bin").string(),
                     (dir / "bad.pgm").string()})
                .code,
            cli::kFormat);
}

TEST(CliTest, AnalyzeParams) {
  const auto r = run_cli({"analyze-params", "--cmax", "64,512", "--depth-list", "1"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], "c_max,stored_params,stored_bytes_f32,stored_mib,generated_d1");
  EXPECT_EQ(rows[1].substr(0, 8), "64,4864,");
  EXPECT_EQ(rows[2].substr(0, 11), "512,268288,");
}

TEST(CliTest, SweepDepthFixedExceedsPuppet) {
  const std::vector<std::string> common{"--channels", "8,16,32", "--set", "num_classes=4",
                                        "--depth-list", "1-5"};
  auto puppet_args = common, fixed_args = common;
  puppet_args.insert(puppet_args.begin(), "sweep-depth");
  fixed_args.insert(fixed_args.begin(), {"sweep-depth", "--mode", "fixed"});
  const auto p = lines(run_cli(puppet_args).out);
  const auto f = lines(run_cli(fixed_args).out);
  ASSERT_EQ(p.size(), 6u);
  ASSERT_EQ(f.size(), 6u);
  const auto stored = [](const std::string& row) {
    const auto a = row.find(',');
    return std::stoul(row.substr(a + 1, row.find(',', a + 1) - a - 1));
  };
  for (std::size_t i = 1; i < 6; ++i) {
    EXPECT_EQ(stored(p[i]), stored(p[1]));
    EXPECT_GT(stored(f[i]), stored(p[i]));
  }
}

TEST(CliTest, TrainEvalPredictRoundTrip) {
  const auto dir = temp_dir("train");
  const auto make = [&](const std::string& name, const std::string& count, const std::string& seed) {
    return run_cli({"make-synthetic", "--kind", "stripes", "--count", count, "--size", "8",
                    "--seed", seed, "--out", (dir / name).string()})
        .code;
  };
  ASSERT_EQ(make("train", "24", "1"), cli::kOk);
  ASSERT_EQ(make("test", "8", "2"), cli::kOk);
  const auto ckpt = (dir / "model.bin").string();
  const auto tr = run_cli({"train", "--data", (dir / "train").string(), "--test-data",
                           (dir / "test").string(), "--channels", "4,8", "--set", "in_channels=1",
                           "--set", "num_classes=4", "--epochs", "2", "--batch-size", "8",
                           "--seed", "5", "--out", ckpt, "--log", (dir / "log.csv").string()});
  ASSERT_EQ(tr.code, cli::kOk) << tr.err;
  EXPECT_TRUE(fs::exists(ckpt));
  const auto trained = fields(tr.out);

  const auto ev = run_cli({"eval", "--checkpoint", ckpt, "--data", (dir / "test").string()});
  ASSERT_EQ(ev.code, cli::kOk) << ev.err;
  const auto evaluated = fields(ev.out);
  EXPECT_EQ(evaluated.at("top1"), trained.at("top1"));
  EXPECT_EQ(evaluated.at("top4"), "1.000000");
  EXPECT_EQ(evaluated.at("samples"), "8");

  const auto p1 = run_cli({"predict", "--checkpoint", ckpt, (dir / "test").string(), "--index", "3"});
  const auto p2 = run_cli({"predict", "--checkpoint", ckpt, (dir / "test").string(), "--index", "3"});
  ASSERT_EQ(p1.code, cli::kOk) << p1.err;
  EXPECT_EQ(p1.out, p2.out);
  EXPECT_EQ(fields(p1.out).count("logits"), 1u);
}

}  // namespace
}  // namespace pcnn
