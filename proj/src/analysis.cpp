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

#include "puppetcnn/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "puppetcnn/errors.hpp"

namespace pcnn::analysis {

PuppetTemplate template_for_cmax(std::size_t c_max, std::size_t num_classes,
                                 std::size_t in_channels) {
  if (c_max == 0) throw ContractViolation("c_max must be >= 1");
  PuppetTemplate t;
  t.channels.clear();
  for (std::size_t div : {8, 4, 2, 1}) {
    const std::size_t c = std::max<std::size_t>(1, c_max / div);
    if (t.channels.empty() || c > t.channels.back()) t.channels.push_back(c);
  }
  t.num_classes = std::min(num_classes, c_max);
  t.in_channels = in_channels;
  return t;
}

ParamReport analyze_params(std::span<const std::size_t> c_max_list,
                           std::span<const std::size_t> depths) {
  ParamReport report;
  report.depths.assign(depths.begin(), depths.end());
  std::sort(report.depths.begin(), report.depths.end());
  report.depths.erase(std::unique(report.depths.begin(), report.depths.end()), report.depths.end());
  for (auto d : report.depths) {
    if (d < 1) throw ContractViolation("depths must be >= 1");
  }
  std::vector<std::size_t> cmaxes(c_max_list.begin(), c_max_list.end());
  std::sort(cmaxes.begin(), cmaxes.end());
  cmaxes.erase(std::unique(cmaxes.begin(), cmaxes.end()), cmaxes.end());

  for (auto c : cmaxes) {
    ModelConfig cfg;
    cfg.tmpl = template_for_cmax(c);
    cfg.source = ParamSource::puppet;
    ParamRow row;
    row.c_max = c;
    row.stored_params = stored_param_count(cfg);
    row.stored_bytes_f32 = row.stored_params * static_cast<std::size_t>(kBytesPerParam);
    for (auto d : report.depths) {
      row.generated_params_at_depth[d] = generated_param_count(plan_layers(cfg.tmpl, d));
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string to_csv(const ParamReport& report) {
  std::ostringstream os;
  os << "c_max,stored_params,stored_bytes_f32,stored_mib";
  for (auto d : report.depths) os << ",generated_d" << d;
  os << '\n';
  for (const auto& row : report.rows) {
    char mib[64];
    std::snprintf(mib, sizeof mib, "%.6f", row.stored_mib());
    os << row.c_max << ',' << row.stored_params << ',' << row.stored_bytes_f32 << ',' << mib;
    for (auto d : report.depths) os << ',' << row.generated_params_at_depth.at(d);
    os << '\n';
  }
  return os.str();
}

std::vector<SweepRow> sweep_depth(const PuppetTemplate& tmpl, ParamSource source,
                                  std::span<const std::size_t> depths, std::size_t image_size) {
  tmpl.validate();
  if (image_size == 0) throw ContractViolation("image size must be >= 1");
  std::vector<std::size_t> ds(depths.begin(), depths.end());
  std::sort(ds.begin(), ds.end());
  ds.erase(std::unique(ds.begin(), ds.end()), ds.end());
  std::vector<SweepRow> rows;
  for (auto d : ds) {
    if (d < 1) throw ContractViolation("depths must be >= 1");
    ModelConfig cfg;
    cfg.tmpl = tmpl;
    cfg.source = source;
    cfg.adapt.pinned_depth = d;
    cfg.adapt.max_depth = std::max(cfg.adapt.max_depth, d);
    const PlannedNetwork plan = plan_layers(tmpl, d);
    rows.push_back({d, stored_param_count(cfg), generated_param_count(plan),
                    plan_multadds(plan, image_size, image_size)});
  }
  return rows;
}

std::string to_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << "depth,stored_params,generated_params,multadds\n";
  for (const auto& r : rows) {
    os << r.depth << ',' << r.stored_params << ',' << r.generated_params << ',' << r.multadds
       << '\n';
  }
  return os.str();
}

}  // namespace pcnn::analysis
