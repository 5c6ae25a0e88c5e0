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

#include "puppetcnn/checkpoint.hpp"

#include <cmath>
#include <limits>

#include "binary_io.hpp"
#include "puppetcnn/errors.hpp"

namespace pcnn {

namespace {

constexpr std::string_view kMagic = "PUPCKPT1";
constexpr std::uint8_t kFloat32 = 0;

NamedArray make_array(std::string name, const Shape& shape, std::span<const double> values) {
  NamedArray a;
  a.name = std::move(name);
  for (auto e : shape) a.shape.push_back(static_cast<std::uint32_t>(e));
  a.values.reserve(values.size());
  for (double v : values) a.values.push_back(static_cast<float>(v));
  return a;
}

NamedArray make_vector(std::string name, const std::vector<double>& values) {
  return make_array(std::move(name), {values.size()}, values);
}

std::size_t to_count(float v, const std::string& what) {
  if (!(v >= 0.0f) || v != std::floor(v)) throw FormatError("bad " + what + " in checkpoint");
  return static_cast<std::size_t>(v);
}

std::string bn_name(std::size_t stage, const char* kind) {
  return "bn.stage" + std::to_string(stage) + "." + kind;
}

}  // namespace

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const NamedArray& Checkpoint::at(const std::string& name) const {
  if (const auto* a = find(name)) return *a;
  throw FormatError("checkpoint has no array '" + name + "'");
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.raw(kMagic);
  w.u32(static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    if (a.name.size() > std::numeric_limits<std::uint16_t>::max() || a.shape.size() > 255) {
      throw ContractViolation("array '" + a.name + "' cannot be encoded");
    }
    std::size_t n = 1;
    for (auto e : a.shape) n *= e;
    if (n != a.values.size()) throw DimensionError("array '" + a.name + "' shape/value mismatch");
    w.u16(static_cast<std::uint16_t>(a.name.size()));
    w.raw(a.name);
    w.u8(kFloat32);
    w.u8(static_cast<std::uint8_t>(a.shape.size()));
    for (auto e : a.shape) w.u32(e);
    for (float v : a.values) w.f32(v);
  }
  return w.buffer();
}

Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  r.expect_magic(kMagic);
  const std::uint32_t count = r.u32("array count");
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    const std::uint16_t len = r.u16("name length");
    const auto name = r.bytes(len, "name");
    a.name.assign(name.begin(), name.end());
    const std::size_t dtype_at = r.offset();
    if (r.u8("dtype") != kFloat32) throw FormatError("unsupported dtype for '" + a.name + "'", dtype_at);
    const std::uint8_t ndim = r.u8("ndim");
    std::size_t n = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      a.shape.push_back(r.u32("extent"));
      n *= a.shape.back();
    }
    if (n > r.remaining() / 4) {
      throw FormatError("truncated payload for '" + a.name + "': need " + std::to_string(4 * n) +
                            " bytes, " + std::to_string(r.remaining()) + " left",
                        r.offset());
    }
    a.values.reserve(n);
    for (std::size_t k = 0; k < n; ++k) a.values.push_back(r.f32("payload"));
    ckpt.arrays.push_back(std::move(a));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last array", r.offset());
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(io::read_file(path));
}

Checkpoint to_checkpoint(const Model& model, std::size_t step) {
  const ModelConfig& cfg = model.config();
  Checkpoint ckpt;
  std::vector<double> channels(cfg.tmpl.channels.begin(), cfg.tmpl.channels.end());
  ckpt.arrays.push_back(make_vector("meta.channels", channels));
  ckpt.arrays.push_back(make_vector(
      "meta.template", {double(cfg.tmpl.kernel), double(cfg.tmpl.num_classes),
                        double(cfg.tmpl.in_channels), double(static_cast<int>(cfg.tmpl.topology))}));
  ckpt.arrays.push_back(make_vector("meta.mode", {double(static_cast<int>(cfg.source))}));
  const auto& a = cfg.adapt;
  ckpt.arrays.push_back(make_vector(
      "meta.adapt", {a.depth_adapt ? 1.0 : 0.0, a.param_adapt ? 1.0 : 0.0, double(a.pinned_depth),
                     a.pinned_p0, a.pinned_dl, double(a.max_depth)}));
  ckpt.arrays.push_back(make_vector("meta.norm", {cfg.norm.momentum, cfg.norm.eps,
                                                   static_cast<double>(cfg.norm.scope)}));
  ckpt.arrays.push_back(make_vector("meta.step", {double(step)}));

  for (const auto& [name, t] : model.named_parameters()) {
    ckpt.arrays.push_back(make_array(name, t->shape(), t->data()));
  }
  const BnState& bn = model.bn();
  for (std::size_t s = 0; s < bn.stages(); ++s) {
    const std::size_t c = cfg.tmpl.channels[s];
    std::vector<double> mean, var;
    for (std::size_t l = 0; l < bn.max_depth(); ++l) {
      const auto& st = bn.at(s, l);
      mean.insert(mean.end(), st.mean.begin(), st.mean.end());
      var.insert(var.end(), st.var.begin(), st.var.end());
    }
    ckpt.arrays.push_back(make_array(bn_name(s, "mean"), {bn.max_depth(), c}, mean));
    ckpt.arrays.push_back(make_array(bn_name(s, "var"), {bn.max_depth(), c}, var));
  }
  return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt, std::size_t* step) {
  ModelConfig cfg;
  cfg.tmpl.channels.clear();
  for (float v : ckpt.at("meta.channels").values) {
    cfg.tmpl.channels.push_back(to_count(v, "channel count"));
  }
  const auto& t = ckpt.at("meta.template").values;
  if (t.size() != 4) throw FormatError("meta.template must hold 4 values");
  cfg.tmpl.kernel = to_count(t[0], "kernel");
  cfg.tmpl.num_classes = to_count(t[1], "class count");
  cfg.tmpl.in_channels = to_count(t[2], "input channels");
  const std::size_t topo = to_count(t[3], "topology");
  if (topo > 1) throw FormatError("bad topology in checkpoint");
  cfg.tmpl.topology = static_cast<Topology>(topo);

  const auto& m = ckpt.at("meta.mode").values;
  if (m.size() != 1 || to_count(m[0], "mode") > 2) throw FormatError("bad meta.mode");
  cfg.source = static_cast<ParamSource>(to_count(m[0], "mode"));

  const auto& a = ckpt.at("meta.adapt").values;
  if (a.size() != 6) throw FormatError("meta.adapt must hold 6 values");
  cfg.adapt.depth_adapt = a[0] != 0.0f;
  cfg.adapt.param_adapt = a[1] != 0.0f;
  cfg.adapt.pinned_depth = to_count(a[2], "pinned depth");
  cfg.adapt.pinned_p0 = a[3];
  cfg.adapt.pinned_dl = a[4];
  cfg.adapt.max_depth = to_count(a[5], "max depth");

  const auto& n = ckpt.at("meta.norm").values;
  if (n.size() != 3 || (n[2] != 0.0 && n[2] != 1.0)) {
    throw FormatError("meta.norm must hold [momentum, eps, scope]");
  }
  cfg.norm.momentum = n[0];
  cfg.norm.eps = n[1];
  cfg.norm.scope = n[2] == 0.0 ? NormScope::batch : NormScope::sample;
  if (step) {
    const auto& s = ckpt.at("meta.step").values;
    if (s.size() != 1) throw FormatError("meta.step must hold 1 value");
    *step = to_count(s[0], "step");
  }

  Model model;
  try {
    model = Model(cfg, 0);
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("inconsistent checkpoint metadata: ") + e.what());
  }
  const auto names = model.named_parameters();
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const NamedArray& arr = ckpt.at(names[i].first);
    if (arr.values.size() != params[i]->size()) {
      throw FormatError("array '" + arr.name + "' has " + std::to_string(arr.values.size()) +
                        " values, model expects " + std::to_string(params[i]->size()));
    }
    *params[i] = Tensor::parameter(params[i]->shape(),
                                   std::vector<double>(arr.values.begin(), arr.values.end()));
  }
  BnState& bn = model.bn();
  for (std::size_t s = 0; s < bn.stages(); ++s) {
    const std::size_t c = cfg.tmpl.channels[s];
    const auto& mean = ckpt.at(bn_name(s, "mean")).values;
    const auto& var = ckpt.at(bn_name(s, "var")).values;
    if (mean.size() != bn.max_depth() * c || var.size() != mean.size()) {
      throw FormatError("running statistics for stage " + std::to_string(s) + " have wrong size");
    }
    for (std::size_t l = 0; l < bn.max_depth(); ++l) {
      auto& st = bn.at(s, l);
      for (std::size_t k = 0; k < c; ++k) {
        st.mean[k] = mean[l * c + k];
        st.var[k] = var[l * c + k];
      }
    }
  }
  return model;
}

}  // namespace pcnn
