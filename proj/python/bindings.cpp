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


#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "cli.hpp"
#include "puppetcnn/analysis.hpp"
#include "puppetcnn/checkpoint.hpp"
#include "puppetcnn/complexity.hpp"
#include "puppetcnn/errors.hpp"
#include "puppetcnn/puppet.hpp"
#include "puppetcnn/synthetic.hpp"

namespace py = pybind11;

namespace {

using namespace pcnn;

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, C) uint8 array.
ImageU8 to_image(const U8Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) {
    throw DimensionError("image must have shape (H, W) or (H, W, C)");
  }
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  const auto c = a.ndim() == 3 ? static_cast<std::size_t>(a.shape(2)) : 1;
  return ImageU8(h, w, c, std::vector<std::uint8_t>(a.data(), a.data() + a.size()));
}

py::tuple to_arrays(const Dataset& ds) {
  const std::size_t n = ds.size();
  const std::size_t h = n ? ds.images[0].height : 0, w = n ? ds.images[0].width : 0;
  U8Array images({n, h, w});
  auto* out = images.mutable_data();
  for (const auto& img : ds.images) {
    if (img.height != h || img.width != w || img.channels != 1) {
      throw DimensionError("dataset images differ in shape");
    }
    std::memcpy(out, img.pixels.data(), img.pixels.size());
    out += img.pixels.size();
  }
  U8Array labels(static_cast<py::ssize_t>(n));
  std::memcpy(labels.mutable_data(), ds.labels.data(), n);
  return py::make_tuple(images, labels);
}

ModelConfig make_config(std::vector<std::size_t> channels, std::size_t in_channels,
                        std::size_t num_classes, const std::string& mode,
                        const std::string& topology, std::size_t pinned_depth) {
  ModelConfig cfg;
  cfg.tmpl.channels = std::move(channels);
  cfg.tmpl.in_channels = in_channels;
  cfg.tmpl.num_classes = num_classes;
  cfg.tmpl.topology = topology_from_string(topology);
  cfg.source = param_source_from_string(mode);
  cfg.adapt.pinned_depth = pinned_depth;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_puppetcnn, m) {
  m.doc() = "Complexity-adaptive CNN with ODE-generated kernels";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<ComplexityScore>(m, "Complexity")
      .def_readonly("pixel_entropy", &ComplexityScore::pixel_entropy)
      .def_readonly("frequency_entropy", &ComplexityScore::frequency_entropy)
      .def_readonly("combined", &ComplexityScore::combined);

  py::class_<AdaptationParams>(m, "Adaptation")
      .def_readonly("h", &AdaptationParams::h)
      .def_readonly("dl", &AdaptationParams::dl)
      .def_readonly("depth", &AdaptationParams::depth)
      .def_readonly("p0", &AdaptationParams::p0)
      .def("__repr__", [](const AdaptationParams& a) {
        std::ostringstream os;
        os << "Adaptation(h=" << a.h << ", dl=" << a.dl << ", depth=" << a.depth
           << ", p0=" << a.p0 << ")";
        return os.str();
      });

  py::class_<Prediction>(m, "Prediction")
      .def_readonly("label", &Prediction::label)
      .def_readonly("adaptation", &Prediction::adaptation)
      .def_readonly("logits", &Prediction::logits);

  m.def("pixel_entropy", [](const U8Array& img) { return pixel_entropy(to_image(img)); },
        py::arg("image"));
  m.def("frequency_entropy", [](const U8Array& img) { return frequency_entropy(to_image(img)); },
        py::arg("image"));
  m.def("complexity", [](const U8Array& img) { return complexity(to_image(img)); },
        py::arg("image"));
  m.def("adapt", &adapt, py::arg("h"));

  m.def(
      "analyze_params",
      [](const std::vector<std::size_t>& c_max, const std::vector<std::size_t>& depths) {
        const auto report = analysis::analyze_params(c_max, depths);
        py::list rows;
        for (const auto& r : report.rows) {
          py::dict d;
          d["c_max"] = r.c_max;
          d["stored_params"] = r.stored_params;
          d["stored_mib"] = r.stored_mib();
          d["generated_params"] = r.generated_params_at_depth;
          rows.append(d);
        }
        return rows;
      },
      py::arg("c_max"), py::arg("depths") = std::vector<std::size_t>{1});

  m.def(
      "sweep_depth",
      [](std::vector<std::size_t> channels, const std::string& mode,
         const std::vector<std::size_t>& depths, std::size_t image_size, std::size_t in_channels,
         std::size_t num_classes) {
        const auto cfg = make_config(std::move(channels), in_channels, num_classes, mode, "plain", 1);
        py::list rows;
        for (const auto& r : analysis::sweep_depth(cfg.tmpl, cfg.source, depths, image_size)) {
          py::dict d;
          d["depth"] = r.depth;
          d["stored_params"] = r.stored_params;
          d["generated_params"] = r.generated_params;
          d["multadds"] = r.multadds;
          rows.append(d);
        }
        return rows;
      },
      py::arg("channels"), py::arg("mode"), py::arg("depths"), py::arg("image_size") = 32,
      py::arg("in_channels") = 3, py::arg("num_classes") = 10);

  m.def(
      "stored_param_count",
      [](std::vector<std::size_t> channels, const std::string& mode, std::size_t in_channels,
         std::size_t num_classes, std::size_t depth) {
        return stored_param_count(
            make_config(std::move(channels), in_channels, num_classes, mode, "plain", depth));
      },
      py::arg("channels"), py::arg("mode") = "puppet", py::arg("in_channels") = 3,
      py::arg("num_classes") = 10, py::arg("depth") = 1);

  py::class_<Model>(m, "Model")
      .def(py::init([](std::vector<std::size_t> channels, std::size_t in_channels,
                       std::size_t num_classes, const std::string& mode,
                       const std::string& topology, std::size_t depth, std::uint64_t seed) {
             return Model(make_config(std::move(channels), in_channels, num_classes, mode,
                                      topology, depth),
                          seed);
           }),
           py::arg("channels"), py::arg("in_channels") = 3, py::arg("num_classes") = 10,
           py::arg("mode") = "puppet", py::arg("topology") = "plain", py::arg("depth") = 1,
           py::arg("seed") = 0)
      .def("predict", [](const Model& model, const U8Array& img) { return model.predict(to_image(img)); },
           py::arg("image"))
      .def("adaptation_for",
           [](const Model& model, const U8Array& img) { return model.adaptation_for(to_image(img)); },
           py::arg("image"))
      .def_property_readonly("stored_param_count", &Model::stored_param_count)
      .def_property_readonly("channels", [](const Model& model) { return model.tmpl().channels; })
      .def_property_readonly("num_classes", [](const Model& model) { return model.tmpl().num_classes; })
      .def("save", [](const Model& model, const std::string& path) {
        save_checkpoint(to_checkpoint(model, 0), path);
      }, py::arg("path"));

  m.def("load_model",
        [](const std::string& path) { return model_from_checkpoint(load_checkpoint(path)); },
        py::arg("path"));

  m.def(
      "oriented_stripes",
      [](std::size_t count, std::size_t size, std::size_t classes, std::uint64_t seed) {
        synthetic::StripeOptions opts;
        opts.count = count;
        opts.size = size;
        opts.classes = classes;
        return to_arrays(synthetic::oriented_stripes(opts, seed));
      },
      py::arg("count"), py::arg("size") = 16, py::arg("classes") = 4, py::arg("seed") = 0);
  m.def(
      "mixed_complexity",
      [](std::size_t count, std::size_t size, std::uint64_t seed) {
        return to_arrays(synthetic::mixed_complexity(count, size, seed));
      },
      py::arg("count"), py::arg("size") = 16, py::arg("seed") = 0);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "puppetcnn");
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return std::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool; returns (exit_code, stdout, stderr).");
}
