# Copyright 2026 The puppetcnn Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Python bindings for the puppetcnn library."""

from puppetcnn._puppetcnn import (
    Adaptation,
    Complexity,
    ContractViolation,
    DimensionError,
    FormatError,
    Model,
    NumericError,
    Prediction,
    adapt,
    analyze_params,
    complexity,
    frequency_entropy,
    load_model,
    oriented_stripes,
    mixed_complexity,
    pixel_entropy,
    run_cli,
    stored_param_count,
    sweep_depth,
)

__all__ = [
    "Adaptation",
    "Complexity",
    "ContractViolation",
    "DimensionError",
    "FormatError",
    "Model",
    "NumericError",
    "Prediction",
    "adapt",
    "analyze_params",
    "complexity",
    "frequency_entropy",
    "load_model",
    "oriented_stripes",
    "mixed_complexity",
    "pixel_entropy",
    "run_cli",
    "stored_param_count",
    "sweep_depth",
]
