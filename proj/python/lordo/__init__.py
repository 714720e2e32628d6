# Copyright 2026 The lordo Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Python bindings for the lordo simulator."""

import json

from lordo._lordo import (
    ConfigError,
    NonFiniteError,
    __version__,
    compute_projection,
    mssv,
    optimizer_state_ratio,
    per_payload,
    predicted_instability,
    reduction_vs_fullrank_ddp,
    reduction_vs_fullrank_local,
    reduction_vs_lowrank_ddp,
    rotate_second_moment,
    run_log,
    sin_theta_distance,
    svd,
    validate_config,
)


def run(config, threads=0):
    """Runs a config (dict or JSON string) and returns the parsed log records."""
    text = config if isinstance(config, str) else json.dumps(config)
    return [json.loads(line) for line in run_log(text, threads).splitlines()]


__all__ = [
    "ConfigError",
    "NonFiniteError",
    "__version__",
    "compute_projection",
    "mssv",
    "optimizer_state_ratio",
    "per_payload",
    "predicted_instability",
    "reduction_vs_fullrank_ddp",
    "reduction_vs_fullrank_local",
    "reduction_vs_lowrank_ddp",
    "rotate_second_moment",
    "run",
    "run_log",
    "sin_theta_distance",
    "svd",
    "validate_config",
]
