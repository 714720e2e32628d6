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

import json

import numpy as np
import pytest

import lordo


def test_svd_matches_numpy():
    a = np.random.default_rng(0).standard_normal((7, 5))
    u, s, v = lordo.svd(a)
    np.testing.assert_allclose(s, np.linalg.svd(a, compute_uv=False), atol=1e-12)
    np.testing.assert_allclose(u @ np.diag(s) @ v.T, a, atol=1e-12)


def test_projection_and_subspace_metrics():
    rng = np.random.default_rng(1)
    g = rng.standard_normal((12, 9))
    q = lordo.compute_projection(g, 3)
    assert q.shape == (12, 3)
    np.testing.assert_allclose(q.T @ q, np.eye(3), atol=1e-12)
    assert lordo.sin_theta_distance(q, q) < 1e-12
    assert lordo.mssv(q.T @ q) == pytest.approx(1.0, abs=1e-12)


def test_rotation_identity():
    rng = np.random.default_rng(2)
    u = rng.standard_normal((4, 3))
    v = rng.standard_normal((4, 3)) ** 2
    out = lordo.rotate_second_moment(np.eye(4), u, v, 0.9, 0.999, 10)
    np.testing.assert_allclose(out, v, atol=1e-12)


def test_cost_formulas():
    assert lordo.reduction_vs_lowrank_ddp(2048, 2048, 256, 32) == pytest.approx(10.24, abs=0.01)
    assert lordo.reduction_vs_fullrank_ddp(2048, 2048, 256, 32) == pytest.approx(23.27, abs=0.01)
    assert lordo.optimizer_state_ratio(768, 768, 64) == 12
    assert lordo.per_payload("global", "none", 10, 7, 3)["projection"] == (0, 30)


def test_config_errors_raise():
    with pytest.raises(lordo.ConfigError, match="rank"):
        lordo.validate_config('{"rank": 1000}')
    resolved = json.loads(lordo.validate_config("{}"))
    assert resolved["workers"] == 4


def test_run_is_deterministic():
    cfg = {"workers": 2, "steps": 16, "batch_size": 8, "rank": 2,
           "sync": {"params": 4, "first_moment": 4, "second_moment": 4},
           "problem": {"rows": 128, "p": 8, "q": 8}}
    records = lordo.run(cfg)
    assert records[0]["type"] == "header"
    assert len(records) == 17
    assert lordo.run_log(json.dumps(cfg), 1) == lordo.run_log(json.dumps(cfg), 2)
    evals = [r["eval_loss"] for r in records[1:] if r["eval_loss"] is not None]
    assert evals[-1] < evals[0]
