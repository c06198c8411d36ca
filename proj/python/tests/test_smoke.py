# Copyright 2026 The AdLM Authors
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

import json
import math

import pytest

import adlm


def test_default_config_round_trips():
    text = adlm.default_config()
    assert adlm.normalize_config(text) == text
    keys = [k[0] for k in adlm.config_keys()]
    assert keys == list(json.loads(text))


def test_unknown_key_is_value_error():
    with pytest.raises(ValueError, match="bogus"):
        adlm.normalize_config('{"bogus": 1}')


def test_sensitivities():
    assert adlm.relevance_sensitivity(784, 10000) == pytest.approx(0.1568)
    assert adlm.h0_sensitivity(64, 784) == 100352.0
    assert adlm.loss_sensitivity(10, 25) == pytest.approx(10 * (25 + 625 / 4))
    e = math.e
    bound = (e * e + 2 * e - 1) / (e * (1 + e) ** 2)
    assert adlm.approximation_error_bound(3) == pytest.approx(3 * bound)


def test_laplace_inverse_cdf():
    # u is centered: u in (-1/2, 1/2).
    assert adlm.laplace_from_uniform(0.0, 2.0) == 0.0
    assert adlm.laplace_from_uniform(0.25, 1.0) == pytest.approx(math.log(2))
    assert adlm.laplace_from_uniform(-0.25, 3.0) == pytest.approx(-3 * math.log(2))


def test_budget_allocation():
    out = adlm.allocate_budget([1.0, -3.0, 0.0, 4.0], 2.0)
    assert sum(out["beta"]) == pytest.approx(4.0, abs=1e-12)
    assert out["epsilon"][3] > out["epsilon"][0]
    uniform = adlm.allocate_budget([0.5] * 5, 1.0)
    assert uniform["beta"] == [1.0] * 5


def test_train_and_eval_synthetic(tmp_path):
    cfg = {
        "dataset": "synthetic",
        "synthetic_dim": 16,
        "synthetic_classes": 3,
        "architecture": ["dense:16", "relu", "lrn", "dense:3:nobias"],
        "train_limit": 600,
        "test_limit": 200,
        "mechanism": "noiseless",
        "batch_size": 50,
        "epochs": 10,
        "out_dir": str(tmp_path),
    }
    summary = adlm.run("train", cfg)
    assert (tmp_path / "model.ckpt").exists()
    assert (tmp_path / "manifest.json").exists()
    assert summary["test_accuracy"] > 0.8
    ev = adlm.run("eval", cfg)
    assert ev["accuracy"] == pytest.approx(summary["test_accuracy"])


def test_bad_budget_is_value_error(tmp_path):
    with pytest.raises(ValueError):
        adlm.run("train", {"epsilon": 0.0, "out_dir": str(tmp_path)})


def test_missing_checkpoint_is_file_not_found(tmp_path):
    cfg = {"dataset": "synthetic", "checkpoint": str(tmp_path / "x.ckpt")}
    with pytest.raises(FileNotFoundError):
        adlm.run("eval", cfg)
