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

"""Adaptive Laplace mechanism: differentially private training."""

import json

from adlm._core import (
    allocate_budget,
    approximation_error_bound,
    config_keys,
    default_config,
    h0_sensitivity,
    laplace_from_uniform,
    loss_sensitivity,
    normalize_config,
    relevance_sensitivity,
)
from adlm import _core

__all__ = [
    "allocate_budget",
    "approximation_error_bound",
    "config_keys",
    "default_config",
    "h0_sensitivity",
    "laplace_from_uniform",
    "loss_sensitivity",
    "normalize_config",
    "relevance_sensitivity",
    "run",
]


def run(command, config=None, **overrides):
    """Runs a subcommand and returns its JSON summary as a dict.

    `config` is a dict of config keys; keyword arguments override it.
    """
    merged = dict(config or {})
    merged.update(overrides)
    return json.loads(_core.run(command, json.dumps(merged)))
