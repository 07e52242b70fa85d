# Copyright 2026 The linfel Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Minimisers and certificates for L-infinity second-order variational problems."""

from ._linfel import (
    ConfigError,
    DomainError,
    InvariantError,
    Oracle1D,
    __version__,
    compare,
    oracle_1d,
    oracle_1d_brute_force,
    run,
    solve,
    validate_config,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "InvariantError",
    "Oracle1D",
    "__version__",
    "compare",
    "oracle_1d",
    "oracle_1d_brute_force",
    "run",
    "solve",
    "validate_config",
]
