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

import pathlib

import numpy as np
import pytest
import yaml

import linfel

SCENARIOS = pathlib.Path(__file__).resolve().parents[2] / "scenarios"

ORACLE_CONFIG = """
mode: solve
seed: 1
grid:
  extent: [1]
  nodes: [129]
boundary:
  preset: hermite
  parameters: [1, 0]
solver:
  p_max: 64
  early_stop: false
"""


def test_oracle_closed_form():
    o = linfel.oracle_1d(1.0, 0.0)
    assert o.e_infty == pytest.approx(4.0, abs=1e-12)
    assert o.switch_point == pytest.approx(0.5, abs=1e-12)
    x = np.linspace(0.0, 0.5, 11)
    np.testing.assert_allclose(o.u(x), 2.0 * x**2, atol=1e-12)
    assert o.boundary_residual() < 1e-12


def test_brute_force_agrees_with_oracle():
    e = linfel.oracle_1d_brute_force(0.3, -0.7, cells=200, starts=6)
    assert e == pytest.approx(linfel.oracle_1d(0.3, -0.7).e_infty, rel=1e-3)


def test_solve_returns_fields_and_history():
    r = linfel.solve(ORACLE_CONFIG)
    assert r["all_converged"]
    assert r["monotone"]
    assert r["u"].shape == (129,)
    assert r["points"].shape == (129, 1)
    e = r["history"]["e_p"]
    assert all(b >= a - 1e-8 for a, b in zip(e, e[1:]))
    assert 3.5 < r["e_infty_estimate"] <= 4.0
    assert max(r["history"]["normalization_residual"]) < 1e-8


def test_zero_minimum_reports_kernel():
    r = linfel.solve(str(SCENARIOS / "harmonic_2d.yaml"))
    assert r["e_infty_estimate"] < 1e-10
    assert r["adjoint_kernel"]["residual"] < 1e-8


def test_config_errors_raise():
    with pytest.raises(linfel.ConfigError):
        linfel.validate_config("mode: solve\nseed: 1\nbogus: 2\n")
    canonical = linfel.validate_config(ORACLE_CONFIG)
    assert yaml.safe_load(canonical)["grid"]["nodes"] == [129]


def test_run_and_compare(tmp_path):
    a = linfel.run(ORACLE_CONFIG, tmp_path / "a")
    b = linfel.run(ORACLE_CONFIG, tmp_path / "b")
    assert a["exit_code"] == 0
    report = yaml.safe_load((tmp_path / "a" / "report.yaml").read_text())
    assert report["exit"]["code"] == 0
    assert (tmp_path / "a" / "u.csv").read_bytes() == (tmp_path / "b" / "u.csv").read_bytes()
    cmp = linfel.compare(tmp_path / "a", tmp_path / "b")
    assert cmp["identical"] and cmp["pass"]


def test_oracle_mode_run(tmp_path):
    r = linfel.run(ORACLE_CONFIG, tmp_path / "o", mode="oracle1d")
    assert r["exit_code"] == 0
    report = yaml.safe_load((tmp_path / "o" / "report.yaml").read_text())
    assert report["result"]["e_infty"] == 4.0
    assert report["result"]["switch"] == 0.5
