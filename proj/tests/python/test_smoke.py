# SPDX-License-Identifier: Apache-2.0
"""Smoke checks for the python module and the installed CLI.

ctest provides PYTHONPATH pointing at the freshly built extension and
DMABEAM_CLI pointing at the dmabeam binary. These tests only assert coarse
end-to-end behavior; the numerical contracts live in the C++ suites.
"""

import os
import subprocess
from pathlib import Path

import numpy as np
import pytest

import dmabeam

DATA_DIR = Path(__file__).resolve().parents[2] / "data"


def small_scenario(seed=3):
    geometry = dmabeam.ArrayGeometry.uniform_planar(2, 2, 0.5, 2, 2)
    scenario = dmabeam.Scenario()
    scenario.geometry = geometry
    scenario.r0 = 0.1
    scenario.admittances = dmabeam.build_synthetic_admittances(
        geometry, seed, coupling_scale=0.2, r0=0.1
    )
    scenario.directions = [dmabeam.Direction(0.4, 0.8), dmabeam.Direction(1.1, 4.0)]
    scenario.beta_lo = np.zeros(2)
    scenario.gamma_min = np.ones(2)
    scenario.noise_power = 0.01
    scenario.p_max = 10.0
    scenario.validate()
    return scenario


def test_run_alternating_end_to_end():
    scenario = small_scenario()
    config = dmabeam.AlgorithmConfig()
    config.max_outer_iters = 5

    result = dmabeam.run_alternating(scenario, config)

    assert result.feasible
    assert result.objective > 0.0
    assert result.objective <= result.bound
    assert result.B.shape == (2, 4)
    assert result.susceptance.shape == (4,)
    accepted = [rec.p_tot for rec in result.trace if rec.accepted]
    assert accepted == sorted(accepted)

    beamformer = dmabeam.Beamformer()
    beamformer.B = result.B
    tuned = dmabeam.scenario_with_susceptance(scenario, result.susceptance)
    gains = [
        dmabeam.beampattern_gain(tuned, beamformer, d.theta, d.phi)
        for d in tuned.directions
    ]
    assert dmabeam.total_beampattern(tuned, beamformer) == pytest.approx(
        np.mean(gains), rel=1e-12
    )
    assert dmabeam.radiated_power(tuned, beamformer) <= scenario.p_max * (1 + 1e-6)
    for user in range(scenario.num_users()):
        assert dmabeam.sinr(tuned, beamformer, user) >= 1.0 - 1e-6

    # Rendered outputs must be reproducible from the same result object.
    assert dmabeam.render_trace(result) == dmabeam.render_trace(result)
    assert dmabeam.render_result(result, scenario).startswith("{")


def test_example_scenario_loads():
    scenario = dmabeam.load_scenario(str(DATA_DIR / "example_scenario.json"))
    assert scenario.num_elements() == 16
    assert scenario.num_rf_ports() == 2
    assert scenario.num_users() == 2
    assert scenario.num_directions() == 2
    checks = dmabeam.validate_admittances(scenario.admittances)
    assert checks and all(passed for _, passed in checks)


def test_validation_errors_are_typed():
    with pytest.raises(dmabeam.ValidationError):
        dmabeam.parse_scenario_text("{ not json", origin="inline")
    scenario = small_scenario()
    scenario.gamma_min = np.ones(3)  # wrong length for 2 users
    with pytest.raises(dmabeam.ValidationError):
        scenario.validate()


def test_oracles_pass():
    reports = dmabeam.run_all_oracles(trials=5, seed=1)
    assert len(reports) == 5
    for identity, max_rel_error, tolerance, passed in reports:
        assert passed, identity
        assert max_rel_error <= tolerance


def test_cli_exit_codes(tmp_path):
    cli = os.environ.get("DMABEAM_CLI")
    if not cli:
        pytest.skip("DMABEAM_CLI not set")

    ok = subprocess.run(
        [cli, "verify", "--seed", "2"], capture_output=True, text=True
    )
    assert ok.returncode == 0, ok.stderr

    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    rejected = subprocess.run(
        [cli, "run", "--scenario", str(bad), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert rejected.returncode == 2
    assert "bad.json" in rejected.stderr
