"""Acceptance battery: every criterion runs at its stated tolerance and
prints one pass/fail line.

The battery itself lives in nldisp.verification (shared with the CLI verify
subcommand); this module pins the pass requirement per criterion.
"""

import pytest

from nldisp.verification import run_battery


@pytest.fixture(scope="module")
def battery():
    results = run_battery(seed=0)
    return {r.name: r for r in results}


def _report(result):
    line = f"[{result.status.upper()}] {result.name}: {result.measured_str()}"
    print(line)
    assert result.status == "pass", line


def test_criterion_01_route_agreement(battery):
    _report(battery["route_agreement"])


def test_criterion_02_baselines(battery):
    _report(battery["baselines"])


def test_criterion_03_shift_equivariance(battery):
    _report(battery["shift_equivariance"])


def test_criterion_04_existence_regimes(battery):
    _report(battery["existence_regimes"])


def test_criterion_05_mean_lower_bound(battery):
    _report(battery["mean_lower_bound"])


def test_criterion_06_coefficient_monotonicity(battery):
    _report(battery["coefficient_monotonicity"])


def test_criterion_07_rate_monotonicity(battery):
    _report(battery["rate_monotonicity"])


def test_criterion_08_rate_limits(battery):
    _report(battery["rate_limits"])


def test_criterion_09_distance_limits(battery):
    _report(battery["distance_limits"])


def test_criterion_10_bc_ordering(battery):
    _report(battery["bc_ordering"])


def test_criterion_11_comparison_principle(battery):
    _report(battery["comparison_principle"])


def test_criterion_12_integrator_accuracy(battery):
    _report(battery["integrator_accuracy"])


def test_criterion_13_competitive_exclusion(battery):
    _report(battery["competitive_exclusion"])


def test_criterion_14_determinism(battery):
    _report(battery["determinism"])
