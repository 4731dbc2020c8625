"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one pass/fail line (visible even under pytest capture) and
asserts the criterion outcome.  The same suite backs ``mucogarch validate``.
"""

import pytest

from mucogarch.acceptance import AcceptanceSuite


@pytest.fixture(scope="module")
def suite():
    return AcceptanceSuite()


def _run(suite, capsys, key):
    result = suite.run(key)
    with capsys.disabled():
        print("\nACCEPTANCE " + result.line())
    assert result.passed, f"{key}: {result.observed} (tolerance {result.tolerance})"
    return result


def test_c01_counterexample(suite, capsys):
    _run(suite, capsys, "counterexample")


def test_c02_psd_lower_bound(suite, capsys):
    res = _run(suite, capsys, "psd_lower_bound")
    assert res.seconds < 30


def test_c03_shot_noise(suite, capsys):
    res = _run(suite, capsys, "shot_noise")
    assert res.seconds < 10


def test_c04_domination(suite, capsys):
    res = _run(suite, capsys, "domination")
    assert res.seconds < 60


def test_c05_stationary_mean(suite, capsys):
    _run(suite, capsys, "stationary_mean")


def test_c06_acov_decay(suite, capsys):
    _run(suite, capsys, "acov_decay")


def test_c07_stationary_var(suite, capsys):
    _run(suite, capsys, "stationary_var")


def test_c08_scalar_reduction(suite, capsys):
    _run(suite, capsys, "scalar_reduction")


def test_c09_increment_moments(suite, capsys):
    _run(suite, capsys, "increment_moments")


def test_c10_squared_increment_decay(suite, capsys):
    _run(suite, capsys, "squared_increment_decay")


def test_c11_quartic_moment(suite, capsys):
    res = _run(suite, capsys, "quartic_moment")
    assert res.seconds < 5


def test_c12_cp_ladder(suite, capsys):
    res = _run(suite, capsys, "cp_ladder")
    assert res.seconds < 30


def test_c13_spectral_implications(suite, capsys):
    res = _run(suite, capsys, "spectral_implications")
    assert res.seconds < 30


def test_c14_structural_invariants(suite, capsys):
    _run(suite, capsys, "structural_invariants")
