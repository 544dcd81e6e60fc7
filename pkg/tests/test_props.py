"""Reduced-count smoke runs of the randomized property sweeps."""

from ma_lab.props import concavity_sweep, cone_sweep, regmax_sweep, wedge_sweep


def test_cone_sweep_reduced():
    result = cone_sweep(count=300, seed=99)
    assert result.passed
    assert "0 failures" in result.detail
    # same seed, same transcript
    assert cone_sweep(count=300, seed=99).detail == result.detail
    assert cone_sweep(count=300, seed=100).detail != result.detail


def test_concavity_sweep_reduced():
    rows = concavity_sweep(count=60)
    assert [r.name for r in rows] == [
        "concavity[cma]", "concavity[j]", "concavity[gma]"
    ]
    assert all(r.passed for r in rows)


def test_wedge_sweep_reduced():
    result = wedge_sweep(count=30)
    assert result.passed
    assert "max |density - oracle|" in result.detail


def test_regmax_sweep():
    result = regmax_sweep()
    assert result.passed, result.detail
