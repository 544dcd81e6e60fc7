"""Lelong-number ladders: profiles, error bars, and the pole bank."""

import numpy as np
import pytest

from ma_lab.errors import SolverError
from ma_lab.lelong import build_lelong_bank, lelong_number, lelong_profile
from ma_lab.psh import SampledFunction


@pytest.fixture(scope="module")
def bank():
    return {name: (phi, point, nu, kw) for name, phi, point, nu, kw in build_lelong_bank()}


def test_exact_cone_has_constant_quotients(bank):
    phi, point, expected, kw = bank["cone_1"]
    profile = lelong_profile(phi, point, **kw)
    assert np.abs(profile.quotients - 1.0).max() < 1e-12
    assert profile.resolution < 1e-12
    assert lelong_number(profile) == pytest.approx(expected, abs=1e-12)


def test_bank_pole_strengths(bank):
    for name, (phi, point, expected, kw) in bank.items():
        profile = lelong_profile(phi, point, **kw)
        nu = lelong_number(profile)
        diffs = np.diff(profile.quotients)
        assert (diffs <= 1e-6).all(), name  # decreasing toward the limit
        if expected is not None:
            assert abs(nu - expected) <= profile.resolution + 1e-9, name


def test_truncated_cone_quotient_decays(bank):
    phi, point, _, kw = bank["truncated_cone"]
    profile = lelong_profile(phi, point, **kw)
    # bounded function: quotients fall off once the ladder passes the
    # truncation radius, and the estimate heads toward zero
    assert profile.quotients[0] > 0.5
    assert lelong_number(profile) < 0.8
    assert profile.quotients[-1] < profile.quotients[0]


def test_profile_field_relations(bank):
    phi, point, _, kw = bank["cone_offcenter"]
    profile = lelong_profile(phi, point, **kw)
    assert (np.diff(profile.radii) < 0).all()
    assert (profile.half_radii < profile.radii).all()
    assert (profile.mean_values <= profile.hat_values + 1e-12).all()
    assert (profile.smooth_values <= profile.hat_values + 1e-12).all()
    assert profile.poisson_constant == pytest.approx(3.0 ** (2 * phi.n - 1) / 2.0 ** (2 * phi.n - 2))


def test_ladder_too_short_for_estimate(bank):
    phi, point, _, _ = bank["cone_1"]
    profile = lelong_profile(phi, point, radii=(0.2, 0.1))
    with pytest.raises(ValueError):
        lelong_number(profile)


def test_non_psh_input_rejected(bank):
    phi, point, _, _ = bank["quadratic"]
    flipped = phi.with_values(-phi.values)
    with pytest.raises(SolverError):
        lelong_profile(flipped, point)


def test_profile_validation(bank):
    phi, point, _, _ = bank["cone_1"]
    with pytest.raises(TypeError):
        lelong_profile(phi.values, point)
    with pytest.raises(ValueError):
        lelong_profile(phi, np.zeros(3))
    with pytest.raises(ValueError):
        lelong_profile(phi, point, radii=(0.5,), reference_radius=0.4)
    with pytest.raises(ValueError):
        lelong_profile(phi, point, radii=(0.001,))  # under two spacings
    with pytest.raises(ValueError):
        lelong_profile(phi, np.array([0.9, 0.0]))  # reference ball leaves ball
    with pytest.raises(ValueError):
        lelong_profile(phi, point, radii=())


def test_smooth_members_profile_to_zero(bank):
    for name in ("quadratic", "smooth_log"):
        phi, point, expected, kw = bank[name]
        profile = lelong_profile(phi, point, **kw)
        nu = lelong_number(profile)
        assert expected == 0.0
        assert 0.0 <= nu <= profile.resolution + 1e-9, name
