import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinrecip.games import (
    Dominance,
    GameSpec,
    dominance_threshold,
    dominant_action,
    inclusive_payoff,
    inclusive_payoff_expanded,
    net_payoff,
    net_payoff_pdn,
    own_coefficient,
    total_payoff,
)

DONATION = GameSpec.pd2((3, 3), (0.5, 1))


def test_pd2_mutual_cooperation_matches_table():
    np.testing.assert_allclose(net_payoff_pdn(DONATION, (1, 1)), (2.5, 2.0), atol=1e-12)


def test_no_action_no_payoff():
    assert np.all(net_payoff(DONATION, (0, 0)) == 0.0)
    pgg = GameSpec.pgg((2, 2, 2), (1, 1, 1))
    assert np.all(inclusive_payoff(pgg, (0, 0, 0), 0.7) == 0.0)


def test_three_person_single_cooperator():
    spec = GameSpec.pdn((2, 2, 2), (1, 1, 1))
    np.testing.assert_allclose(net_payoff_pdn(spec, (1, 0, 0)), (-1, 1, 1), atol=1e-12)


def test_table_off_diagonal_with_kinship():
    # (C, D) cell: (-c1 + r b1, b1 - r c1)
    np.testing.assert_allclose(inclusive_payoff(DONATION, (1, 0), 0.25), (0.25, 2.875), atol=1e-12)


def test_table_all_cells():
    b1, b2, c1, c2, r = 3.0, 2.5, 0.5, 1.2, 0.3
    spec = GameSpec.pd2((b1, b2), (c1, c2))
    cells = {
        (1, 1): (b2 - c1 + r * (b1 - c2), b1 - c2 + r * (b2 - c1)),
        (1, 0): (-c1 + r * b1, b1 - r * c1),
        (0, 1): (b2 - r * c2, -c2 + r * b2),
        (0, 0): (0.0, 0.0),
    }
    for x, expected in cells.items():
        np.testing.assert_allclose(inclusive_payoff(spec, x, r), expected, atol=1e-12)


def test_zero_relatedness_is_net_payoff():
    spec = GameSpec.pdn((2, 1.5, 1.2), (1, 0.7, 0.9))
    x = (1, 0, 1)
    assert np.array_equal(inclusive_payoff(spec, x, 0.0), net_payoff(spec, x))


def test_pgg_equal_shares_full_contribution():
    spec = GameSpec.pgg((2, 2, 2), (1, 1, 1), (1 / 3, 1 / 3, 1 / 3))
    np.testing.assert_allclose(inclusive_payoff(spec, (1, 1, 1), 0.5), (2.0, 2.0, 2.0), atol=1e-12)


def test_total_payoff_examples():
    assert total_payoff(DONATION, (1, 1)) == pytest.approx(4.5, abs=1e-12)
    assert total_payoff(DONATION, (0, 0)) == 0.0
    spec = GameSpec.pdn((2, 1.5, 1.2), (1, 0.7, 0.9))
    assert total_payoff(spec, (0, 1, 0)) == pytest.approx(1.5 - 0.7, abs=1e-12)


def test_thresholds():
    assert dominance_threshold(DONATION, 0) == pytest.approx(1 / 6, abs=1e-15)
    pgg = GameSpec.pgg((2,) * 5, (1,) * 5)
    assert dominance_threshold(pgg, 0) == pytest.approx(0.375, abs=1e-12)


def test_equal_share_threshold_closed_form():
    n = 5
    b = (2.0, 1.8, 1.6, 1.4, 1.2)
    pgg = GameSpec.pgg(b, (1,) * n)
    for i, bi in enumerate(b):
        assert dominance_threshold(pgg, i) == pytest.approx((n / bi - 1) / (n - 1), abs=1e-12)


def test_dominant_action_examples():
    assert dominant_action(DONATION, 1, 0.25) is Dominance.DEFECT
    assert dominant_action(DONATION, 1, 1 / 3) is Dominance.BOUNDARY
    pgg = GameSpec.pgg((1.2,) * 5, (1,) * 5)
    assert dominance_threshold(pgg, 0) == pytest.approx(0.7917, abs=1e-4)
    assert dominant_action(pgg, 0, 0.9) is Dominance.COOPERATE


def test_dominance_flips_once_across_threshold():
    spec = GameSpec.pdn((2.0, 1.8, 1.6, 1.4, 1.2), (1,) * 5)
    for i in range(spec.n):
        gamma = dominance_threshold(spec, i)
        lo, hi = 0.0, 1.0
        assert dominant_action(spec, i, lo) is Dominance.DEFECT
        assert dominant_action(spec, i, hi) is Dominance.COOPERATE
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if dominant_action(spec, i, mid) is Dominance.DEFECT:
                lo = mid
            else:
                hi = mid
        assert abs(hi - gamma) < 1e-12
        grid = np.linspace(0, 1, 1001)
        labels = [dominant_action(spec, i, r) is Dominance.DEFECT for r in grid]
        assert sum(a != b for a, b in zip(labels, labels[1:])) == 1


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(family="PD2", b=(3, 3, 3), c=(1, 1, 1)),
        dict(family="PDN", b=(3,), c=(1,)),
        dict(family="PDN", b=(3, 2), c=(1, 0)),
        dict(family="PGG", b=(2, 2), c=(1, 1), v=(0.6, 0.6)),
        dict(family="PGG", b=(2, 2), c=(1, 1), v=(0.6, 0.4)),
        dict(family="PGG", b=(2, 2), c=(2.5, 1), v=(0.5, 0.5)),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(ValueError):
        GameSpec(**kwargs)


def test_profile_validation():
    with pytest.raises(ValueError):
        net_payoff(DONATION, (1, 1, 1))
    with pytest.raises(ValueError):
        net_payoff(DONATION, (0.5, 1))
    with pytest.raises(ValueError):
        net_payoff(GameSpec.pgg((2, 2), (1.2, 1.2)), (1.5, 0))
    with pytest.raises(ValueError):
        inclusive_payoff(DONATION, (1, 1), 1.5)


def _random_pd(rng, n):
    b = rng.uniform(0.5, 3.0, n)
    c = b * rng.uniform(0.05, 1.5, n)
    return GameSpec.pdn(b, c) if n > 2 else GameSpec.pd2(b, c)


def _random_pgg(rng, n):
    b = rng.uniform(0.5, 3.0, n)
    v = rng.dirichlet(np.ones(n))
    ratio = v + (1 - v) * rng.uniform(0.02, 0.98, n)
    return GameSpec.pgg(b, b * ratio, v / v.sum())


def test_pgg_fractional_contributions_supported():
    spec = GameSpec.pgg((2, 1.5, 1.8), (1.2, 1.0, 1.1))
    x = (0.3, 1.0, 0.0)
    np.testing.assert_allclose(
        inclusive_payoff(spec, x, 0.4), inclusive_payoff_expanded(spec, x, 0.4), atol=1e-12
    )


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6), r=st.floats(0, 1))
def test_affine_in_own_action(seed, n, r):
    rng = np.random.default_rng(seed)
    for spec in (_random_pd(rng, n), _random_pgg(rng, n)):
        x = rng.integers(0, 2, n).astype(float) if spec.is_pd else rng.random(n)
        for i in range(n):
            if spec.is_pd:
                hi, lo = x.copy(), x.copy()
                hi[i], lo[i] = 1.0, 0.0
                slope = inclusive_payoff(spec, hi, r)[i] - inclusive_payoff(spec, lo, r)[i]
            else:
                h = 1e-3
                hi, lo = x.copy(), x.copy()
                hi[i] = min(1.0, x[i] + h)
                lo[i] = max(0.0, x[i] - h)
                slope = (
                    inclusive_payoff(spec, hi, r)[i] - inclusive_payoff(spec, lo, r)[i]
                ) / (hi[i] - lo[i])
            assert slope == pytest.approx(own_coefficient(spec, i, r), abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 6))
def test_total_is_sum_of_components(seed, n):
    rng = np.random.default_rng(seed)
    for spec in (_random_pd(rng, n), _random_pgg(rng, n)):
        x = rng.integers(0, 2, n) if spec.is_pd else rng.random(n)
        assert total_payoff(spec, x) == pytest.approx(net_payoff(spec, x).sum(), abs=1e-12)
