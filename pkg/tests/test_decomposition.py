import numpy as np
import pytest

from empwass.decomposition import (mixture_bound, ring_decompose, ring_index,
                                   verify_mixture_convexity,
                                   verify_reconstruction)
from empwass.measures import DiscreteMeasure
from empwass.metric_core import FiniteMetricSpace
from empwass.ot_exact import wpp_mcf


def _pair_1d(xa, wa, xb, wb, x0=0.0):
    pts = np.concatenate([[x0], xa, xb])[:, None]
    space = FiniteMetricSpace.from_points(pts)
    mu = DiscreteMeasure(space, 1 + np.arange(len(xa)), wa)
    nu = DiscreteMeasure(space, 1 + len(xa) + np.arange(len(xb)), wb)
    return space, mu, nu


def test_ring_index_breakpoints():
    assert ring_index(0.0) == 1
    assert ring_index(2.0) == 1
    assert ring_index(2.0000001) == 2
    assert ring_index(4.0) == 2
    assert ring_index(4.1) == 3
    assert ring_index(8.0) == 3
    assert ring_index(100.0) == 7  # 2^6 < 100 <= 2^7


def test_ring_decompose_masses_and_lambda():
    # a: mass .5 at d=1 (ring 1), .5 at d=3 (ring 2)
    # b: mass .25 at d=1.5 (ring 1), .75 at d=5 (ring 3)
    space, mu, nu = _pair_1d([1.0, 3.0], [0.5, 0.5],
                             [1.5, 5.0], [0.25, 0.75])
    dec = ring_decompose(mu, nu, x0=0)
    by_i = {r.i: r for r in dec.rings}
    assert by_i[1].mass_a == pytest.approx(0.5)
    assert by_i[1].mass_b == pytest.approx(0.25)
    assert by_i[2].mass_a == pytest.approx(0.5)
    assert by_i[2].mass_b == pytest.approx(0.0)
    assert by_i[3].mass_b == pytest.approx(0.75)
    # lambda = sum of positive parts either way = .25 + .5 = .75
    assert dec.lam == pytest.approx(0.75)
    assert dec.excess_defined
    verify_reconstruction(dec)


def test_ring_decompose_equal_measures_no_excess():
    space, mu, _ = _pair_1d([1.0, 3.0], [0.5, 0.5], [9.0], [1.0])
    dec = ring_decompose(mu, mu, x0=0)
    assert dec.lam == 0.0
    assert not dec.excess_defined
    verify_reconstruction(dec)


def test_mixture_bound_dominates_exact():
    rng = np.random.default_rng(21)
    for p in (1.0, 2.0):
        for _ in range(10):
            m, n = rng.integers(2, 8, size=2)
            xa = rng.uniform(0.5, 20.0, size=m)
            xb = rng.uniform(0.5, 20.0, size=n)
            wa, wb = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(n))
            space, mu, nu = _pair_1d(xa, wa, xb, wb)
            dec = ring_decompose(mu, nu, x0=0)
            bound = mixture_bound(dec, p)
            exact = wpp_mcf(mu, nu, p)[0].value
            assert bound.total >= exact - 1e-10
            # total decomposes into the reported terms
            assert bound.total == pytest.approx(
                bound.main + bound.remainder_a + bound.remainder_b, rel=1e-12)


def test_mixture_bound_two_point_hand_example():
    # single atoms in different rings: everything is excess mass, so the
    # bound is the through-the-center cost d(x0,a)^p + d(x0,b)^p for p = 1
    space, mu, nu = _pair_1d([1.0], [1.0], [3.0], [1.0])
    dec = ring_decompose(mu, nu, x0=0)
    assert dec.lam == pytest.approx(1.0)
    b = mixture_bound(dec, 1.0)
    assert b.main == 0.0
    assert b.total == pytest.approx(1.0 + 3.0)


def test_mixture_convexity_inequality():
    rng = np.random.default_rng(22)
    pts = rng.normal(size=(12, 2))
    space = FiniteMetricSpace.from_points(pts)
    mus, nus = [], []
    for k in range(3):
        mus.append(DiscreteMeasure(space, np.arange(6),
                                   rng.dirichlet(np.ones(6))))
        nus.append(DiscreteMeasure(space, 6 + np.arange(6),
                                   rng.dirichlet(np.ones(6))))
    lams = rng.dirichlet(np.ones(3))
    for p in (1.0, 2.0):
        out = verify_mixture_convexity(mus, nus, lams, p)
        assert out["lhs"] <= out["rhs"] + 1e-10
        assert out["gap"] >= -1e-10
