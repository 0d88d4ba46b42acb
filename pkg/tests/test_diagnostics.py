import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latticemc import diagnostics as dg
from latticemc.densities import IsotropicGaussianPotential, SigmoidTarget
from latticemc.lattice import InvalidInputError
from latticemc.samplers import ChainState, exact_gaussian_backend, imhr_step

pmf_strategy = st.lists(st.floats(0.01, 1.0), min_size=1, max_size=8).map(
    lambda w: np.asarray(w) / np.sum(w)
)


@given(pmf_strategy, st.integers(-5, 5), pmf_strategy, st.integers(-5, 5), pmf_strategy, st.integers(-5, 5))
def test_tvd_is_a_metric(p, a, q, b, r, c):
    P, Q, R = dg.MarginalPMF(a, p), dg.MarginalPMF(b, q), dg.MarginalPMF(c, r)
    assert dg.tvd(P, P) == 0.0
    assert 0.0 <= dg.tvd(P, Q) <= 1.0
    assert dg.tvd(P, Q) == pytest.approx(dg.tvd(Q, P), abs=1e-15)
    assert dg.tvd(P, R) <= dg.tvd(P, Q) + dg.tvd(Q, R) + 1e-12


def test_tvd_examples():
    p = dg.MarginalPMF(0, [0.5, 0.5])
    assert dg.tvd(p, dg.MarginalPMF(2, [1.0])) == 1.0
    assert dg.tvd(p, dg.MarginalPMF(0, [1.0])) == pytest.approx(0.5)


def test_marginal_pmf_validation_and_helpers():
    p = dg.MarginalPMF(-1, [0.25, 0.5, 0.25])
    assert p.hi == 1 and p(0) == 0.5 and p(5) == 0.0
    assert p.std() == pytest.approx(math.sqrt(0.5))
    assert dg.MarginalPMF.from_counts(3, [1, 3]).probs.tolist() == [0.25, 0.75]
    with pytest.raises(InvalidInputError):
        dg.MarginalPMF(0, [0.5, 0.6])
    with pytest.raises(InvalidInputError):
        dg.MarginalPMF(0, [1.5, -0.5])


def test_exact_marginal_isotropic():
    p = dg.exact_marginal_isotropic(1.0, 10)
    z = np.arange(-10, 11)
    w = np.exp(-z**2 / 2)
    assert np.allclose(p.probs, w / w.sum())
    shifted = dg.exact_marginal_isotropic(1.0, 10, center=3.2)
    assert shifted.lo == -7 and shifted(3) == pytest.approx(shifted.probs.max())
    with pytest.raises(InvalidInputError):
        dg.exact_marginal_isotropic(4.0, 10)


def test_marginals_from_samples():
    m = dg.marginals_from_samples(np.array([[0, 5], [2, 5], [2, 6], [2, 5]]))
    assert m[0].lo == 0 and m[0].probs.tolist() == [0.25, 0.0, 0.75]
    assert m[1].lo == 5 and m[1].probs.tolist() == [0.75, 0.25]


def test_tvd_m_curve_shape_and_monotone_start():
    pot = IsotropicGaussianPotential(2)
    oracle = [dg.exact_marginal_isotropic(1.0, 10)] * 2
    curve = dg.tvd_m_curve(SigmoidTarget(pot), exact_gaussian_backend(pot), [3.0, 0.0], 5000, [10, 0, 2], oracle, seed=1)
    assert curve.iterations.tolist() == [0, 2, 10]
    # at t = 0 every replica sits at (3, 0): TVD is 1 minus the oracle mass at 3
    assert curve.values[0] == pytest.approx(1 - oracle[0](3), abs=1e-12)
    assert curve.values[-1] < 0.05
    assert curve.per_coordinate.shape == (3, 2)
    again = dg.tvd_m_curve(SigmoidTarget(pot), exact_gaussian_backend(pot), [3.0, 0.0], 5000, [10, 0, 2], oracle, seed=1, threads=3)
    assert np.array_equal(curve.values, again.values) and curve.accepts == again.accepts
    with pytest.raises(InvalidInputError):
        dg.tvd_m_curve(SigmoidTarget(pot), exact_gaussian_backend(pot), [0, 0], 100, [1], oracle[:1])


def test_noise_floor():
    oracle = [dg.MarginalPMF(0, np.full(21, 1 / 21)), dg.MarginalPMF(0, [1.0])]
    assert dg.noise_floor(oracle, 2100) == pytest.approx(0.1)


def test_acf_examples():
    assert np.allclose(dg.acf(np.ones(10), 3), [1.0, 0.9, 0.8, 0.7])
    alt = dg.acf(np.array([1.0, -1.0] * 50), 2)
    assert alt[1] == pytest.approx(-0.99) and alt[2] == pytest.approx(0.98)
    with pytest.raises(ZeroDivisionError):
        dg.acf(np.zeros(10), 2)
    with pytest.raises(InvalidInputError):
        dg.acf(np.ones(3), 3)


def test_acf_multivariate_matches_definition():
    x = np.random.default_rng(0).normal(size=(200, 3))
    out = dg.acf(x, 4)
    for tau in range(1, 5):
        expected = np.sum(x[:-tau] * x[tau:]) / np.sum(x * x)
        assert out[tau] == pytest.approx(expected, rel=1e-12)


def test_average_acceptance():
    pot = IsotropicGaussianPotential(1)
    state = ChainState.start([0.0], seed=0)
    with pytest.raises(InvalidInputError):
        dg.average_acceptance(state)
    for _ in range(50):
        state, _ = imhr_step(state, exact_gaussian_backend(pot), SigmoidTarget(pot))
    assert dg.average_acceptance(state) == state.accepts / 50


def test_z_over_k():
    # Poisson summation: sum exp(-z^2/2) / sqrt(2 pi) = 1 + 2 exp(-2 pi^2) + ...
    assert dg.isotropic_z_over_k(1.0, 1) == pytest.approx(1 + 2 * math.exp(-2 * math.pi**2), rel=1e-12)
    assert dg.isotropic_z_over_k(1.0, 3) == pytest.approx(dg.isotropic_z_over_k(1.0, 1) ** 3)


def test_uniform_ergodicity_bound_examples():
    delta = math.exp(-1 / 8)
    assert dg.uniform_ergodicity_bound(1.0, 1, 1.0, 0) == 1.0
    assert dg.uniform_ergodicity_bound(1.0, 1, 1.0, 3) == pytest.approx((1 - delta) ** 3)
    vals = [dg.uniform_ergodicity_bound(1.0, 4, 1.0, t) for t in range(10)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    with pytest.raises(InvalidInputError):
        dg.uniform_ergodicity_bound(1.0, 1, 2.0, 1)
    with pytest.raises(InvalidInputError):
        dg.uniform_ergodicity_bound(-1.0, 1, 1.0, 1)


def test_inexact_alg_bound():
    lo, hi = dg.inexact_alg_bound(1.0, 0.5, 20, 0.5, 10)
    eps = 0.5**20
    r = 2 * eps / 0.5
    ends = [(1 - c * 0.5) ** 10 + (1 + 1 / (c * 0.5)) * eps / 0.5 for c in (1 - r, 1 + r)]
    assert (lo, hi) == pytest.approx((min(ends), max(ends)))
    assert lo <= (1 - 0.5) ** 10 + 3 * eps / 0.5 <= hi
    # V = 0 collapses to the exact-proposal bound
    assert dg.inexact_alg_bound(0.0, 0.5, 1, 0.5, 4) == pytest.approx((0.5**4, 0.5**4))
    with pytest.raises(InvalidInputError):
        dg.inexact_alg_bound(1.0, 0.9, 1, 0.1, 3)
    with pytest.raises(InvalidInputError):
        dg.inexact_alg_bound(1.0, 1.5, 1, 0.1, 3)


def test_degeneracy_probe():
    seq = dg.appendix_a_degeneracy_probe()
    assert seq[0] == pytest.approx(math.exp(-0.25), rel=1e-12)
    assert np.all(np.diff(seq) < 0)
    # for m >= 1 the infimum sits at the largest grid point y = 0.499
    assert seq[1] == pytest.approx(math.exp(-(2 * 0.499 + 0.499**2)), rel=1e-12)
    with pytest.raises(InvalidInputError):
        dg.appendix_a_degeneracy_probe(sigma2=0.0)
