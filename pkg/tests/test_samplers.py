import io
import math

import numpy as np
import pytest
from scipy import integrate, special as sp

from latticemc.densities import (
    IsotropicGaussianPotential,
    PerfectSecurityPotential,
    Potential,
    PullbackGaussianPotential,
    SigmoidTarget,
    perfect_security_rho_for_unit_variance,
)
from latticemc.lattice import GeneratorMatrix, InvalidInputError
from latticemc.samplers import (
    ChainState,
    DiscreteGaussianTable,
    ExactGaussianBackend,
    HMCParams,
    KleinParams,
    RadialRejectionBackend,
    discrete_gaussian_1d,
    exact_gaussian_backend,
    gram_schmidt,
    hmc_backend,
    imhr_ensemble,
    imhr_run,
    imhr_step,
    klein_sample,
    klein_sample_batch,
    leapfrog,
    read_lsmp,
    read_samples_csv,
    rwm_marginal_oracle,
    write_lsmp,
    write_samples_csv,
)
from latticemc.samplers.backends import ProposalBackend


class FixedBackend(ProposalBackend):
    kind = "fixed"

    def __init__(self, point):
        super().__init__()
        self.point = np.asarray(point, dtype=float)
        self.dim = self.point.size

    def draw_batch(self, rng, n):
        return np.tile(self.point, (n, 1))


class Shifted(Potential):
    def __init__(self, base, c):
        self.base, self.c, self.dim = base, c, base.dim

    def value(self, x):
        return self.base.value(x) + self.c

    def grad(self, x):
        return self.base.grad(x)


def brute_pmf(pot, box):
    axes = [np.arange(-box, box + 1)] * pot.dim
    z = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, pot.dim)
    w = np.exp(-pot.value(z.astype(float)))
    return z, w / w.sum()


def empirical_tvd(samples, z, p):
    index = {tuple(r): i for i, r in enumerate(z.tolist())}
    counts = np.zeros(len(p))
    outside = 0
    for r in samples.tolist():
        i = index.get(tuple(r))
        if i is None:
            outside += 1
        else:
            counts[i] += 1
    q = counts / samples.shape[0]
    return 0.5 * (np.abs(q - p).sum() + outside / samples.shape[0])


# IMHR


def test_step_accepts_current_point_proposal():
    pot = IsotropicGaussianPotential(2)
    target = SigmoidTarget(pot)
    state = ChainState.start([0.3, -0.2], seed=1)
    for _ in range(20):
        state, acc = imhr_step(state, FixedBackend([0.3, -0.2]), target)
        assert acc
    assert state.steps == 20 and state.accepts == 20


def test_step_rejects_undefined_weight():
    pot = PerfectSecurityPotential(2, 0.1, truncate=True)
    state = ChainState.start([0.0, 0.0], seed=0)
    state, acc = imhr_step(state, FixedBackend([100.0, 0.0]), SigmoidTarget(pot))
    assert not acc and state.flagged == 1 and np.all(state.x == 0)


def test_step_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        imhr_step(ChainState.start([0.0]), FixedBackend([0.0, 0.0]), SigmoidTarget(IsotropicGaussianPotential(2)))
    with pytest.raises(InvalidInputError):
        ChainState.start([np.nan])


def test_step_acceptance_probability_matches_weight_ratio():
    pot = IsotropicGaussianPotential(1)
    target = SigmoidTarget(pot)
    x, y = np.array([0.2]), np.array([0.45])
    if target.log_weight(y) > target.log_weight(x):
        x, y = y, x
    alpha = math.exp(float(target.log_weight(y) - target.log_weight(x)))
    assert 0.05 < alpha < 0.999
    rng = np.random.default_rng(4)
    n = 40_000
    hits = sum(imhr_step(ChainState(x.copy(), rng), FixedBackend(y), target)[1] for _ in range(n))
    assert abs(hits / n - alpha) < 4 * math.sqrt(alpha * (1 - alpha) / n)


def test_run_matches_shifted_center_pmf():
    pot = IsotropicGaussianPotential(1, 0.6, center=[0.3])
    run = imhr_run(SigmoidTarget(pot), exact_gaussian_backend(pot), [0.0], 100, 200_000, seed=11)
    z, p = brute_pmf(pot, 12)
    assert empirical_tvd(run.samples, z, p) < 0.006
    assert run.samples.dtype == np.int64


def test_run_pullback_gaussian_against_brute_force():
    b = GeneratorMatrix(np.array([[1.0, 0.6], [0.0, 1.2]]))
    pot = PullbackGaussianPotential(b, 1.0, center=[0.2, -0.4])
    run = imhr_run(SigmoidTarget(pot), exact_gaussian_backend(pot), [0.0, 0.0], 100, 200_000, seed=12)
    z, p = brute_pmf(pot, 12)
    assert empirical_tvd(run.samples, z, p) < 0.01


def test_run_deterministic_and_thin():
    pot = IsotropicGaussianPotential(3)
    args = (SigmoidTarget(pot), exact_gaussian_backend(pot), np.zeros(3), 10, 500)
    a = imhr_run(*args, thin=3, seed=5)
    b = imhr_run(*args, thin=3, seed=5)
    assert np.array_equal(a.samples, b.samples)
    assert a.state.steps == 10 + 500 * 3
    assert 0 < a.state.accepts <= a.state.steps
    with pytest.raises(InvalidInputError):
        imhr_run(*args[:4], 0)


def test_run_invariant_to_potential_shift():
    pot = IsotropicGaussianPotential(2)
    backend = exact_gaussian_backend(pot)
    a = imhr_run(SigmoidTarget(pot), backend, [0.0, 0.0], 0, 5000, seed=6)
    b = imhr_run(SigmoidTarget(Shifted(pot, 7.25)), backend, [0.0, 0.0], 0, 5000, seed=6)
    assert np.array_equal(a.samples, b.samples)


def test_ensemble_snapshots():
    pot = IsotropicGaussianPotential(2)
    snaps, acc = imhr_ensemble(SigmoidTarget(pot), exact_gaussian_backend(pot), [1.2, -0.7], 300, [0, 4], np.random.default_rng(0))
    assert np.all(snaps[0] == [1, -1])
    assert snaps[4].shape == (300, 2) and 0 < acc <= 4 * 300
    with pytest.raises(InvalidInputError):
        imhr_ensemble(SigmoidTarget(pot), exact_gaussian_backend(pot), [0, 0], 10, [], np.random.default_rng(0))


# exact and HMC proposals


def test_exact_backend_moments():
    b = GeneratorMatrix(np.array([[2.0, 1.0], [0.0, 1.0]]))
    pot = PullbackGaussianPotential(b, 0.5, center=[1.0, 0.0])
    x = exact_gaussian_backend(pot).draw_batch(np.random.default_rng(0), 200_000)
    assert np.allclose(x.mean(axis=0), np.linalg.solve(b.entries, [1.0, 0.0]), atol=0.01)
    assert np.allclose(np.cov(x.T), pot.covariance(), atol=0.01)
    with pytest.raises(InvalidInputError):
        exact_gaussian_backend(PerfectSecurityPotential(2, 1.0))
    with pytest.raises(InvalidInputError):
        ExactGaussianBackend(2, 0.0)


def test_hmc_params_for_dimension():
    p = HMCParams.for_dimension(2)
    assert p.leapfrog_steps == 5 and p.step_size == pytest.approx(1.2)
    assert p.momentum_variance == 9.0 and p.inner_iterations == 5
    p50 = HMCParams.for_dimension(50)
    assert p50.leapfrog_steps == math.floor(5 * (2 / 50) ** 0.25)
    with pytest.raises(InvalidInputError):
        HMCParams(0, 1.0)


def test_leapfrog_reversible_and_energy():
    pot = PerfectSecurityPotential(3, perfect_security_rho_for_unit_variance(3))
    x0 = np.array([0.3, -0.5, 0.8])
    p0 = np.array([1.0, 2.0, -0.5])
    x1, p1 = leapfrog(pot, x0, p0, 0.1, 20, 9.0)
    x2, p2 = leapfrog(pot, x1, -p1, 0.1, 20, 9.0)
    assert np.allclose(x2, x0, atol=1e-10) and np.allclose(-p2, p0, atol=1e-10)

    def h(x, p):
        return pot.value(x) + 0.5 * p @ p / 9.0

    errs = []
    for eps in (0.02, 0.01):
        x1, p1 = leapfrog(pot, x0, p0, eps, int(round(0.4 / eps)), 9.0)
        errs.append(abs(h(x1, p1) - h(x0, p0)))
    # second-order integrator: halving eps cuts the energy error about fourfold
    assert errs[1] < errs[0] / 3 and errs[1] < 1e-4


def test_hmc_backend_gaussian_moments():
    pot = IsotropicGaussianPotential(2)
    x = hmc_backend(pot, HMCParams(10, 0.5, 1.0, 20)).draw_batch(np.random.default_rng(3), 20_000)
    assert np.allclose(x.mean(axis=0), 0, atol=0.05)
    assert np.allclose(x.var(axis=0), 1, atol=0.08)


def test_radial_rejection_matches_radial_cdf():
    d = 2
    pot = PerfectSecurityPotential(d, perfect_security_rho_for_unit_variance(d))
    backend = RadialRejectionBackend(pot)
    x = backend.draw_batch(np.random.default_rng(9), 100_000)
    assert backend.flagged == 0
    r = np.linalg.norm(x, axis=1)
    nu, j = 0.0, pot.j

    def dens(u):
        return (sp.jv(nu, u) / (j * j - u * u)) ** 2 * u

    edges = np.concatenate([[1e-9], np.arange(1, 2001) * math.pi])
    pieces = [integrate.quad(dens, a, b, points=[j] if a < j < b else None)[0] for a, b in zip(edges[:-1], edges[1:])]
    total = sum(pieces) + 1 / (math.pi * 3 * edges[-1] ** 3)
    for u0 in (1.0, j, 5.0, 10.0):
        cdf = integrate.quad(dens, 1e-9, u0, points=[j] if u0 > j else None, limit=200)[0] / total
        emp = float(np.mean(r / (2 * pot.rho) <= u0))
        assert abs(emp - cdf) < 4 * math.sqrt(cdf * (1 - cdf) / r.size) + 1e-4


def test_radial_rejection_rejects_truncated():
    with pytest.raises(InvalidInputError):
        RadialRejectionBackend(PerfectSecurityPotential(2, 1.0, truncate=True))


# Klein and the 1-D discrete Gaussian


def test_gram_schmidt():
    b = np.array([[1.0, 1.0], [0.0, 1.0]])
    gso, mu = gram_schmidt(b)
    assert abs(gso[:, 0] @ gso[:, 1]) < 1e-12
    assert np.allclose(np.abs(gso[:, 0]), [1, 0])
    assert mu[1, 0] == pytest.approx(1.0)


def test_klein_conditional_sigmas_and_pmf():
    params = KleinParams(GeneratorMatrix.diagonal([1.0, 2.0]), 1.0)
    assert np.allclose(params.conditional_sigmas, [1.0, 0.5])
    s = klein_sample_batch(params, np.random.default_rng(2), 100_000)
    pot = PullbackGaussianPotential(GeneratorMatrix.diagonal([1.0, 2.0]), 1.0)
    z, p = brute_pmf(pot, 12)
    assert empirical_tvd(s, z, p) < 0.01
    single = klein_sample(params, np.random.default_rng(2))
    assert single.shape == (2,) and single.dtype == np.int64


def test_klein_errors():
    with pytest.raises(InvalidInputError):
        KleinParams(GeneratorMatrix.identity(2), 1e-7)
    with pytest.raises(InvalidInputError):
        KleinParams(GeneratorMatrix.identity(2), 1.0, center=[np.nan, 0])


@pytest.mark.parametrize("center, sigma", [(0.0, 1.0), (0.5, 0.3), (-2.25, 4.0)])
def test_discrete_gaussian_table(center, sigma):
    t = DiscreteGaussianTable(center, sigma)
    z = np.arange(t.lo, t.lo + t.cdf.size)
    w = np.exp(-((z - center) ** 2) / (2 * sigma * sigma))
    assert np.allclose(t.pmf(), w / w.sum(), atol=1e-15)
    assert t.matches(center, sigma) and not t.matches(center + 1e-6, sigma)
    x = discrete_gaussian_1d(center, sigma, np.random.default_rng(0), size=100_000)
    hist = np.bincount(x - t.lo, minlength=t.cdf.size) / x.size
    assert 0.5 * np.abs(hist - t.pmf()).sum() < 0.01


def test_discrete_gaussian_small_sigma_is_nearest_integer():
    assert discrete_gaussian_1d(2.2, 1e-3, np.random.default_rng(0)) == 2
    with pytest.raises(InvalidInputError):
        DiscreteGaussianTable(0.0, 1e-9)


# RWM oracle


def test_rwm_zero_iterations_returns_start():
    pot = IsotropicGaussianPotential(2)
    s = rwm_marginal_oracle(pot, np.eye(2), [0.6, -1.4], n_samples=10, iterations=0)
    assert s.tolist() == [[1, -1]] * 10


def test_rwm_covariance_validation():
    pot = IsotropicGaussianPotential(2)
    with pytest.raises(InvalidInputError):
        rwm_marginal_oracle(pot, [[1.0, 2.0], [2.0, 1.0]], [0, 0], n_samples=10)
    with pytest.raises(InvalidInputError):
        rwm_marginal_oracle(pot, [[1.0, 0.5], [0.0, 1.0]], [0, 0], n_samples=10)


def test_rwm_marginal_and_thread_independence():
    pot = IsotropicGaussianPotential(1, 2.0)
    a = rwm_marginal_oracle(pot, [[4.0]], [0.0], n_samples=20_000, iterations=100, seed=3, threads=1)
    b = rwm_marginal_oracle(pot, [[4.0]], [0.0], n_samples=20_000, iterations=100, seed=3, threads=3)
    assert np.array_equal(a, b)
    z, p = brute_pmf(pot, 15)
    assert empirical_tvd(a, z, p) < 0.03


# sample files


def test_csv_round_trip(tmp_path):
    s = np.array([[1, -2, 3], [0, 0, 7]], dtype=np.int64)
    path = tmp_path / "s.csv"
    with open(path, "w") as fh:
        write_samples_csv(fh, s, {"seed": 1})
    text = path.read_text().splitlines()
    assert text[0] == "# seed=1" and text[1] == "z0,z1,z2"
    assert np.array_equal(read_samples_csv(path), s)


def test_lsmp_round_trip_and_validation(tmp_path):
    s = np.array([[1, -(2**40)], [3, 4], [5, 6]], dtype=np.int64)
    buf = io.BytesIO()
    write_lsmp(buf, s)
    raw = buf.getvalue()
    assert raw[:4] == b"LSMP" and len(raw) == 20 + 8 * s.size
    path = tmp_path / "s.lsmp"
    path.write_bytes(raw)
    assert np.array_equal(read_lsmp(path), s)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(InvalidInputError):
        read_lsmp(path)
    path.write_bytes(raw[:-8])
    with pytest.raises(InvalidInputError):
        read_lsmp(path)
    with pytest.raises(InvalidInputError):
        write_lsmp(io.BytesIO(), np.zeros((2, 2)))
