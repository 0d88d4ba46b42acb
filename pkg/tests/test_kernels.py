import os
import subprocess
import sys

import numpy as np
import pytest

from latticemc import kernels
from latticemc import _kernels_py
from latticemc.samplers.klein import KleinParams
from latticemc.lattice import GeneratorMatrix
from latticemc.seeding import splitmix64, stream_seed, worker_count

IMPLS = kernels.implementations()
needs_cython = pytest.mark.skipif("cython" not in IMPLS, reason="compiled extension not built")


def test_selected_backend_is_consistent():
    assert kernels.BACKEND in IMPLS
    assert kernels.COMPILED == (kernels.BACKEND == "cython")


def test_imh_select_examples():
    idx, acc = _kernels_py.imh_select([0.0, -1.0, np.nan, 2.0], np.log([0.5, 0.5, 0.1, 0.9]), 0.0)
    # step 0: diff 0 -> accept; step 1: log 0.5 > -1 -> reject; NaN -> reject; step 3: accept
    assert idx.tolist() == [0, 0, 0, 3]
    assert acc == 2
    idx, acc = _kernels_py.imh_select([-50.0], [0.0], 0.0)
    assert idx.tolist() == [-1] and acc == 0


@needs_cython
def test_imh_select_bit_identical():
    rng = np.random.default_rng(0)
    w = rng.normal(size=5000)
    w[rng.random(5000) < 0.05] = np.nan
    log_u = np.log(rng.random(5000))
    log_u[:3] = -np.inf
    a = IMPLS["python"].imh_select(w, log_u, 0.3)
    b = IMPLS["cython"].imh_select(w, log_u, 0.3)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]
    a = IMPLS["python"].imh_select(w, log_u, np.nan)
    b = IMPLS["cython"].imh_select(w, log_u, np.nan)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


@needs_cython
@pytest.mark.parametrize("center, sigma", [(0.0, 1.0), (0.37, 0.2), (-5.5, 3.0), (1e3 + 0.25, 0.7)])
def test_dgauss_bit_identical(center, sigma):
    for u in np.linspace(0, 1, 257)[:-1]:
        assert IMPLS["python"].dgauss_inverse_cdf(center, sigma, u) == IMPLS["cython"].dgauss_inverse_cdf(center, sigma, u)


@needs_cython
def test_klein_batch_bit_identical():
    b = GeneratorMatrix(np.array([[2.0, 0.5, 0.1], [0.0, 1.5, -0.3], [0.2, 0.0, 1.0]]))
    params = KleinParams(b, 1.3, center=[0.1, -0.4, 2.0])
    u = np.random.default_rng(1).random((500, 3))
    c = np.ascontiguousarray
    args = (c(params.basis.entries.T), c(params.gso.T), c(params.gso_sqnorm), c(params.center), params.sigma, u)
    assert np.array_equal(IMPLS["python"].klein_batch(*args), IMPLS["cython"].klein_batch(*args))


def test_splitmix64_reference_values():
    # first outputs of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert splitmix64(0x9E3779B97F4A7C15) == 0x6E789E6AA1B965F4
    assert stream_seed(5, 3) == splitmix64(8)
    assert stream_seed((1 << 64) - 1, 1) == splitmix64(0)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("LS_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("LS_THREADS", "0")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.setenv("LS_THREADS", "many")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.delenv("LS_THREADS")
    assert worker_count() >= 1


def test_pure_python_fallback_selected_by_env():
    env = dict(os.environ, LATTICEMC_PURE_PYTHON="1")
    res = subprocess.run(
        [sys.executable, "-c", "import latticemc.kernels as k; print(k.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert res.stdout.strip() == "python"
