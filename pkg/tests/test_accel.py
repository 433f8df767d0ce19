import json
import os
import subprocess
import sys

import numpy as np
import pytest

from charcorr import _accel, _kernels

needs_numba = pytest.mark.skipif(not _accel.NUMBA_AVAILABLE, reason="numba not installed")


def _skew(rng, n, m):
    X = rng.standard_normal((n, m, m)) + 1j * rng.standard_normal((n, m, m))
    return X - np.swapaxes(X, 1, 2)


@needs_numba
@pytest.mark.parametrize("m", [1, 2, 5, 8])
def test_logdet_backends_agree(rng, m):
    A = rng.standard_normal((64, m, m)) + 1j * rng.standard_normal((64, m, m))
    la1, ph1 = _kernels.batch_logdet_numpy(A)
    la2, ph2 = _kernels.batch_logdet_numba(A)
    np.testing.assert_allclose(la1, la2, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(ph1, ph2, atol=1e-11)


@needs_numba
@pytest.mark.parametrize("m", [2, 4, 6, 10])
def test_logpf_backends_agree(rng, m):
    A = _skew(rng, 64, m)
    la1, ph1 = _kernels.batch_logpf_numpy(A)
    la2, ph2 = _kernels.batch_logpf_numba(A)
    np.testing.assert_allclose(la1, la2, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(ph1, ph2, atol=1e-11)


@pytest.mark.parametrize("m", [2, 4, 6])
def test_pf_squared_is_det(rng, m):
    A = _skew(rng, 32, m)
    la, ph = _kernels.batch_logpf(A)
    pf = ph * np.exp(la)
    np.testing.assert_allclose(pf ** 2, np.linalg.det(A), rtol=1e-10)


def test_pf_of_standard_block():
    J = np.array([[[0.0, 1.0], [-1.0, 0.0]]])
    la, ph = _kernels.batch_logpf(np.kron(np.eye(3), J[0])[None])
    assert la[0] == pytest.approx(0.0) and ph[0] == pytest.approx(1.0)


def test_singular_inputs():
    Z = np.zeros((2, 4, 4))
    for fn in (_kernels.batch_logdet_numpy, _kernels.batch_logpf_numpy):
        la, ph = fn(Z)
        assert np.all(np.isneginf(la)) and np.all(ph == 0)
    if _accel.NUMBA_AVAILABLE:
        for fn in (_kernels.batch_logdet_numba, _kernels.batch_logpf_numba):
            la, ph = fn(Z)
            assert np.all(np.isneginf(la))


def test_shape_validation():
    with pytest.raises(ValueError):
        _kernels.batch_logdet(np.zeros((2, 3, 4)))
    with pytest.raises(ValueError):
        _kernels.batch_logpf(np.zeros((2, 3, 3)))
    la, ph = _kernels.batch_logdet(np.zeros((3, 0, 0)))
    assert np.all(la == 0) and np.all(ph == 1)


def _run(flag):
    env = dict(os.environ)
    env.pop(_accel.ENV_FLAG, None)
    if flag is not None:
        env[_accel.ENV_FLAG] = flag
    code = (
        "import json; from charcorr import _accel\n"
        "from charcorr.correlators import CorrelatorSpec, mc_correlator\n"
        "s = CorrelatorSpec('ginse', 2, 1, z=[0.5, 0.3+0.2j])\n"
        "e = mc_correlator(s, 4000, 9)\n"
        "print(json.dumps([_accel.backend(), e.mean.real, e.mean.imag]))\n"
    )
    p = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env, check=True)
    return json.loads(p.stdout)


def test_env_flag_selects_numpy_and_results_agree():
    off = _run("1")
    assert off[0] == "numpy"
    on = _run(None)
    assert on[0] == ("numba" if _accel.NUMBA_AVAILABLE else "numpy")
    assert on[1] == pytest.approx(off[1], rel=1e-10)
    assert on[2] == pytest.approx(off[2], rel=1e-10, abs=1e-12)
    assert _run("0")[0] == on[0]
