"""The compiled kernels agree with their numpy fallbacks."""

import os
import subprocess
import sys

import numpy as np
import pytest

from artifact import kernels as kn

SRC = os.path.join(os.path.dirname(__file__), "..", "src")


@pytest.mark.parametrize("code,p,q", [(kn.PHI_POWER, 3, 0), (kn.PHI_MC, 2, 2), (kn.PHI_EXP, 2, 2),
                                      (kn.PHI_SUM, 3, 1.5), (kn.PHI_RATIONAL, 3, 2), (kn.PHI_RATIONAL, 2.5, 2.5)])
def test_phi_backends_agree(code, p, q):
    t = np.logspace(-6, 1, 300)
    y = kn.phi_family(code, p, q, t)
    assert np.allclose(y, kn._np_phi(code, p, q, t), rtol=1e-13, atol=0)
    ok = np.isfinite(y)
    assert np.allclose(kn.phi_inv_family(code, p, q, y[ok]), kn._np_phi_inv(code, p, q, y[ok]), rtol=1e-12)


def test_quadrature_backends_agree():
    rng = np.random.default_rng(3)
    x = np.concatenate(([0.0], np.cumsum(rng.uniform(0.5, 1.5, 999)))) / 1000
    W, J = kn.cumint_weights(x)
    W2, J2 = kn._np_cumint_weights(x)
    assert np.allclose(W, W2, rtol=1e-14, atol=1e-300) and np.array_equal(J, J2)
    y = np.cos(3 * x)
    assert np.allclose(kn.cumint_apply(W, J, y), kn._np_cumint_apply(W, J, y), rtol=1e-13, atol=1e-15)


def test_delta_bisect_backends_agree():
    x = np.linspace(0, 1, 400)
    W, J = kn.cumint_weights(x)
    qw = kn.total_weights(W, J, x.size)
    P, S = 1 + x, np.sin(x)
    a = kn.delta_bisect(kn.PHI_POWER, 2.0, 2.0, P, S, qw, 0.5, -10.0, 10.0)
    b = kn._np_delta_bisect(kn.PHI_POWER, 2.0, 2.0, P, S, qw, 0.5, -10.0, 10.0, 200)
    assert np.allclose(np.atleast_1d(a), np.atleast_1d(b), rtol=1e-12)


def test_environment_switch_selects_numpy():
    env = dict(os.environ, ARTIFACT_DISABLE_NUMBA="1", PYTHONPATH=SRC)
    out = subprocess.run([sys.executable, "-c", "from artifact import kernels; print(kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
