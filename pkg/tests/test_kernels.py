import os
import subprocess
import sys

import numpy as np
import pytest

from rittlab import _kernels as K

pytestmark = pytest.mark.skipif(not K.NUMBA_KERNELS, reason="numba not installed")


def _cx(rng, *shape):
    return np.ascontiguousarray(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _inputs(rng):
    A = _cx(rng, 9, 9) / 6
    U = np.triu(A)
    return {
        "hessenberg": (A,),
        "hqr_eigvals": (K.hessenberg_np(A), 900),
        "tri_inverse_stack": (U, _cx(rng, 7) + 2.0),
        "tri_resolvent_sum": (U, _cx(rng, 7) + 2.0, _cx(rng, 7)),
        "tri_sylvester": (U, np.triu(_cx(rng, 4, 4)) + 3 * np.eye(4), _cx(rng, 9, 4)),
        "cauchy_double": (_cx(rng, 6, 5), _cx(rng, 8, 6), _cx(rng, 8, 5)),
        "rademacher_moment": (_cx(rng, 6, 3), 3.0),
    }


@pytest.mark.parametrize("name", sorted(K.NUMPY_KERNELS))
def test_numba_matches_numpy(name, rng):
    args = _inputs(rng)[name]
    fast = K.NUMBA_KERNELS[name](*args)
    slow = K.NUMPY_KERNELS[name](*args)
    if name == "hqr_eigvals":
        assert fast[1] == slow[1] == -1
        fast, slow = np.sort_complex(fast[0]), np.sort_complex(slow[0])
    elif name == "hessenberg":
        # Householder phases agree, so the reductions match entrywise
        assert np.allclose(np.tril(fast, -2), 0) and np.allclose(np.tril(slow, -2), 0)
    assert np.allclose(fast, slow, atol=1e-11)


def test_hessenberg_is_similar(rng):
    A = _cx(rng, 8, 8)
    H = K.hessenberg(A)
    assert np.allclose(np.sort_complex(np.linalg.eigvals(H)), np.sort_complex(np.linalg.eigvals(A)))


def test_tri_sylvester_solves(rng):
    A = np.triu(_cx(rng, 5, 5))
    B = np.triu(_cx(rng, 3, 3)) + 4 * np.eye(3)
    C = _cx(rng, 5, 3)
    X = K.tri_sylvester(A, B, C)
    assert np.allclose(A @ X - X @ B, C, atol=1e-12)


def test_rademacher_enumeration():
    # four sign patterns of eps_0 + eps_1: |2|^4, 0, 0, |2|^4
    assert K.rademacher_moment(np.array([[1.0], [1.0]]), 4.0) == pytest.approx(8.0)


def test_env_flag_selects_numpy():
    env = dict(os.environ, RITTLAB_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import rittlab; print(rittlab.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
