import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rittlab import _kernels as K
from rittlab.dilation import RademacherBlock, build_dilation, rad_norm
from rittlab.holofun import BivariatePoly, polynomial_split, reciprocal_coeffs, vanishing_poly
from rittlab.linalg import frac_power, resolvent
from rittlab.regions import SpectralConfig, StolzRegion, sample_interior

SETTINGS = settings(max_examples=40, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])
finite = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw, max_points=3):
    n = draw(st.integers(1, max_points))
    phase = draw(st.floats(0.0, 2 * math.pi))
    jitter = draw(st.lists(st.floats(-0.05, 0.05), min_size=n, max_size=n))
    xi = [np.exp(1j * (phase + 2 * math.pi * k / n + jitter[k])) for k in range(n)]
    r = draw(st.floats(0.6, 0.75))
    s = draw(st.floats(r + 0.05, 0.95))
    return SpectralConfig(xi, r, s)


def complex_arrays(shape):
    return st.tuples(arrays(float, shape, elements=finite),
                     arrays(float, shape, elements=finite)).map(lambda t: t[0] + 1j * t[1])


@SETTINGS
@given(cfg=configs(), seed=st.integers(0, 2 ** 31))
def test_stolz_monotone_in_radius(cfg, seed):
    small, large = StolzRegion(cfg, cfg.r), StolzRegion(cfg, cfg.s)
    pts = sample_interior(small, 50, np.random.default_rng(seed))
    assert large.contains(pts).all()


@SETTINGS
@given(theta=st.floats(0.0, 2 * math.pi), s=st.floats(0.05, 0.95), seed=st.integers(0, 2 ** 31))
def test_local_pullback_lands_in_sector(theta, s, seed):
    xi = np.exp(1j * theta)
    region = StolzRegion(SpectralConfig([xi], s / 2, s), s)
    z = sample_interior(region, 60, np.random.default_rng(seed))
    w = 1 - np.conj(xi) * z
    assert np.all(np.abs(np.angle(w)) < math.asin(s) + 1e-12)


@SETTINGS
@given(cfg=configs(), coeffs=st.integers(1, 5).flatmap(lambda d: complex_arrays((d, 4))))
def test_split_partitions_and_vanishes(cfg, coeffs):
    phi = BivariatePoly(coeffs)
    parts = polynomial_split(phi, cfg)
    total = parts[0] + parts[1] + parts[2] + parts[3]
    d = total.degrees
    assert np.abs(total.padded(*d) - phi.padded(*d)).max() < 1e-11
    w = np.array([0.3 + 0.2j, -1.5, 2j])
    for x in cfg.xi:
        scale = 1 + np.abs(parts[3].coeffs).sum()
        assert np.abs(parts[3](x, w)).max() < 1e-9 * scale
        assert np.abs(parts[3](w, x)).max() < 1e-9 * scale


@SETTINGS
@given(cfg=configs(), M=st.integers(1, 60))
def test_reciprocal_convolution(cfg, M):
    a = reciprocal_coeffs(cfg, M)
    conv = np.convolve(a, vanishing_poly(cfg))[:M]
    want = np.zeros(M)
    want[0] = 1.0
    assert np.abs(conv - want).max() < 1e-9


@settings(max_examples=15, deadline=None)
@given(diag=arrays(float, 3, elements=st.floats(-0.9, 0.9)), seed=st.integers(0, 2 ** 31),
       power=st.integers(1, 5))
def test_shift_is_isometric(diag, seed, power):
    model = build_dilation(np.diag(diag), SpectralConfig([1.0], 0.3, 0.6), K=8, n_max=2)
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((model.N + model.M, model.n)) + 1j * rng.standard_normal((model.N + model.M, model.n))
    assert abs(np.linalg.norm(model.V(Y, power)) - np.linalg.norm(Y)) <= 1e-13 * np.linalg.norm(Y)


@SETTINGS
@given(T=complex_arrays((4, 4)), z=st.complex_numbers(min_magnitude=5, max_magnitude=10),
       w=st.complex_numbers(min_magnitude=5, max_magnitude=10))
def test_resolvent_identity(T, z, w):
    Rz, Rw = resolvent(T, z), resolvent(T, w)
    assert np.abs(Rz - Rw - (w - z) * Rz @ Rw).max() < 1e-12


@settings(max_examples=300, deadline=None)
@given(E=complex_arrays((4, 4)), alpha=st.sampled_from([0.5, 0.25]))
def test_frac_power_composes(E, alpha):
    A = np.eye(4) + 0.2 * E
    B = frac_power(A, alpha)
    assert np.abs(np.linalg.matrix_power(B, round(1 / alpha)) - A).max() < 1e-10


@SETTINGS
@given(v=complex_arrays((5, 2)), scal=arrays(float, 5, elements=st.floats(-1, 1)),
       p=st.sampled_from([2.0, 4.0]))
def test_kahane_contraction(v, scal, p):
    assert rad_norm(RademacherBlock(scal[:, None] * v), p) <= rad_norm(RademacherBlock(v), p) * (1 + 1e-12) + 1e-15


@settings(max_examples=20, deadline=None)
@given(U=complex_arrays((6, 6)), nodes=complex_arrays(16))
def test_kernels_agree(U, nodes):
    if not K.NUMBA_KERNELS:
        return
    U = np.ascontiguousarray(np.triu(U))
    nodes = 3.0 + nodes
    a = K.NUMBA_KERNELS["tri_inverse_stack"](U, nodes)
    b = K.NUMPY_KERNELS["tri_inverse_stack"](U, nodes)
    assert np.abs(a - b).max() <= 1e-10 * max(1.0, np.abs(b).max())
