"""Ergodic decomposition, square functions and isometric dilations (p = 2 realization).

The dilation space of a single operator on ``X = C^n`` is stored as an array
of shape ``(N + M, n)``: rows ``0..N-1`` hold the kernel components, rows
``N..N+M-1`` the cyclic Rademacher coordinates ``eps_0 .. eps_{M-1}``.
Rademacher functions are orthonormal, so at ``p = 2`` the norm of such an
element is the Frobenius norm of the array.
"""
import functools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import _kernels
from .errors import (DefectiveUnimodularEigenvalue, NonCommuting, NotConverged,
                     NotPowerBounded, ResourceGuard, TooLarge)
from .holofun import reciprocal_bound, reciprocal_coeffs
from .linalg import SchurResolvent, as_matrix, commutator_norm, eigvals, frac_power
from .regions import circle, integrate

PROJ_TOL = 1e-10
POWER_CAP = 1e4
POWER_STEPS = 200
SQF_TOL = 1e-10
EXACT_MAX_M = 20
MC_SAMPLES = 100_000
JOINT_CAP = 1 << 22
TAIL_STEPS = 200_000
TAIL_NOISE = 1e-14
COMM_TOL = 1e-14


# -- mean-ergodic decomposition -------------------------------------------------------------

@dataclass(frozen=True)
class ErgodicDecomposition:
    """``projections[j]`` onto ``Ker(I - conj(xi_j) T)``; the last onto the closed range part."""

    projections: tuple
    radii: tuple

    def check(self, T, tol=PROJ_TOL):
        """Largest violation of idempotence, annihilation, completeness and commutation."""
        P = self.projections
        n = P[0].shape[0]
        scale = max(1.0, max(np.linalg.norm(p, 2) for p in P))
        err = np.linalg.norm(sum(P) - np.eye(n), 2)
        for k, p in enumerate(P):
            err = max(err, np.linalg.norm(p @ p - p, 2), np.linalg.norm(p @ T - T @ p, 2))
            for q in P[k + 1:]:
                err = max(err, np.linalg.norm(p @ q, 2), np.linalg.norm(q @ p, 2))
        return err / scale


def power_bound(T, steps=POWER_STEPS):
    """``max_{n <= steps} ||T^n||_2``."""
    best, P = 1.0, np.eye(T.shape[0], dtype=complex)
    for _ in range(steps):
        P = P @ T
        best = max(best, np.linalg.norm(P, 2))
        if best > POWER_CAP:
            break
    return best


def riesz_projection(S, center, radius, tol=1e-13):
    """``(1/2 pi i) \\oint R(z, T) dz`` over the circle ``|z - center| = radius``."""
    res = integrate(circle(center, radius), lambda z, w: S.weighted_sum(z, w / (2j * math.pi)),
                    tol, min_level=2)
    return res.value


def ergodic_decompose(T, cfg):
    T = as_matrix(T, "T")
    n = T.shape[0]
    if power_bound(T) > POWER_CAP:
        raise NotPowerBounded(f"sup ||T^n|| over n <= {POWER_STEPS} exceeds {POWER_CAP:g}")
    lam = eigvals(T)
    S = SchurResolvent(T)
    projs, radii = [], []
    for xi in cfg.xi:
        others = lam[np.abs(lam - xi) > 1e-8]
        dist = float(np.min(np.abs(others - xi))) if len(others) else 1.0
        rad = min(cfg.min_gap / 4 if cfg.N > 1 else 0.5, dist / 2)
        if np.any(np.abs(lam - xi) <= 1e-8):
            P = riesz_projection(S, xi, rad)
            if np.linalg.norm((T - xi * np.eye(n)) @ P, 2) > 1e-8 * max(1.0, np.linalg.norm(P, 2)):
                raise DefectiveUnimodularEigenvalue(f"eigenvalue {xi} is not semisimple")
        else:
            P = np.zeros((n, n), dtype=complex)
        projs.append(P)
        radii.append(rad)
    projs.append(np.eye(n) - sum(projs))
    return ErgodicDecomposition(tuple(projs), tuple(radii))


def range_factor(T, cfg, alpha):
    """``prod_j (I - conj(xi_j) T)^alpha``."""
    n = T.shape[0]
    B = np.eye(n, dtype=complex)
    for xi in cfg.xi:
        B = B @ frac_power(np.eye(n) - np.conj(xi) * T, alpha)
    return B


# -- square functions ---------------------------------------------------------------------------

def square_function_terms(T, cfg, x, alpha=1.0, K=200):
    """Squared summands ``k^{2 alpha - 1} ||T^{k-1} B^alpha x||^2`` for ``k = 1..K``."""
    T = as_matrix(T, "T")
    v = range_factor(T, cfg, alpha) @ np.asarray(x, dtype=complex)
    out = np.empty(K)
    for k in range(1, K + 1):
        out[k - 1] = k ** (2 * alpha - 1) * np.vdot(v, v).real
        v = T @ v
    return out


def square_function(T, cfg, x, alpha=1.0, K=None, tol=SQF_TOL, max_depth=1_000_000):
    """Truncated square function ``sqrt(sum_k k^{2 alpha - 1} ||T^{k-1} B^alpha x||^2)``.

    With ``K`` given the sum stops there and :class:`NotConverged` is raised
    if the last increment exceeds ``tol`` (relative to ``max(1, value)``).
    With ``K=None`` the depth grows until ten consecutive increments are
    below that threshold.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    T = as_matrix(T, "T")
    v = range_factor(T, cfg, alpha) @ np.asarray(x, dtype=complex)
    total, calm, k = 0.0, 0, 0
    limit = max_depth if K is None else K
    inc = 0.0
    while k < limit:
        k += 1
        term = k ** (2 * alpha - 1) * np.vdot(v, v).real
        new = total + term
        inc = math.sqrt(new) - math.sqrt(total)
        total = new
        v = T @ v
        calm = calm + 1 if inc <= tol * max(1.0, math.sqrt(total)) else 0
        if K is None and calm >= 10:
            return math.sqrt(total)
    if inc > tol * max(1.0, math.sqrt(total)):
        raise NotConverged(f"square function increment {inc:.3g} at depth {k}")
    return math.sqrt(total)


# -- Rademacher blocks ------------------------------------------------------------------------

@dataclass(frozen=True)
class RademacherBlock:
    coords: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coords, dtype=complex))
        object.__setattr__(self, "coords", c)

    @property
    def M(self):
        return self.coords.shape[0]

    @property
    def X_dim(self):
        return self.coords.shape[1]

    def scaled(self, a):
        return RademacherBlock(np.asarray(a)[:, None] * self.coords)


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float


def rad_norm(block, p=2, mode="exact", samples=MC_SAMPLES, rng=None):
    """``(E || sum_k eps_k x_k ||_p^p)^{1/p}`` with ``||.||_p`` the coordinate norm on ``X``.

    ``p = 2`` uses orthonormality. ``mode="montecarlo"`` returns an
    :class:`MCEstimate`.
    """
    c = block.coords
    if p == 2 and mode == "exact":
        return float(np.linalg.norm(c))
    if mode == "exact":
        if block.M > EXACT_MAX_M:
            raise TooLarge(f"exact Rademacher average needs M <= {EXACT_MAX_M}, got {block.M}")
        return _kernels.rademacher_moment(c, p) ** (1.0 / p)
    if mode != "montecarlo":
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(0) if rng is None else rng
    vals = np.empty(samples)
    for start in range(0, samples, 8192):
        k = min(8192, samples - start)
        eps = rng.choice((-1.0, 1.0), size=(k, block.M))
        vals[start:start + k] = np.sum(np.abs(eps @ c) ** p, axis=1)
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(samples))
    # delta method for the p-th root
    root = mean ** (1.0 / p)
    return MCEstimate(root, root * se / (p * mean) if mean > 0 else 0.0)


# -- single-operator dilation -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DilationModel:
    cfg: object
    T: np.ndarray
    decomposition: ErgodicDecomposition
    A: np.ndarray
    K: int
    M: int
    a: np.ndarray
    J: np.ndarray
    Jtilde: np.ndarray
    p: float = 2
    reach: int = 0

    @property
    def N(self):
        return self.cfg.N

    @property
    def n(self):
        return self.T.shape[0]

    @property
    def dims(self):
        return {"kernel_blocks": self.N, "cyclic": self.M, "fiber": self.n,
                "total": (self.N + self.M) * self.n}

    @property
    def Q(self):
        return self.Jtilde.conj().T

    def V(self, Y, power=1):
        """``V^power`` applied to ``Y`` of shape ``(N + M, n, ...)``."""
        out = np.empty_like(Y)
        d = np.asarray(self.cfg.xi) ** power
        out[:self.N] = d.reshape((-1,) + (1,) * (Y.ndim - 1)) * Y[:self.N]
        out[self.N:] = np.roll(Y[self.N:], -2 * power, axis=0)
        return out

    def embed(self):
        """``J`` as an array of shape ``(N + M, n, n)`` acting on column vectors."""
        return self.J.reshape(self.N + self.M, self.n, self.n)

    def power(self, k):
        """``Q V^k J``."""
        Y = self.V(self.embed(), k).reshape(-1, self.n)
        return self.Q @ Y

    def isometry_defect(self, count=100, seed=0):
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(count):
            y = rng.standard_normal((self.N + self.M, self.n)) + 1j * rng.standard_normal((self.N + self.M, self.n))
            worst = max(worst, abs(np.linalg.norm(self.V(y)) - np.linalg.norm(y)) / np.linalg.norm(y))
        return worst

    @functools.cached_property
    def _tail_suffix(self):
        """Suffix sums ``S_k = sum_{j >= k} ||T^j A^2 P||_F``.

        The Frobenius norm dominates the operator norm and is cheap, so the
        long tails of spectra close to the circle stay affordable.
        """
        P = self.decomposition.projections[-1]
        W = self.A @ self.A @ P
        terms = []
        peak = 0.0
        while len(terms) < TAIL_STEPS:
            t = math.sqrt(float(np.sum(np.abs(W) ** 2)))
            terms.append(t)
            peak = max(peak, t)
            # below this the iterate is rounding left on the unimodular eigenvectors
            if t <= TAIL_NOISE * peak or t < 1e-300:
                break
            W = self.T @ W
        else:
            # geometric remainder from the decay rate of the last stretch
            rate = (terms[-1] / max(terms[-1001], 1e-300)) ** 1e-3
            terms[-1] += terms[-1] * rate / (1.0 - rate) if rate < 1.0 else math.inf
        return np.cumsum(terms[::-1])[::-1]

    def tail_bound(self, k, floor=1e-12):
        """Bound on ``||Q V^k J - T^k||`` from the truncated reciprocal series."""
        # J carries ``reach`` pairs, so V^k J still meets all 2K weights while k <= reach - K
        start = 2 * min(self.K, max(self.reach - k, 0)) + k
        suffix = self._tail_suffix
        total = float(suffix[start]) if start < len(suffix) else 0.0
        scale = max(1.0, np.linalg.norm(self.J, 2) * np.linalg.norm(self.Jtilde, 2))
        return reciprocal_bound(self.cfg) * total + floor * scale


def build_dilation(T, cfg, K=60, M=None, p=2, n_max=8):
    """Assemble ``J``, ``J~`` and ``V`` so that ``T^k ~= Q V^k J`` with ``Q = J~^*``."""
    if p != 2:
        raise ValueError("only the p = 2 realization is built")
    T = as_matrix(T, "T")
    M = 2 * (K + n_max) + 2 if M is None else M
    if M < 2 * (K + n_max) + 2:
        raise ValueError(f"cyclic length M={M} too short for K={K}, n_max={n_max}")
    n, N = T.shape[0], cfg.N
    dec = ergodic_decompose(T, cfg)
    A = range_factor(T, cfg, 0.5)
    a = reciprocal_coeffs(cfg, 2 * K)
    P = dec.projections[-1]
    J = np.zeros((N + M, n, n), dtype=complex)
    Jt = np.zeros((N + M, n, n), dtype=complex)
    for j in range(N):
        J[j] = dec.projections[j]
        Jt[j] = dec.projections[j].conj().T
    fwd = A @ P
    back = (A @ P).conj().T
    for k in range(K + n_max):
        J[N + 2 * k] = fwd
        J[N + 2 * k + 1] = T @ fwd
        if k < K:
            Jt[N + 2 * k] = np.conj(a[2 * k]) * back
            Jt[N + 2 * k + 1] = np.conj(a[2 * k + 1]) * back
        fwd = T @ fwd
        back = T.conj().T @ back
    return DilationModel(cfg, T, dec, A, K, M, a, J.reshape(-1, n), Jt.reshape(-1, n), p, K + n_max)


@dataclass(frozen=True)
class DilationReport:
    errors_by_n: tuple
    tail_bound: tuple
    isometry_check: float
    dims: dict
    ok: bool

    def to_json(self):
        return {"errors_by_n": list(self.errors_by_n), "tail_bound": list(self.tail_bound),
                "isometry_check": self.isometry_check, "dims": self.dims, "ok": self.ok}


def verify_dilation(model, n_max=8):
    errs, bounds = [], []
    Tk = np.eye(model.n, dtype=complex)
    for k in range(n_max + 1):
        errs.append(float(np.linalg.norm(model.power(k) - Tk, 2)))
        bounds.append(float(model.tail_bound(k)))
        Tk = model.T @ Tk
    iso = model.isometry_defect()
    ok = all(e <= b for e, b in zip(errs, bounds)) and iso < 1e-14
    return DilationReport(tuple(errs), tuple(bounds), iso, model.dims, ok)


# -- joint dilation ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class JointDilation:
    first: DilationModel
    second: DilationModel

    @property
    def dims(self):
        m1, m2 = self.first, self.second
        return {"outer": m1.N + m1.M, "inner": m2.N + m2.M, "fiber": m1.n,
                "total": (m1.N + m1.M) * (m2.N + m2.M) * m1.n}

    def embed(self):
        """``J = (I (x) J_2) J_1`` with shape ``(L1, L2, n, n)``."""
        m1, m2 = self.first, self.second
        J1 = m1.embed()
        J2 = m2.embed()
        return np.einsum("bij,ajk->abik", J2, J1)

    def U1(self, Y, power=1):
        return self.first.V(Y, power)

    def U2(self, Y, power=1):
        return np.moveaxis(self.second.V(np.moveaxis(Y, 1, 0), power), 0, 1)

    def power(self, i1, i2):
        """``Q U1^i1 U2^i2 J`` with ``Q = Q_1 (I (x) Q_2)``."""
        m1, m2 = self.first, self.second
        Y = self.U1(self.U2(self.embed(), i2), i1)
        Jt1 = m1.Jtilde.reshape(m1.N + m1.M, m1.n, m1.n)
        Jt2 = m2.Jtilde.reshape(m2.N + m2.M, m2.n, m2.n)
        inner = np.einsum("bji,abjk->aik", Jt2.conj(), Y)
        return np.einsum("aji,ajk->ik", Jt1.conj(), inner)

    def tail_bound(self, i1, i2):
        m1, m2 = self.first, self.second
        T2p = np.linalg.norm(np.linalg.matrix_power(m2.T, i2), 2)
        c1 = np.linalg.norm(m1.J, 2) * np.linalg.norm(m1.Jtilde, 2)
        return m1.tail_bound(i1) * T2p + c1 * m2.tail_bound(i2)


def build_joint_dilation(T1, T2, cfg, K=60, M=None, p=2, n_max=8, cap=JOINT_CAP):
    T1 = as_matrix(T1, "T1")
    T2 = as_matrix(T2, "T2")
    scale = max(1.0, np.linalg.norm(T1, 2) * np.linalg.norm(T2, 2))
    if commutator_norm(T1, T2) > 1e-10 * scale:
        raise NonCommuting("T1 and T2 do not commute")
    M = 2 * (K + n_max) + 2 if M is None else M
    n = T1.shape[0]
    total = (cfg.N + M) ** 2 * n * n
    if total > cap:
        raise ResourceGuard(f"joint dilation needs {total} entries (cap {cap})")
    return JointDilation(build_dilation(T1, cfg, K, M, p, n_max),
                         build_dilation(T2, cfg, K, M, p, n_max))


@dataclass(frozen=True)
class JointReport:
    errors: dict
    tail_bound: dict
    reduces_to_single: float
    commute_defect: float
    dims: dict
    ok: bool = field(default=False)

    def to_json(self):
        return {"errors_by_n": self.errors, "tail_bound": self.tail_bound,
                "reduces_to_single": self.reduces_to_single,
                "isometry_check": self.commute_defect, "dims": self.dims, "ok": self.ok}


def verify_joint_dilation(jd, n_max=8, seed=0):
    errs, bounds = {}, {}
    ok = True
    for i1 in range(n_max + 1):
        for i2 in range(n_max + 1 - i1):
            target = np.linalg.matrix_power(jd.first.T, i1) @ np.linalg.matrix_power(jd.second.T, i2)
            e = float(np.linalg.norm(jd.power(i1, i2) - target, 2))
            b = float(jd.tail_bound(i1, i2))
            errs[f"{i1},{i2}"] = e
            bounds[f"{i1},{i2}"] = b
            ok &= e <= b
    red = max(float(np.linalg.norm(jd.power(k, 0) - jd.first.power(k), 2)) for k in range(n_max + 1))
    rng = np.random.default_rng(seed)
    shape = (jd.dims["outer"], jd.dims["inner"], jd.dims["fiber"])
    Y = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    # the index actions commute exactly; only the unimodular phases round differently
    comm = float(np.max(np.abs(jd.U1(jd.U2(Y)) - jd.U2(jd.U1(Y)))))
    ok = bool(ok and red <= 1e-10 and comm < COMM_TOL)
    return JointReport(errs, bounds, red, comm, jd.dims, ok)


# -- shift norms ---------------------------------------------------------------------------------

def shift_norm_p2(phi, grid=512, rtol=1e-6):
    """``sup_{T^2} |phi|``, the norm of ``phi(S1, S2)`` on ``l^2(Z x Z)``."""
    c = np.asarray(phi.coeffs, dtype=complex)
    pad = np.zeros((grid, grid), dtype=complex)
    pad[:c.shape[0], :c.shape[1]] = c
    vals = np.abs(np.fft.ifft2(pad) * grid * grid)
    best = float(vals.max())
    th = 2 * np.pi * np.arange(grid) / grid
    idx = np.argsort(vals.ravel())[-5:]

    def neg(t):
        return -abs(phi(np.exp(1j * t[0]), np.exp(1j * t[1])))

    for k in idx:
        i, j = np.unravel_index(k, vals.shape)
        res = scipy.optimize.minimize(neg, [th[i], th[j]], method="Nelder-Mead",
                                      options={"xatol": 1e-10, "fatol": rtol * best * 1e-3})
        best = max(best, -float(res.fun))
    return best


__all__ = [
    "DilationModel", "DilationReport", "ErgodicDecomposition", "JointDilation", "JointReport",
    "MCEstimate", "RademacherBlock", "build_dilation", "build_joint_dilation",
    "ergodic_decompose", "power_bound", "rad_norm", "range_factor", "shift_norm_p2",
    "square_function", "square_function_terms", "verify_dilation", "verify_joint_dilation",
]
