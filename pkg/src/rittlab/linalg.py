"""Dense complex linear algebra: resolvents, spectra, norms, fractional powers.

Matrices are plain ``numpy`` complex arrays. :func:`as_matrix` validates
shape and finiteness; everything else assumes validated input.
"""
import json
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _kernels
from .errors import (BranchViolation, DefectiveZero, NoConvergence,
                     RittlabError, SingularResolvent)

PIVOT_RTOL = 1e-13
EIG_TOL = 1e-8
CLUSTER_RTOL = 0.05


def as_matrix(a, name="matrix"):
    """Return ``a`` as a square, finite complex128 array."""
    m = np.array(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def allclose(a, b, tol):
    """Tolerance equality of matrices in max-entry norm."""
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)), initial=0.0)) <= tol


# -- matrix file format -----------------------------------------------------

def matrix_to_json(T):
    T = as_matrix(T)
    return {
        "n": int(T.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in T],
    }


def matrix_from_json(doc):
    n = int(doc["n"])
    rows = doc["entries"]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError("entries must be an n x n array of [re, im] pairs")
    T = np.array([[complex(re, im) for re, im in row] for row in rows])
    return as_matrix(T.reshape(n, n))


def load_matrix(path):
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def dump_matrix(T, path):
    with open(path, "w") as fh:
        json.dump(matrix_to_json(T), fh, indent=1)


# -- resolvent --------------------------------------------------------------

def resolvent(T, z):
    """R(z, T) = (zI - T)^{-1} via a pivoted LU factorisation.

    Raises
    ------
    SingularResolvent
        If a pivot falls below ``1e-13 * ||T||_1`` (``z`` is effectively
        an eigenvalue).
    """
    T = as_matrix(T)
    n = T.shape[0]
    M = z * np.eye(n) - T
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    thresh = PIVOT_RTOL * np.linalg.norm(T, 1)
    if np.min(np.abs(np.diag(lu))) <= thresh:
        raise SingularResolvent(f"z = {z} is numerically in the spectrum")
    return scipy.linalg.lu_solve((lu, piv), np.eye(n), check_finite=False)


class SchurResolvent:
    """Resolvents of a fixed matrix at many points through one Schur form.

    T = Z U Z^*, so R(z, T) = Z (zI - U)^{-1} Z^* and each point costs one
    triangular inversion.
    """

    def __init__(self, T):
        self.T = as_matrix(T)
        self.U, self.Z = scipy.linalg.schur(self.T, output="complex")
        self.diag = np.diag(self.U).copy()
        self.thresh = PIVOT_RTOL * max(np.linalg.norm(self.T, 1), np.finfo(float).tiny)

    def _check(self, nodes):
        gap = np.min(np.abs(nodes[:, None] - self.diag[None, :]), initial=np.inf)
        if gap <= self.thresh:
            raise SingularResolvent("quadrature node on the spectrum")

    def stack(self, nodes):
        nodes = np.asarray(nodes, dtype=complex)
        self._check(nodes)
        inv = _kernels.tri_inverse_stack(self.U, nodes)
        return self.Z @ inv @ self.Z.conj().T

    def weighted_sum(self, nodes, coeffs):
        """Sum_k coeffs[k] * R(nodes[k], T)."""
        nodes = np.asarray(nodes, dtype=complex)
        self._check(nodes)
        S = _kernels.tri_resolvent_sum(self.U, nodes, np.asarray(coeffs, dtype=complex))
        return self.Z @ S @ self.Z.conj().T


class ReducedResolvent:
    """``R(z, T)(I - P)`` where ``P`` is the spectral projection for the
    eigenvalues within ``radius`` of ``points``.

    Those eigenvalues are moved to the leading Schur block, which a Sylvester
    solve decouples from the rest. The reduced resolvent has no pole at the
    points, so contours may pass through them. For a function vanishing at
    the points and semisimple eigenvalues there, integrating it gives the
    whole of ``f(T)``.
    """

    def __init__(self, T, points, radius):
        self.T = as_matrix(T)
        pts = np.atleast_1d(np.asarray(points, dtype=complex))

        def near(z):
            return bool(np.min(np.abs(z - pts)) <= radius)

        U, Z, k = scipy.linalg.schur(self.T, output="complex", sort=near)
        self.diag = np.diag(U).copy()
        self.removed = k
        # prod_p (U11 - p) vanishes iff the removed eigenvalues are semisimple
        D = np.eye(k, dtype=complex)
        for p in pts:
            D = D @ (U[:k, :k] - p * np.eye(k))
        self.defect = float(np.linalg.norm(D, 2)) if k else 0.0
        Z1, Z2 = Z[:, :k], Z[:, k:]
        if k:
            X = scipy.linalg.solve_sylvester(U[:k, :k], -U[k:, k:], -U[:k, k:])
            Z2 = Z2 + Z1 @ X
        self.left, self.right = Z2, Z[:, k:].conj().T
        self.inner = SchurResolvent(U[k:, k:]) if k < len(U) else None
        self.thresh = PIVOT_RTOL * max(np.linalg.norm(self.T, 1), np.finfo(float).tiny)

    def _lift(self, M):
        return self.left @ M @ self.right

    def stack(self, nodes):
        nodes = np.asarray(nodes, dtype=complex)
        n = self.T.shape[0]
        if self.inner is None:
            return np.zeros((len(nodes), n, n), dtype=complex)
        return self._lift(self.inner.stack(nodes))

    def weighted_sum(self, nodes, coeffs):
        n = self.T.shape[0]
        if self.inner is None:
            return np.zeros((n, n), dtype=complex)
        return self._lift(self.inner.weighted_sum(nodes, coeffs))


# -- spectrum ---------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    residual: float

    def __len__(self):
        return len(self.eigenvalues)


def _inverse_iteration(T, lam, steps=3):
    n = T.shape[0]
    scale = max(np.linalg.norm(T, 1), 1.0)
    shift = lam + 1e3 * np.finfo(float).eps * scale
    M = T - shift * np.eye(n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    d = np.diag(lu).copy()
    tiny = np.finfo(float).eps * scale
    d[np.abs(d) < tiny] = tiny
    np.fill_diagonal(lu, d)
    v = np.ones(n, dtype=complex) / np.sqrt(n)
    # iterate with (M^* M)^{-1}: converges to the minimising singular vector, so
    # the residual is a backward error even for defective eigenvalues
    for _ in range(steps):
        w = scipy.linalg.lu_solve((lu, piv), v, trans=2, check_finite=False)
        v = scipy.linalg.lu_solve((lu, piv), w, check_finite=False)
        v /= np.linalg.norm(v)
    return v


def spectrum(T, tol=EIG_TOL):
    """Eigenvalues by Householder-Hessenberg reduction and Wilkinson-shift QR.

    The residual is ``max ||Tv - lam v|| / ||v||`` over inverse-iteration
    eigenvectors and is checked against ``tol * max(1, ||T||)``.
    """
    T = as_matrix(T)
    n = T.shape[0]
    H = _kernels.hessenberg(T)
    eigs, status = _kernels.hqr_eigvals(H, 100 * n)
    if status >= 0:
        raise NoConvergence(f"QR iteration cap reached at eigenvalue index {status}")
    res = 0.0
    for lam in eigs:
        v = _inverse_iteration(T, lam)
        res = max(res, float(np.linalg.norm(T @ v - lam * v)))
    if res > tol * max(1.0, np.linalg.norm(T, 2)):
        raise NoConvergence(f"eigen-residual {res:.3e} above tolerance")
    return Spectrum(eigenvalues=eigs, residual=res)


def eigvals(T):
    return spectrum(T).eigenvalues


def spectral_radius(T):
    return float(np.max(np.abs(eigvals(T)), initial=0.0))


# -- norms ------------------------------------------------------------------

def op_norm(T, p=2, tol=1e-10, maxiter=5000, seed=0, starts=8):
    """Operator norm induced by the l^p norm.

    For ``p == 2`` this is the largest singular value from block power
    iteration on ``T^* T`` with Rayleigh-Ritz. For any other ``p >= 1`` the
    value is a *lower bound*: the best ratio ``||Tx||_p / ||x||_p`` found by
    Higham's p-norm power method from coordinate and random starts.
    """
    T = np.asarray(T, dtype=complex)
    if T.ndim != 2:
        raise ValueError("op_norm expects a 2-d array")
    if T.size == 0 or not np.any(T):
        return 0.0
    if p == 2:
        return _norm2(T, tol, maxiter, seed)
    if p < 1:
        raise ValueError("p must be >= 1")
    return _pnorm_lower(T, float(p), seed, starts)


def _norm2(T, tol, maxiter, seed):
    m, n = T.shape
    k = min(n, 4)
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
    col = np.argmax(np.linalg.norm(T, axis=0))
    V[:, 0] = 0.0
    V[col, 0] = 1.0
    V, _ = np.linalg.qr(V)
    G = T.conj().T @ T
    prev = -1.0
    for _ in range(maxiter):
        W = G @ V
        B = V.conj().T @ W
        theta = float(np.max(np.linalg.eigvalsh(0.5 * (B + B.conj().T))))
        if abs(theta - prev) <= tol * theta:
            return float(np.sqrt(max(theta, 0.0)))
        prev = theta
        V, _ = np.linalg.qr(W)
    raise NoConvergence("power iteration for the 2-norm did not converge")


def _dual(v, p):
    a = np.abs(v)
    out = np.zeros_like(v)
    nz = a > 0
    out[nz] = a[nz] ** (p - 1) * v[nz] / a[nz]
    nrm = np.linalg.norm(v, p) ** (p - 1)
    return out / nrm if nrm > 0 else out


def _pnorm_lower(T, p, seed, starts):
    m, n = T.shape
    q = np.inf if p == 1 else p / (p - 1)
    rng = np.random.default_rng(seed)
    cands = [np.eye(n, dtype=complex)[i] for i in range(n)]
    cands += [rng.standard_normal(n) + 1j * rng.standard_normal(n) for _ in range(starts)]
    best = 0.0
    for x in cands:
        x = x / np.linalg.norm(x, p)
        val = np.linalg.norm(T @ x, p)
        for _ in range(100):
            z = T.conj().T @ _dual(T @ x, p)
            if q == np.inf:
                i = np.argmax(np.abs(z))
                xn = np.zeros(n, dtype=complex)
                xn[i] = 1.0
            else:
                xn = _dual(z, q)
                xn /= np.linalg.norm(xn, p)
            vn = np.linalg.norm(T @ xn, p)
            if vn <= val * (1 + 1e-12):
                break
            x, val = xn, vn
        best = max(best, val)
    return float(best)


# -- fractional powers -------------------------------------------------------

def _schur_swap(U, Z, k):
    """Swap diagonal entries k, k+1 of triangular U with a Givens rotation."""
    a, b, d = U[k, k], U[k, k + 1], U[k + 1, k + 1]
    x, y = b, d - a
    r = np.hypot(abs(x), abs(y))
    if r == 0.0:
        return
    c = abs(x) / r if x != 0 else 0.0
    ph = x / abs(x) if x != 0 else 1.0
    s = ph * np.conj(y) / r
    G = np.array([[c, s], [-np.conj(s), c]])
    U[k:k + 2, :] = G @ U[k:k + 2, :]
    U[:, k:k + 2] = U[:, k:k + 2] @ G.conj().T
    Z[:, k:k + 2] = Z[:, k:k + 2] @ G.conj().T
    U[k + 1, k] = 0.0
    U[k, k], U[k + 1, k + 1] = d, a


def _clusters(diag, rtol, floor):
    # relative closeness, so near-defective clusters stay together and the
    # Sylvester solves never divide by a tiny eigenvalue gap
    n = len(diag)
    labels = -np.ones(n, dtype=int)
    nxt = 0
    for i in range(n):
        if labels[i] >= 0:
            continue
        labels[i] = nxt
        stack = [i]
        while stack:
            j = stack.pop()
            tol = np.maximum(rtol * np.maximum(np.abs(diag), abs(diag[j])), floor)
            close = np.where((labels < 0) & (np.abs(diag - diag[j]) <= tol))[0]
            labels[close] = nxt
            stack.extend(close.tolist())
        nxt += 1
    return labels


def _sorted_schur(A, rtol, floor):
    U, Z = scipy.linalg.schur(A, output="complex")
    U = U.copy()
    Z = Z.copy()
    labels = _clusters(np.diag(U), rtol, floor)
    n = len(labels)
    # bubble sort by cluster label with adjacent swaps
    for i in range(n):
        for k in range(n - 1 - i):
            if labels[k] > labels[k + 1]:
                _schur_swap(U, Z, k)
                labels[k], labels[k + 1] = labels[k + 1], labels[k]
    bounds = [0] + [k + 1 for k in range(n - 1) if labels[k] != labels[k + 1]] + [n]
    return U, Z, list(zip(bounds[:-1], bounds[1:]))


def _block_power(B, alpha, zero_tol):
    m = B.shape[0]
    sigma = np.mean(np.diag(B))
    if abs(sigma) <= zero_tol:
        return np.zeros((m, m), dtype=complex)
    N = B - sigma * np.eye(m)
    F = np.zeros((m, m), dtype=complex)
    term = np.eye(m, dtype=complex)
    coef = sigma ** alpha
    for k in range(200):
        F += coef * term
        term = term @ N
        coef *= (alpha - k) / ((k + 1) * sigma)
        if k + 1 >= m and abs(coef) * np.linalg.norm(term) <= 1e-17 * np.linalg.norm(F):
            return F
        if not np.any(term):
            return F
    raise NoConvergence("Taylor series for a clustered Schur block did not converge")


def frac_power(A, alpha):
    """Principal fractional power ``A**alpha`` via a block Schur-Parlett method.

    Eigenvalues within 5% of each other (relative) are grouped; each diagonal
    block is handled by a Taylor expansion about its mean eigenvalue and the
    off-diagonal blocks by triangular Sylvester solves.
    """
    A = as_matrix(A)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = A.shape[0]
    scale = max(np.linalg.norm(A, 2), 1.0)
    zero_tol = 1e-10 * scale
    lam = np.linalg.eigvals(A)
    for z in lam:
        if abs(z) > zero_tol and z.real < 0 and abs(z.imag) <= 1e-12 * scale:
            raise BranchViolation(f"eigenvalue {z} on the negative real axis")
    if np.any(np.abs(lam) <= zero_tol):
        rtol = 1e-9 * scale
        r1 = np.linalg.matrix_rank(A, tol=rtol)
        r2 = np.linalg.matrix_rank(A @ A, tol=rtol * scale)
        if r1 != r2:
            raise DefectiveZero("zero eigenvalue is not semisimple")
    if np.allclose(alpha, round(alpha)) and round(alpha) >= 1:
        return np.linalg.matrix_power(A, int(round(alpha)))
    U, Z, blocks = _sorted_schur(A, CLUSTER_RTOL, zero_tol)
    F = np.zeros((n, n), dtype=complex)
    for (a, b) in blocks:
        F[a:b, a:b] = _block_power(U[a:b, a:b], alpha, zero_tol)
    q = len(blocks)
    for d in range(1, q):
        for i in range(q - d):
            j = i + d
            ia, ib = blocks[i]
            ja, jb = blocks[j]
            C = F[ia:ib, ia:ib] @ U[ia:ib, ja:jb] - U[ia:ib, ja:jb] @ F[ja:jb, ja:jb]
            for k in range(i + 1, j):
                ka, kb = blocks[k]
                C += F[ia:ib, ka:kb] @ U[ka:kb, ja:jb] - U[ia:ib, ka:kb] @ F[ka:kb, ja:jb]
            F[ia:ib, ja:jb] = _kernels.tri_sylvester(U[ia:ib, ia:ib], U[ja:jb, ja:jb], C)
    return Z @ F @ Z.conj().T


def commutator_norm(A, B):
    return float(np.linalg.norm(A @ B - B @ A, 2))


__all__ = [
    "ReducedResolvent", "RittlabError", "Spectrum", "SchurResolvent", "as_matrix", "allclose",
    "commutator_norm", "dump_matrix", "eigvals", "frac_power", "load_matrix",
    "matrix_from_json", "matrix_to_json", "op_norm", "resolvent",
    "spectral_radius", "spectrum",
]
