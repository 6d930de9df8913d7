"""Hot inner loops, compiled with numba when available.

Every kernel exists twice: a loop form compiled by ``numba.njit`` and a
vectorised pure-numpy form. The numpy form is used when numba is missing
or when ``RITTLAB_DISABLE_NUMBA=1`` is set in the environment; both forms
are always importable (``NUMBA_KERNELS`` / ``NUMPY_KERNELS``) so tests and
the benchmark can compare them directly.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

_DISABLED = os.environ.get("RITTLAB_DISABLE_NUMBA", "").lower() in ("1", "true", "yes")
USE_NUMBA = numba is not None and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"

EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def hessenberg_np(A):
    H = np.array(A, dtype=complex)
    n = H.shape[0]
    for k in range(n - 2):
        x = H[k + 1:, k].copy()
        nx = np.linalg.norm(x)
        if nx == 0.0:
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        H[k + 1:, :] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, :])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _givens(a, b):
    r = np.hypot(abs(a), abs(b))
    if r == 0.0:
        return 1.0, 0j, 0j
    if a == 0:
        return 0.0, np.conj(b) / abs(b), r + 0j
    ph = a / abs(a)
    return abs(a) / r, ph * np.conj(b) / r, ph * r


def _wilkinson(a, b, c, d):
    m = 0.5 * (a + d)
    disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
    l1 = m + disc
    l2 = m - disc
    return l1 if abs(l1 - d) <= abs(l2 - d) else l2


def hqr_eigvals_np(H, maxit_per_eig):
    """Shifted QR on an upper Hessenberg matrix; returns (eigs, status).

    status is -1 on success, otherwise the index whose iteration capped.
    """
    H = np.array(H, dtype=complex)
    n = H.shape[0]
    eigs = np.zeros(n, dtype=complex)
    scale = max(np.abs(H).max(), np.finfo(float).tiny)
    hi = n - 1
    its = 0
    while hi >= 0:
        if hi == 0:
            eigs[0] = H[0, 0]
            break
        l = hi
        while l > 0:
            s = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if s == 0.0:
                s = scale
            if abs(H[l, l - 1]) <= EPS * s:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            eigs[hi] = H[hi, hi]
            hi -= 1
            its = 0
            continue
        its += 1
        if its > maxit_per_eig:
            return eigs, hi
        if its % 11 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * (1 + 1j)
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        idx = np.arange(l, hi + 1)
        H[idx, idx] -= mu
        rots = []
        for k in range(l, hi):
            c, s, r = _givens(H[k, k], H[k + 1, k])
            rows = H[k:k + 2, k:hi + 1].copy()
            H[k, k:hi + 1] = c * rows[0] + s * rows[1]
            H[k + 1, k:hi + 1] = -np.conj(s) * rows[0] + c * rows[1]
            H[k + 1, k] = 0.0
            rots.append((c, s))
        for k in range(l, hi):
            c, s = rots[k - l]
            top = min(k + 2, hi)
            cols = H[l:top + 1, k:k + 2].copy()
            H[l:top + 1, k] = c * cols[:, 0] + np.conj(s) * cols[:, 1]
            H[l:top + 1, k + 1] = -s * cols[:, 0] + c * cols[:, 1]
        H[idx, idx] += mu
    return eigs, -1


def tri_inverse_stack_np(U, nodes):
    n = U.shape[0]
    M = nodes[:, None, None] * np.eye(n) - U[None, :, :]
    return np.linalg.inv(M)


def tri_resolvent_sum_np(U, nodes, coeffs):
    return np.tensordot(coeffs, tri_inverse_stack_np(U, nodes), axes=(0, 0))


def tri_sylvester_np(A, B, C):
    """Solve A X - X B = C for upper-triangular A (m x m) and B (k x k)."""
    m, k = C.shape
    X = np.zeros((m, k), dtype=complex)
    I = np.eye(m)
    for c in range(k):
        rhs = C[:, c] + X[:, :c] @ B[:c, c]
        X[:, c] = np.linalg.solve(A - B[c, c] * I, rhs)
    return X


def cauchy_double_np(Phi, A, B):
    """out[p] = sum_{k,l} A[p,k] Phi[k,l] B[p,l]."""
    return np.einsum("pl,pl->p", A @ Phi, B)


def rademacher_moment_np(coords, p, chunk=1 << 14):
    """Exact E || sum_k eps_k x_k ||_p^p over all 2**M sign patterns."""
    M, d = coords.shape
    total = 0.0
    npat = 1 << M
    bits = np.arange(M)
    for start in range(0, npat, chunk):
        pats = np.arange(start, min(start + chunk, npat))
        signs = 1.0 - 2.0 * ((pats[:, None] >> bits[None, :]) & 1)
        vals = signs @ coords
        total += np.sum(np.abs(vals) ** p)
    return total / npat


# ---------------------------------------------------------------------------
# numba loop implementations
# ---------------------------------------------------------------------------

def hessenberg_loop(A):
    n = A.shape[0]
    H = A.astype(np.complex128).copy()
    v = np.zeros(n, dtype=np.complex128)
    for k in range(n - 2):
        nx = 0.0
        for i in range(k + 1, n):
            nx += abs(H[i, k]) ** 2
        nx = np.sqrt(nx)
        if nx == 0.0:
            continue
        x0 = H[k + 1, k]
        phase = x0 / abs(x0) if abs(x0) > 0 else 1.0 + 0j
        nv = 0.0
        for i in range(k + 1, n):
            v[i] = H[i, k]
        v[k + 1] += phase * nx
        for i in range(k + 1, n):
            nv += abs(v[i]) ** 2
        nv = np.sqrt(nv)
        for i in range(k + 1, n):
            v[i] /= nv
        for j in range(n):
            acc = 0j
            for i in range(k + 1, n):
                acc += np.conj(v[i]) * H[i, j]
            for i in range(k + 1, n):
                H[i, j] -= 2.0 * v[i] * acc
        for i in range(n):
            acc = 0j
            for j in range(k + 1, n):
                acc += H[i, j] * v[j]
            for j in range(k + 1, n):
                H[i, j] -= 2.0 * acc * np.conj(v[j])
        for i in range(k + 2, n):
            H[i, k] = 0.0
    return H


def hqr_eigvals_loop(H0, maxit_per_eig):
    H = H0.astype(np.complex128).copy()
    n = H.shape[0]
    eps = 2.220446049250313e-16
    eigs = np.zeros(n, dtype=np.complex128)
    cs = np.zeros(n, dtype=np.float64)
    ss = np.zeros(n, dtype=np.complex128)
    scale = 0.0
    for i in range(n):
        for j in range(n):
            if abs(H[i, j]) > scale:
                scale = abs(H[i, j])
    if scale == 0.0:
        scale = 1e-300
    hi = n - 1
    its = 0
    while hi >= 0:
        if hi == 0:
            eigs[0] = H[0, 0]
            break
        l = hi
        while l > 0:
            s = abs(H[l - 1, l - 1]) + abs(H[l, l])
            if s == 0.0:
                s = scale
            if abs(H[l, l - 1]) <= eps * s:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            eigs[hi] = H[hi, hi]
            hi -= 1
            its = 0
            continue
        its += 1
        if its > maxit_per_eig:
            return eigs, hi
        if its % 11 == 0:
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * (1 + 1j)
        else:
            a = H[hi - 1, hi - 1]
            b = H[hi - 1, hi]
            c = H[hi, hi - 1]
            d = H[hi, hi]
            m = 0.5 * (a + d)
            disc = np.sqrt(0.25 * (a - d) ** 2 + b * c)
            l1 = m + disc
            l2 = m - disc
            mu = l1 if abs(l1 - d) <= abs(l2 - d) else l2
        for k in range(l, hi + 1):
            H[k, k] -= mu
        for k in range(l, hi):
            a = H[k, k]
            b = H[k + 1, k]
            r = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
            if r == 0.0:
                c = 1.0
                s = 0j
            elif abs(a) == 0.0:
                c = 0.0
                s = np.conj(b) / abs(b)
            else:
                c = abs(a) / r
                s = (a / abs(a)) * np.conj(b) / r
            cs[k] = c
            ss[k] = s
            for j in range(k, hi + 1):
                x = H[k, j]
                y = H[k + 1, j]
                H[k, j] = c * x + s * y
                H[k + 1, j] = -np.conj(s) * x + c * y
            H[k + 1, k] = 0.0
        for k in range(l, hi):
            c = cs[k]
            s = ss[k]
            top = min(k + 2, hi)
            for i in range(l, top + 1):
                x = H[i, k]
                y = H[i, k + 1]
                H[i, k] = c * x + np.conj(s) * y
                H[i, k + 1] = -s * x + c * y
        for k in range(l, hi + 1):
            H[k, k] += mu
    return eigs, -1


def tri_inverse_stack_loop(U, nodes):
    n = U.shape[0]
    K = nodes.shape[0]
    out = np.zeros((K, n, n), dtype=np.complex128)
    for q in range(K):
        lam = nodes[q]
        # back substitution for X with (lam I - U) X = I, X upper triangular
        for j in range(n):
            out[q, j, j] = 1.0 / (lam - U[j, j])
            for i in range(j - 1, -1, -1):
                acc = 0j
                for k in range(i + 1, j + 1):
                    acc += U[i, k] * out[q, k, j]
                out[q, i, j] = acc / (lam - U[i, i])
    return out


def tri_resolvent_sum_loop(U, nodes, coeffs):
    n = U.shape[0]
    K = nodes.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    col = np.zeros(n, dtype=np.complex128)
    for q in range(K):
        lam = nodes[q]
        w = coeffs[q]
        for j in range(n):
            col[j] = 1.0 / (lam - U[j, j])
            out[j, j] += w * col[j]
            for i in range(j - 1, -1, -1):
                acc = 0j
                for k in range(i + 1, j + 1):
                    acc += U[i, k] * col[k]
                col[i] = acc / (lam - U[i, i])
                out[i, j] += w * col[i]
    return out


def tri_sylvester_loop(A, B, C):
    m = C.shape[0]
    k = C.shape[1]
    X = np.zeros((m, k), dtype=np.complex128)
    rhs = np.zeros(m, dtype=np.complex128)
    for c in range(k):
        for i in range(m):
            acc = C[i, c]
            for r in range(c):
                acc += X[i, r] * B[r, c]
            rhs[i] = acc
        t = B[c, c]
        for i in range(m - 1, -1, -1):
            acc = rhs[i]
            for j in range(i + 1, m):
                acc -= A[i, j] * X[j, c]
            X[i, c] = acc / (A[i, i] - t)
    return X


def cauchy_double_loop(Phi, A, B):
    # the matrix product goes through BLAS; only the row contraction is looped
    AP = A @ Phi
    P = AP.shape[0]
    L = AP.shape[1]
    out = np.zeros(P, dtype=np.complex128)
    for p in range(P):
        acc = 0j
        for l in range(L):
            acc += AP[p, l] * B[p, l]
        out[p] = acc
    return out


def rademacher_moment_loop(coords, p):
    # Gray-code walk: each step flips one sign, so the running sum costs O(d).
    M = coords.shape[0]
    d = coords.shape[1]
    cur = np.zeros(d, dtype=np.complex128)
    for k in range(M):
        for j in range(d):
            cur[j] += coords[k, j]
    total = 0.0
    for j in range(d):
        total += abs(cur[j]) ** p
    signs = np.ones(M)
    npat = 1 << M
    for g in range(1, npat):
        # index of the bit that changes between gray(g-1) and gray(g)
        k = 0
        t = g
        while (t & 1) == 0:
            t >>= 1
            k += 1
        signs[k] = -signs[k]
        for j in range(d):
            cur[j] += 2.0 * signs[k] * coords[k, j]
        for j in range(d):
            total += abs(cur[j]) ** p
    return total / npat


NUMPY_KERNELS = {
    "hessenberg": hessenberg_np,
    "hqr_eigvals": hqr_eigvals_np,
    "tri_inverse_stack": tri_inverse_stack_np,
    "tri_resolvent_sum": tri_resolvent_sum_np,
    "tri_sylvester": tri_sylvester_np,
    "cauchy_double": cauchy_double_np,
    "rademacher_moment": rademacher_moment_np,
}

_LOOPS = {
    "hessenberg": hessenberg_loop,
    "hqr_eigvals": hqr_eigvals_loop,
    "tri_inverse_stack": tri_inverse_stack_loop,
    "tri_resolvent_sum": tri_resolvent_sum_loop,
    "tri_sylvester": tri_sylvester_loop,
    "cauchy_double": cauchy_double_loop,
    "rademacher_moment": rademacher_moment_loop,
}

if numba is not None:
    NUMBA_KERNELS = {k: numba.njit(cache=True, nogil=True)(f) for k, f in _LOOPS.items()}
else:  # pragma: no cover
    NUMBA_KERNELS = {}

_ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def hessenberg(A):
    return _ACTIVE["hessenberg"](_c(A))


def hqr_eigvals(H, maxit_per_eig):
    return _ACTIVE["hqr_eigvals"](_c(H), int(maxit_per_eig))


def tri_inverse_stack(U, nodes):
    return _ACTIVE["tri_inverse_stack"](_c(U), _c(nodes))


def tri_resolvent_sum(U, nodes, coeffs):
    return _ACTIVE["tri_resolvent_sum"](_c(U), _c(nodes), _c(coeffs))


def tri_sylvester(A, B, C):
    return _ACTIVE["tri_sylvester"](_c(A), _c(B), _c(C))


def cauchy_double(Phi, A, B):
    return _ACTIVE["cauchy_double"](_c(Phi), _c(A), _c(B))


def rademacher_moment(coords, p):
    return float(_ACTIVE["rademacher_moment"](_c(coords), float(p)))
