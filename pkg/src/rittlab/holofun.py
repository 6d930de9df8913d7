"""Holomorphic function objects, decay certificates and polynomial algebra."""
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as npoly

from .errors import DecayRefuted, RittlabError
from .regions import (ProductRegion, SectorRegion, StolzRegion, corner_layers,
                      sample_interior)

SLACK = 1.01


# -- decay certificates -------------------------------------------------------

@dataclass(frozen=True)
class DecayCert:
    """``|f(z)| <= c * profile(z)``.

    ``kind == "stolz"``: ``profile = prod_j |xi_j - z|**s_j`` over ``points``.
    ``kind == "sector"``: ``profile = |z|**s / (1 + |z|**(2s))`` with the single
    exponent ``exponents[0]``.
    """

    c: float
    exponents: tuple
    points: tuple = ()
    kind: str = "stolz"

    def profile(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "sector":
            s = self.exponents[0]
            a = np.abs(z)
            return a ** s / (1.0 + a ** (2 * s))
        out = np.ones(z.shape)
        for xi, s in zip(self.points, self.exponents):
            out = out * np.abs(xi - z) ** s
        return out

    def to_json(self):
        return {"c": self.c, "exponents": list(self.exponents), "kind": self.kind,
                "points": [[complex(p).real, complex(p).imag] for p in self.points]}


def stolz_cert(c, cfg, s):
    exps = tuple(float(x) for x in np.broadcast_to(np.asarray(s, dtype=float), (cfg.N,)))
    return DecayCert(float(c), exps, tuple(cfg.xi), "stolz")


def sector_cert(c, s):
    return DecayCert(float(c), (float(s),), (), "sector")


@dataclass(frozen=True)
class DecayCert2:
    """Bivariate decay: product of per-variable profiles."""

    c: float
    first: DecayCert
    second: DecayCert

    def profile(self, z1, z2):
        return self.first.profile(z1) * self.second.profile(z2)


# -- function objects -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HoloFun1:
    func: object
    decay: DecayCert = None
    domain: object = None
    name: str = "f"

    def __call__(self, z):
        return np.asarray(self.func(np.asarray(z, dtype=complex)), dtype=complex)

    def __mul__(self, other):
        f, g = self.func, other.func
        decay = None
        if self.decay is not None and other.decay is not None and \
                self.decay.kind == other.decay.kind == "stolz" and \
                self.decay.points == other.decay.points:
            decay = DecayCert(self.decay.c * other.decay.c,
                              tuple(a + b for a, b in zip(self.decay.exponents,
                                                          other.decay.exponents)),
                              self.decay.points)
        return HoloFun1(lambda z: f(z) * g(z), decay, self.domain,
                        f"({self.name})*({other.name})")

    def scaled(self, a):
        f = self.func
        decay = None if self.decay is None else DecayCert(
            abs(a) * self.decay.c, self.decay.exponents, self.decay.points, self.decay.kind)
        return HoloFun1(lambda z: a * f(z), decay, self.domain, f"{a}*{self.name}")


def zero_fun():
    return HoloFun1(lambda z: np.zeros_like(z), None, None, "0")


@dataclass(frozen=True, eq=False)
class HoloFun2:
    """Two-variable function; ``split`` holds ``(f1, f2, f12)`` with
    ``f = f1(z1) + f2(z2) + f12(z1, z2)``."""

    func: object
    decay: DecayCert2 = None
    split: tuple = None
    name: str = "f"

    def __call__(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        return np.asarray(self.func(z1, z2), dtype=complex)

    @classmethod
    def from_parts(cls, f1, f2, f12, name="f"):
        """Assemble ``f1(z1) + f2(z2) + f12(z1,z2)``; missing parts are zero."""
        parts = (f1 or zero_fun(), f2 or zero_fun(),
                 f12 or HoloFun2(lambda a, b: np.zeros(np.broadcast(a, b).shape, complex)))

        def func(z1, z2):
            return parts[0](z1) + parts[1](z2) + parts[2](z1, z2)

        return cls(func, None, parts, name)

    @classmethod
    def separable(cls, f, g, name=None):
        """Pure ``f12 = f(z1) g(z2)``."""
        decay = None
        if f.decay is not None and g.decay is not None:
            decay = DecayCert2(f.decay.c * g.decay.c, f.decay, g.decay)
        h = cls(lambda a, b: f(a) * g(b), decay, None, name or f"{f.name}(z1)*{g.name}(z2)")
        return cls(h.func, decay, (zero_fun(), zero_fun(), h), h.name)


# -- bivariate polynomials --------------------------------------------------------

class BivariatePoly:
    """``sum_{k,l} coeffs[k, l] z1**k z2**l``."""

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex)
        if c.ndim != 2:
            raise ValueError("coefficients must form a 2-d array")
        self.coeffs = c

    @property
    def degrees(self):
        return self.coeffs.shape[0] - 1, self.coeffs.shape[1] - 1

    def __call__(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex)
        z2 = np.asarray(z2, dtype=complex)
        z1, z2 = np.broadcast_arrays(z1, z2)
        return npoly.polyval2d(z1, z2, self.coeffs)

    def factors(self, z1, z2):
        """``(V1, C, V2)`` with ``grid(z1, z2) == V1 @ C @ V2.T``."""
        v1 = npoly.polyvander(np.asarray(z1, dtype=complex).ravel(), self.degrees[0])
        v2 = npoly.polyvander(np.asarray(z2, dtype=complex).ravel(), self.degrees[1])
        return v1, self.coeffs, v2

    def grid(self, z1, z2):
        """Values on the product grid ``z1 x z2``."""
        v1, c, v2 = self.factors(z1, z2)
        return v1 @ c @ v2.T

    def padded(self, d1, d2):
        out = np.zeros((max(d1, self.degrees[0]) + 1, max(d2, self.degrees[1]) + 1), complex)
        out[:self.coeffs.shape[0], :self.coeffs.shape[1]] = self.coeffs
        return out

    def __add__(self, other):
        d1 = max(self.degrees[0], other.degrees[0])
        d2 = max(self.degrees[1], other.degrees[1])
        return BivariatePoly(self.padded(d1, d2) + other.padded(d1, d2))

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, a):
        return BivariatePoly(a * self.coeffs)

    def __mul__(self, other):
        a, b = self.coeffs, other.coeffs
        out = np.zeros((a.shape[0] + b.shape[0] - 1, a.shape[1] + b.shape[1] - 1), complex)
        for k in range(a.shape[0]):
            for l in range(a.shape[1]):
                if a[k, l] != 0:
                    out[k:k + b.shape[0], l:l + b.shape[1]] += a[k, l] * b
        return BivariatePoly(out)

    def compose_affine(self, a1, b1, a2, b2):
        """``(z1, z2) -> phi(a1*z1 + b1, a2*z2 + b2)`` as a new polynomial."""
        d1, d2 = self.degrees
        m1 = _affine_power_matrix(a1, b1, d1)
        m2 = _affine_power_matrix(a2, b2, d2)
        return BivariatePoly(m1.T @ self.coeffs @ m2)

    def of_matrices(self, T1, T2):
        """``sum c_kl T1**k T2**l`` for commuting square matrices."""
        T1 = np.asarray(T1, dtype=complex)
        T2 = np.asarray(T2, dtype=complex)
        n = T1.shape[0]
        p1 = [np.eye(n, dtype=complex)]
        for _ in range(self.degrees[0]):
            p1.append(p1[-1] @ T1)
        p2 = [np.eye(n, dtype=complex)]
        for _ in range(self.degrees[1]):
            p2.append(p2[-1] @ T2)
        out = np.zeros((n, n), dtype=complex)
        for k in range(self.degrees[0] + 1):
            row = sum((self.coeffs[k, l] * p2[l] for l in range(self.degrees[1] + 1)),
                      np.zeros((n, n), dtype=complex))
            out += p1[k] @ row
        return out

    def as_holofun(self, name="phi"):
        return HoloFun2(self.__call__, None, None, name)

    def to_json(self):
        return {"coeffs": [[[z.real, z.imag] for z in row] for row in self.coeffs]}

    @classmethod
    def from_json(cls, doc):
        return cls([[complex(a, b) for a, b in row] for row in doc["coeffs"]])

    def __repr__(self):
        return f"BivariatePoly(degrees={self.degrees})"


def _affine_power_matrix(a, b, d):
    """M[j, k] = coefficient of z**k in (a z + b)**j."""
    M = np.zeros((d + 1, d + 1), dtype=complex)
    M[0, 0] = 1.0
    for j in range(1, d + 1):
        M[j, 1:] += a * M[j - 1, :-1]
        M[j] += b * M[j - 1]
    return M


def horner2(coeffs, z1, z2):
    """Nested Horner evaluation, independent of :func:`numpy.polynomial`."""
    acc = 0j
    for row in coeffs[::-1]:
        inner = 0j
        for c in row[::-1]:
            inner = inner * z2 + c
        acc = acc * z1 + inner
    return acc


# -- Lagrange split ---------------------------------------------------------------

def lagrange_basis(cfg):
    """Polynomials with ``L_i(xi_j) = delta_ij`` (product formula)."""
    xi = np.array(cfg.xi)
    basis = []
    for i, x in enumerate(xi):
        L = Polynomial([1.0 + 0j])
        for j, y in enumerate(xi):
            if j != i:
                L = L * Polynomial([-y, 1.0]) / (x - y)
        basis.append(L)
    return basis


def _poly_coef(p, size):
    c = np.zeros(size, dtype=complex)
    pc = np.asarray(p.coef, dtype=complex)
    c[:len(pc)] = pc
    return c


def polynomial_split(phi, cfg):
    """Split ``phi`` into four parts by interpolating each factor on E.

    Writes ``phi = sum_n z1**n b_n(z2)``, replaces each factor by its
    interpolant on E plus remainder, and groups the four products. Returns
    ``(P1, P2, P3, P4)`` = (interp x interp, interp x rem, rem x interp,
    rem x rem).
    """
    L = lagrange_basis(cfg)
    xi = np.array(cfg.xi)
    d1, d2 = phi.degrees
    D1 = max(d1, cfg.N - 1) + 1
    D2 = max(d2, cfg.N - 1) + 1
    Lmat1 = np.array([_poly_coef(l, D1) for l in L])  # (N, D1)
    Lmat2 = np.array([_poly_coef(l, D2) for l in L])
    parts = [np.zeros((D1, D2), dtype=complex) for _ in range(4)]
    for n in range(d1 + 1):
        a = np.zeros(D1, dtype=complex)
        a[n] = 1.0
        a0 = (xi ** n) @ Lmat1
        a1 = a - a0
        b = np.zeros(D2, dtype=complex)
        b[:d2 + 1] = phi.coeffs[n]
        bvals = npoly.polyval(xi, phi.coeffs[n])
        b0 = bvals @ Lmat2
        b1 = b - b0
        parts[0] += np.outer(a0, b0)
        parts[1] += np.outer(a0, b1)
        parts[2] += np.outer(a1, b0)
        parts[3] += np.outer(a1, b1)
    return tuple(BivariatePoly(p) for p in parts)


# -- reciprocal series --------------------------------------------------------------

def vanishing_poly(cfg):
    """Coefficients of ``prod_j (1 - conj(xi_j) z)``, constant term first."""
    q = np.array([1.0 + 0j])
    for x in cfg.xi:
        q = npoly.polymul(q, [1.0, -np.conj(x)])
    return q


def reciprocal_bound(cfg):
    if cfg.N == 1:
        return 1.0
    return cfg.N * cfg.min_gap ** (-(cfg.N - 1))


def reciprocal_coeffs(cfg, M):
    """Power-series coefficients ``a_0..a_{M-1}`` of ``1/prod_j(1 - conj(xi_j) z)``."""
    if M < 1:
        raise ValueError("M must be positive")
    q = vanishing_poly(cfg)
    a = np.zeros(M, dtype=complex)
    a[0] = 1.0
    for m in range(1, M):
        k = np.arange(1, min(m, cfg.N) + 1)
        a[m] = -np.dot(q[k], a[m - k])
    bound = reciprocal_bound(cfg)
    if np.max(np.abs(a)) > bound * (1 + 1e-9):
        raise RittlabError(f"reciprocal coefficients exceed the bound {bound:.3g}: precision lost")
    return a


# -- certification and sup norms ---------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    """Outcome of :func:`certify_H0`.

    ``c`` is the smallest constant consistent with the sample. ``witness`` is
    set when a supplied claim fails or the ratio keeps growing toward a
    corner.
    """

    ok: bool
    c: float
    exponents: tuple
    witness: object = None
    ratio_at_witness: float = float("nan")
    samples: int = 0
    layer_max: tuple = field(default=())

    def raise_if_refuted(self):
        if not self.ok:
            raise DecayRefuted(f"decay claim refuted at {self.witness} "
                               f"(ratio {self.ratio_at_witness:.3g})", self.witness)
        return self


def _region_sample(region, rng, count=600):
    """Boundary-weighted sample, returned with layer labels (-1 = bulk)."""
    if isinstance(region, SectorRegion):
        pts = [region.vertex + region.axis * np.exp(rng.uniform(-3, 3, count // 2))
               * np.exp(1j * region.half_angle * rng.uniform(-0.98, 0.98, count // 2))]
        edge = np.exp(np.linspace(-4, 4, count // 4))
        for sgn in (1, -1):
            pts.append(region.vertex + edge * region.axis * np.exp(1j * sgn * region.half_angle * 0.999))
    else:
        pts = [sample_interior(region, count // 2, rng)]
        bd = region.boundary.sample(count // 2)
        pts.append(bd + 1e-7 * (0 - bd) / np.maximum(np.abs(bd), 1e-300))
    bulk = np.concatenate(pts)
    bulk = bulk[region.contains(bulk)]
    return bulk, corner_layers(region, layers=12, ratio=0.5, per_layer=24)


def certify_H0(f, region, exponents, c=None, rng=None, decay_kind=None):
    """Empirical ``H^infty_0`` certificate for ``f`` on ``region``.

    Samples the bulk, the boundary and twelve geometric layers (ratio 1/2)
    toward each corner. The smallest admissible constant is the maximum of
    ``|f| / profile``. A claimed constant ``c`` is refuted by any sample with
    ratio above ``1.01 c``; without a claim the certificate is refuted when
    the per-layer maximum keeps growing over the innermost layers.
    ``region`` may be a :class:`ProductRegion` for two-variable ``f``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if isinstance(region, ProductRegion):
        return _certify2(f, region, exponents, c, rng)
    kind = decay_kind or ("sector" if isinstance(region, SectorRegion) else "stolz")
    if kind == "sector":
        cert = sector_cert(1.0, exponents if np.ndim(exponents) == 0 else exponents[0])
    else:
        cert = stolz_cert(1.0, region.cfg, exponents)
    bulk, layers = _region_sample(region, rng)
    return _judge(lambda z: np.abs(f(z)) / cert.profile(z), [bulk] + layers,
                  cert.exponents, c)


def _judge(ratio_fn, groups, exponents, c):
    maxima, wit, best = [], None, -1.0
    for pts in groups:
        if len(pts) == 0:
            maxima.append(0.0)
            continue
        r = ratio_fn(pts)
        r = np.where(np.isfinite(r), r, np.inf)
        k = int(np.argmax(r))
        maxima.append(float(r[k]))
        if r[k] > best:
            best, wit = float(r[k]), pts[k] if not isinstance(pts, tuple) else (pts[0][k], pts[1][k])
    total = sum(len(p) if not isinstance(p, tuple) else len(p[0]) for p in groups)
    lay = maxima[1:]
    growing = False
    if len(lay) >= 5:
        tail = np.array(lay[-5:])
        if np.all(tail > 0):
            growth = tail[1:] / tail[:-1]
            growing = bool(np.all(growth > 1.05) and tail[-1] > 2.0 * tail[0])
    ok = np.isfinite(best) and not growing
    if c is not None and best > SLACK * c:
        ok = False
    return Certificate(bool(ok), best, tuple(exponents), None if ok else wit,
                       best, total, tuple(lay))


def _certify2(f, region, exponents, c, rng):
    s1, s2 = (exponents, exponents) if np.ndim(exponents) == 0 else exponents
    certs = []
    for reg, s in ((region.first, s1), (region.second, s2)):
        if isinstance(reg, SectorRegion):
            certs.append(sector_cert(1.0, s))
        else:
            certs.append(stolz_cert(1.0, reg.cfg, s))
    b1, l1 = _region_sample(region.first, rng, 80)
    b2, l2 = _region_sample(region.second, rng, 80)
    z1 = rng.choice(b1, 40)
    z2 = rng.choice(b2, 40)
    groups = [tuple(np.meshgrid(z1, z2, indexing="ij"))]
    groups = [(g[0].ravel(), g[1].ravel()) for g in groups]
    # corner layers: approach the corner in one or both variables
    for a, b in zip(l1, l2):
        m = min(len(a), len(b))
        if m == 0:
            continue
        aa = np.resize(a, m)
        bb = np.resize(b, m)
        zb = rng.choice(b2, m)
        za = rng.choice(b1, m)
        groups.append((np.concatenate([aa, aa, za]), np.concatenate([bb, zb, bb])))

    def ratio(pts):
        x, y = pts
        return np.abs(f(x, y)) / (certs[0].profile(x) * certs[1].profile(y))

    return _judge(ratio, groups, (certs[0].exponents, certs[1].exponents), c)


def _boundary_points(region, n):
    if isinstance(region, SectorRegion):
        r = np.exp(np.linspace(-12, 12, n))
        up = region.axis * np.exp(1j * region.half_angle)
        dn = region.axis * np.exp(-1j * region.half_angle)
        return np.concatenate([region.vertex + r * up, region.vertex + r * dn, [region.vertex]])
    ends = [p.a for p in region.boundary.pieces]
    return np.concatenate([region.boundary.sample(n), ends])


def sup_norm(f, region, density=256, rtol=1e-4, max_density=1 << 14, rng=None):
    """Grid lower bound for ``sup |f|`` over the closure of ``region``.

    Boundary points (including every piece endpoint) are sampled densely and
    a small interior sample is added; ``density`` doubles until the value
    changes by less than ``rtol`` relative. For a product region the
    distinguished boundary is used.
    """
    rng = np.random.default_rng(1) if rng is None else rng
    prev = None
    n = density
    while True:
        if isinstance(region, ProductRegion):
            m = int(math.sqrt(n)) * 4
            a = _boundary_points(region.first, m)
            b = _boundary_points(region.second, m)
            val = float(np.max(np.abs(f(a[:, None], b[None, :]))))
        else:
            pts = _boundary_points(region, n)
            if not isinstance(region, SectorRegion):
                pts = np.concatenate([pts, sample_interior(region, max(16, n // 8), rng)])
            val = float(np.max(np.abs(f(pts))))
        if prev is not None and abs(val - prev) <= rtol * max(val, 1e-300):
            return max(val, prev)
        if n >= max_density:
            return max(val, prev or 0.0)
        prev = val
        n *= 2


# -- named built-ins ------------------------------------------------------------

def _vanish(cfg, k=1):
    xi = np.array(cfg.xi)

    def v(z):
        out = np.ones_like(z, dtype=complex)
        for x in xi:
            out = out * (1.0 - np.conj(x) * z) ** k
        return out

    return v


def one_minus_z_pow(cfg, k=1):
    """``prod_j (1 - conj(xi_j) z)**k``; for E = {1} this is ``(1 - z)**k``."""
    v = _vanish(cfg, k)
    return HoloFun1(v, stolz_cert(1.0, cfg, k), None, f"one_minus_z^{k}")


def frac_vanish(cfg, s):
    """``prod_j (1 - conj(xi_j) z)**s`` on the principal branch."""
    xi = np.array(cfg.xi)

    def f(z):
        out = np.ones_like(z, dtype=complex)
        for x in xi:
            out = out * (1.0 - np.conj(x) * z) ** s
        return out

    return HoloFun1(f, stolz_cert(1.0, cfg, s), None, f"frac_vanish^{s}")


def prod_linear_factors(cfg, roots=()):
    """``prod_j (1 - conj(xi_j) z) * prod_k (z - w_k)/(1 + |w_k|)``."""
    v = _vanish(cfg)
    roots = np.asarray(roots, dtype=complex)

    def f(z):
        out = v(z)
        for w in roots:
            out = out * (z - w) / (1 + abs(w))
        return out

    return HoloFun1(f, stolz_cert(1.0, cfg, 1), None, f"prod_linear_factors[{len(roots)}]")


def vanishing_polynomial(cfg, q):
    """``prod_j (1 - conj(xi_j) z) * q(z)`` with ``q`` given by coefficients."""
    q = np.asarray(q, dtype=complex)
    coeffs = npoly.polymul(vanishing_poly(cfg), q)

    def f(z):
        return npoly.polyval(z, coeffs)

    f.coeffs = coeffs
    c = float(np.sum(np.abs(q)))
    return HoloFun1(f, stolz_cert(c, cfg, 1), None, f"poly[{len(coeffs) - 1}]")


def rational(cfg, p, q):
    """``prod_j (1 - conj(xi_j) z) * p(z)/q(z)``; roots of ``q`` must satisfy ``|root| >= 1.5``."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    roots = npoly.polyroots(q) if len(q) > 1 else np.array([])
    if len(roots) and np.min(np.abs(roots)) < 1.5:
        raise ValueError("denominator roots must lie outside |z| < 1.5")
    v = _vanish(cfg)
    c = float(np.sum(np.abs(p)) / (abs(q[-1]) * np.prod(np.abs(roots) - 1.0)))

    def f(z):
        return v(z) * npoly.polyval(z, p) / npoly.polyval(z, q)

    return HoloFun1(f, stolz_cert(c, cfg, 1), None, f"rational({len(p) - 1},{len(q) - 1})")


SECTOR_BUILTINS = {
    "z/(1+z)^2": (lambda z: z / (1 + z) ** 2, 1.0),
    "z^2/(1+z)^4": (lambda z: z ** 2 / (1 + z) ** 4, 2.0),
    "sqrt(z)/(1+z)": (lambda z: np.sqrt(z) / (1 + z), 0.5),
    "z*exp(-z)": (lambda z: z * np.exp(-z), 1.0),
    "z/(1+z)^2*(2+z)/(3+z)": (lambda z: z * (2 + z) / ((1 + z) ** 2 * (3 + z)), 1.0),
    "z/((1+z)(2+z))": (lambda z: z / ((1 + z) * (2 + z)), 1.0),
}


def sector_builtin(name):
    func, s = SECTOR_BUILTINS[name]
    return HoloFun1(func, sector_cert(float("nan"), s), None, name)


def builtin(name, cfg=None, **params):
    """Select a named built-in by string key.

    Stolz-side keys: ``"one_minus_z^k"`` (param ``k``), ``"prod_linear_factors"``
    (param ``roots``), ``"rational(p,q)"`` (params ``p``, ``q``), ``"poly"``
    (param ``q``), ``"frac_vanish"`` (param ``s``). Sector-side keys are those
    of :data:`SECTOR_BUILTINS`.
    """
    if name in SECTOR_BUILTINS:
        return sector_builtin(name)
    if cfg is None:
        raise ValueError(f"built-in {name!r} needs a spectral configuration")
    if name.startswith("one_minus_z^"):
        k = params.get("k", int(name.split("^", 1)[1]) if name[-1].isdigit() else 1)
        return one_minus_z_pow(cfg, int(k))
    if name == "prod_linear_factors":
        return prod_linear_factors(cfg, params.get("roots", ()))
    if name.startswith("rational"):
        return rational(cfg, params["p"], params["q"])
    if name == "poly":
        return vanishing_polynomial(cfg, params["q"])
    if name == "frac_vanish":
        return frac_vanish(cfg, params.get("s", 0.5))
    raise KeyError(f"unknown built-in {name!r}")


def stolz_region_for(cfg, s=None):
    return StolzRegion(cfg, cfg.s if s is None else s)
