"""Cauchy localization on transfer polygons and the two-sided transfer check.

The outer polygon's boundary is partitioned into vertex arcs ``gamma_i``
running from ``d_{i-1}`` through ``zeta_i`` to ``d_i``. For a vertex
``zeta_i = xi_p`` on the unit circle, the map ``w = 1 - conj(xi_p) lam``
sends the outer polygon to a polygon with a corner at 0 that opens like the
sector of half-angle ``theta``; ``Gamma1`` is the image of ``gamma_i`` and
``Gamma2`` the image of the rest of the boundary.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .calculus import estimate_fc_constant
from .errors import NoConvergence, OnContour
from .holofun import (BivariatePoly, Certificate, HoloFun2, sector_builtin, sup_norm,
                      vanishing_polynomial)
from .regions import (Contour, ProductRegion, Segment,
                      build_transfer_polygons)

EXCLUSION = 1e-9
TWO_PI_I = 2j * math.pi
EVAL_TOL = 1e-10
MAX_EVAL_LEVEL = 9
NODE_BUDGET = 30_000_000
SECTOR_FRAC = 0.9


# -- Cauchy integrals over contour pairs -------------------------------------------

def _reduce(kernel, A, B):
    left, core, right = kernel
    if left is None:
        return A, core, B
    return A @ left, core, B @ right


class CauchyPair:
    """``(1/2 pi i)^2 \\int_{c1} \\int_{c2} F(l, m) / ((l - z1)(m - z2)) dl dm``.

    Evaluated pointwise (``__call__``) or on a product grid (``grid``);
    the quadrature level is raised until two levels agree to ``tol``.
    """

    def __init__(self, density, c1, c2, tol=EVAL_TOL, name="cauchy"):
        self.density = density
        self.c1 = c1
        self.c2 = c2
        self.tol = tol
        self.name = name
        self._rules = {}

    def _rule(self, l1, l2):
        """Nodes and the weighted density as ``(left, core, right)``: ``left @ core @ right.T``.

        Polynomial densities stay factored, so their cost is linear in the node count.
        """
        if (l1, l2) not in self._rules:
            z1, w1 = self.c1.rule(l1)
            z2, w2 = self.c2.rule(l2)
            if hasattr(self.density, "factors"):
                v1, core, v2 = self.density.factors(z1, z2)
                left, right = w1[:, None] * v1 / TWO_PI_I, w2[:, None] * v2 / TWO_PI_I
            else:
                if len(z1) * len(z2) > NODE_BUDGET:
                    raise NoConvergence(f"{self.name}: Cauchy quadrature exceeded its node budget")
                vals = (self.density.grid(z1, z2) if hasattr(self.density, "grid")
                        else self.density(z1[:, None], z2[None, :]))
                core = vals * (w1[:, None] * w2[None, :]) / TWO_PI_I ** 2
                left, right = None, None
            self._rules[(l1, l2)] = (z1, z2, (left, np.ascontiguousarray(core), right))
        return self._rules[(l1, l2)]

    def _guard(self, z1, z2):
        if np.any(self.c1.distance(z1) <= EXCLUSION) or np.any(self.c2.distance(z2) <= EXCLUSION):
            raise OnContour("evaluation point within 1e-9 of an integration contour")

    def _adapt(self, compute):
        """Raise the level of whichever contour still moves the value."""
        l1 = l2 = 1
        while max(l1, l2) < MAX_EVAL_LEVEL:
            base = compute(*self._rule(l1, l2))
            limit = self.tol * max(1.0, float(np.max(np.abs(base), initial=0.0)))
            d1 = float(np.max(np.abs(compute(*self._rule(l1 + 1, l2)) - base), initial=0.0))
            d2 = float(np.max(np.abs(compute(*self._rule(l1, l2 + 1)) - base), initial=0.0))
            if d1 <= limit and d2 <= limit:
                return compute(*self._rule(l1 + 1, l2 + 1))
            l1 += d1 > limit
            l2 += d2 > limit
        raise NoConvergence(f"{self.name}: Cauchy quadrature did not settle")

    def __call__(self, z1, z2):
        z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
        shape = z1.shape
        a, b = z1.ravel(), z2.ravel()
        self._guard(a, b)

        def compute(n1, n2, kernel):
            A, core, B = _reduce(kernel, 1.0 / (n1[None, :] - a[:, None]), 1.0 / (n2[None, :] - b[:, None]))
            return _kernels.cauchy_double(core, A, B)

        return self._adapt(compute).reshape(shape)

    def grid(self, z1, z2):
        """Values on the product grid ``z1 x z2`` (shape ``(len(z1), len(z2))``)."""
        a = np.asarray(z1, dtype=complex).ravel()
        b = np.asarray(z2, dtype=complex).ravel()
        self._guard(a, np.zeros(0, complex))
        self._guard(np.zeros(0, complex), b)

        def compute(n1, n2, kernel):
            A, core, B = _reduce(kernel, 1.0 / (n1[None, :] - a[:, None]), 1.0 / (n2[None, :] - b[:, None]))
            return A @ core @ B.T

        return self._adapt(compute)

    def as_holofun(self):
        return HoloFun2(self.__call__, None, None, self.name)


# -- localization system ---------------------------------------------------------------

@dataclass(frozen=True)
class LocalizationSystem:
    cfg: object
    theta: float
    polygons: object
    vertex_arcs: tuple

    @property
    def m(self):
        return len(self.vertex_arcs)

    @property
    def outer(self):
        return self.polygons.outer

    @property
    def inner(self):
        return self.polygons.inner

    def xi_index(self, i):
        """Index p with ``zeta_i = xi_p``, or ``None`` for auxiliary vertices."""
        z = self.polygons.zeta[i]
        for p, x in enumerate(self.cfg.xi):
            if abs(z - x) < 1e-14:
                return p
        return None

    def circle_vertices(self):
        return [i for i in range(self.m) if self.xi_index(i) is not None]

    def pullback_paths(self, i):
        """``(Gamma1, Gamma2)`` for a unit-circle vertex ``i``."""
        p = self.xi_index(i)
        if p is None:
            raise ValueError(f"vertex {i} is not on the unit circle")
        a = -np.conj(self.cfg.xi[p])
        g1 = Contour(self.vertex_arcs[i].mapped(a, 1.0).pieces, closed=False)
        rest = []
        for k in range(1, self.m):
            rest.extend(self.vertex_arcs[(i + k) % self.m].pieces)
        g2 = Contour(Contour(tuple(rest), closed=False).mapped(a, 1.0).pieces, closed=False)
        return g1, g2

    def pulled_polygon_boundary(self, i):
        g1, g2 = self.pullback_paths(i)
        return Contour(g1.pieces + g2.pieces)


def build_localization(cfg, theta=1.40, aux_arc_points=1):
    """Transfer polygons plus the vertex-arc partition of the outer boundary."""
    polys = build_transfer_polygons(cfg, theta, aux_arc_points)
    z, d, circ = polys.zeta, polys.d, polys.on_circle
    m = len(z)
    if m < 3:
        raise ValueError("polygon needs at least 3 vertices")
    arcs = tuple(
        Contour((Segment(d[i - 1], z[i], grade_end=bool(circ[i])),
                 Segment(z[i], d[i], grade_start=bool(circ[i]))), closed=False)
        for i in range(m))
    return LocalizationSystem(cfg, theta, polys, arcs)


# -- localized pieces ---------------------------------------------------------------------

def localize(phi, sys, i, j):
    """``phi_ij``: the double Cauchy integral of ``phi`` over ``gamma_i x gamma_j``."""
    if abs(complex(phi(0.0, 0.0))) > 1e-12:
        raise ValueError("phi must vanish at the origin")
    return CauchyPair(phi, sys.vertex_arcs[i], sys.vertex_arcs[j], name=f"phi_{i}{j}")


def pullback_g(phi_ij, sys, p, q):
    """``g(z1, z2) = phi_ij(xi_p (1 - z1), xi_q (1 - z2))``."""
    xp, xq = sys.cfg.xi[p], sys.cfg.xi[q]

    def g(z1, z2):
        return phi_ij(xp * (1 - np.asarray(z1)), xq * (1 - np.asarray(z2)))

    return HoloFun2(g, None, None, f"g_{p}{q}")


def pulled_back(phi, sys, p, q):
    """``psi(z1, z2) = phi(xi_p (1 - z1), xi_q (1 - z2))``."""
    xp, xq = sys.cfg.xi[p], sys.cfg.xi[q]
    if isinstance(phi, BivariatePoly):
        return phi.compose_affine(-xp, xp, -xq, xq)
    return HoloFun2(lambda z1, z2: phi(xp * (1 - z1), xq * (1 - z2)), None, None, "psi")


def boundary_split_F(psi, sys, i, j):
    """The four Cauchy integrals of ``psi`` over ``Gamma^i_a x Gamma^j_b``."""
    gi = sys.pullback_paths(i)
    gj = sys.pullback_paths(j)
    return tuple(CauchyPair(psi, gi[a], gj[b], name=f"F{a + 1}{b + 1}")
                 for a in (0, 1) for b in (0, 1))


class Corrector:
    """``h = F11 + F12(z1,0)/(1+z2) + F21(0,z2)/(1+z1) + F22(0,0)/((1+z1)(1+z2))``.

    ``signs`` selects the sign pattern of the three correction terms; the
    default ``(+1, +1, +1)`` is the one under which ``h`` decays whenever
    ``psi`` vanishes on both coordinate axes.
    """

    def __init__(self, F11, F12, F21, F22, signs=(1, 1, 1)):
        self.F = (F11, F12, F21, F22)
        self.signs = signs
        self.f22 = complex(F22(0.0, 0.0))
        self.name = "h"

    def __call__(self, z1, z2):
        z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=complex), np.asarray(z2, dtype=complex))
        F11, F12, F21, _ = self.F
        s12, s21, s22 = self.signs
        return (F11(z1, z2) + s12 * F12(z1, np.zeros_like(z1)) / (1 + z2)
                + s21 * F21(np.zeros_like(z2), z2) / (1 + z1)
                + s22 * self.f22 / ((1 + z1) * (1 + z2)))

    def grid(self, z1, z2):
        z1 = np.asarray(z1, dtype=complex).ravel()
        z2 = np.asarray(z2, dtype=complex).ravel()
        F11, F12, F21, _ = self.F
        s12, s21, s22 = self.signs
        a = F12.grid(z1, [0.0])[:, 0]
        b = F21.grid([0.0], z2)[0, :]
        return (F11.grid(z1, z2) + s12 * a[:, None] / (1 + z2)[None, :]
                + s21 * b[None, :] / (1 + z1)[:, None]
                + s22 * self.f22 / ((1 + z1)[:, None] * (1 + z2)[None, :]))


def corrector_h(F11, F12, F21, F22, signs=(1, 1, 1)):
    return Corrector(F11, F12, F21, F22, signs)


def sector_sample(theta, count=24, rmin=1e-5, rmax=1e5, frac=SECTOR_FRAC):
    """Log-radial by angular grid in the sector of half-angle ``frac * theta``.

    Near the corner the contour ``Gamma1`` runs along the sector edges, so
    samples stay a fixed angle inside them to keep the Cauchy rules finite.
    """
    r = np.geomspace(rmin, rmax, count)
    ang = np.linspace(-frac, frac, 7) * theta
    return (r[:, None] * np.exp(1j * ang[None, :])).ravel()


def certify_corrector(h, theta, s=0.5, count=41):
    """``H^infty_0`` certificate of ``h`` on ``Sigma_theta x Sigma_theta``.

    ``h`` is evaluated once on a product grid spanning ``1e-5 .. 1e5`` in
    modulus. Samples are grouped by how far (in decades) the more extreme
    coordinate lies from the unit circle; decay is refuted when the ratio
    ``|h| / (profile(z1) profile(z2))`` keeps growing over the outer decades.
    """
    z = sector_sample(theta, count)
    ratio = np.abs(h.grid(z, z))
    prof = np.abs(z) ** s / (1 + np.abs(z) ** (2 * s))
    ratio = ratio / (prof[:, None] * prof[None, :])
    ext = np.abs(np.log10(np.abs(z)))
    band = np.floor(np.maximum(ext[:, None], ext[None, :])).astype(int)
    layers = tuple(float(np.max(ratio[band == k], initial=0.0)) for k in range(int(band.max()) + 1))
    k = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    best = float(ratio[k])
    tail = np.array(layers[-4:])
    growing = bool(np.all(tail[1:] > 1.05 * tail[:-1]) and tail[-1] > 2.0 * tail[0])
    ok = np.isfinite(best) and not growing
    cert = Certificate(bool(ok), best, (s, s), None if ok else (z[k[0]], z[k[1]]),
                       best, ratio.size, layers)
    return cert.raise_if_refuted()


def h_sup(h, theta, count=24):
    z = sector_sample(theta, count)
    return float(np.max(np.abs(h.grid(z, z))))


def h_constant(phi, sys, i, j, signs=(1, 1, 1)):
    """``sup |h| / ||phi||_{Delta x Delta}`` for the vertex pair ``(i, j)``."""
    psi = pulled_back(phi, sys, sys.xi_index(i), sys.xi_index(j))
    h = corrector_h(*boundary_split_F(psi, sys, i, j), signs=signs)
    den = sup_norm(phi, ProductRegion(sys.outer, sys.outer))
    return h_sup(h, sys.theta) / den if den > 0 else 0.0


# -- transfer verification -----------------------------------------------------------------

def ritt_pair_corpus(cfg, size, rng):
    """Separable products of vanishing polynomials plus raw random polynomials."""
    funs = []
    for k in range(size):
        q1 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        q2 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        f = vanishing_polynomial(cfg, q1 / np.sum(np.abs(q1)))
        g = vanishing_polynomial(cfg, q2 / np.sum(np.abs(q2)))
        funs.append(HoloFun2.separable(f, g, name=f"sep{k}"))
    polys = [random_poly(rng, 3) for _ in range(max(2, size // 2))]
    return funs + polys


def random_poly(rng, degree, zero_origin=False):
    c = rng.standard_normal((degree + 1, degree + 1)) + 1j * rng.standard_normal((degree + 1, degree + 1))
    c /= np.sum(np.abs(c))
    if zero_origin:
        c[0, 0] = 0.0
    return BivariatePoly(c)


def sector_pair_corpus(size):
    names = ["z/(1+z)^2", "z^2/(1+z)^4", "z/((1+z)(2+z))", "z/(1+z)^2*(2+z)/(3+z)"]
    funs = []
    for k in range(size):
        f = sector_builtin(names[k % len(names)])
        g = sector_builtin(names[(k // len(names) + k) % len(names)])
        funs.append(HoloFun2.separable(f, g, name=f"{f.name}(z1)*{g.name}(z2)"))
    return funs


@dataclass(frozen=True)
class TransferReport:
    K_ritt: float
    K_sect: tuple
    K_poly: float
    witnesses: dict
    finite: bool

    def to_json(self):
        return {"ritt": self.K_ritt, "sect": [list(r) for r in self.K_sect],
                "poly": self.K_poly, "witnesses": self.witnesses, "finite": self.finite}


def transfer_verify(T1, T2, cfg, theta=1.40, corpus_size=6, seed=0x177E5EED):
    """Functional-calculus constants on both sides of the transfer principle.

    ``K_ritt`` is measured on ``E_s x E_s`` for ``(T1, T2)``; ``K_sect[i][j]``
    on ``Sigma_theta x Sigma_theta`` for ``(I - conj(xi_i) T1, I - conj(xi_j) T2)``;
    ``K_poly`` is the polynomial constant routed through the four-part split.
    The report only asserts that every constant is finite.
    """
    rng = np.random.default_rng(seed)
    T1 = np.asarray(T1, dtype=complex)
    T2 = np.asarray(T2, dtype=complex)
    n = T1.shape[0]
    corpus = ritt_pair_corpus(cfg, corpus_size, rng)
    kr = estimate_fc_constant((T1, T2), cfg, [f for f in corpus if not isinstance(f, BivariatePoly)],
                              "rittE_pair")
    kp = estimate_fc_constant((T1, T2), cfg, [f for f in corpus if isinstance(f, BivariatePoly)],
                              "rittE_pair")
    scorpus = sector_pair_corpus(corpus_size)
    table, wit = [], {"ritt": kr.witness, "poly": kp.witness}
    for i, xi in enumerate(cfg.xi):
        row = []
        for j, xj in enumerate(cfg.xi):
            A1 = np.eye(n) - np.conj(xi) * T1
            A2 = np.eye(n) - np.conj(xj) * T2
            k = estimate_fc_constant((A1, A2), (theta, theta), scorpus, "sectorial_pair")
            row.append(k.value)
            wit[f"sect[{i}][{j}]"] = k.witness
        table.append(tuple(row))
    vals = [kr.value, kp.value] + [v for r in table for v in r]
    return TransferReport(kr.value, tuple(table), kp.value, wit, bool(np.all(np.isfinite(vals))))


__all__ = [
    "CauchyPair", "Corrector", "LocalizationSystem", "TransferReport", "boundary_split_F",
    "build_localization", "certify_corrector", "corrector_h", "h_constant", "h_sup", "localize",
    "pullback_g", "pulled_back", "random_poly", "transfer_verify",
]
