"""Spectral domains, oriented contours and contour quadrature.

Regions are open. Every region exposes ``contains`` (vectorised, with a
``1e-12`` tie band treated as outside), ``distance`` to its boundary and a
``boundary`` contour. Contours are lists of oriented pieces; ``rule(level)``
returns composite Gauss-Legendre nodes and complex weights (``dz`` folded in),
dyadically refined with ``level`` and geometrically graded toward designated
corner points.
"""
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateHull, MeetOutsideDisc, NoConvergence, NonConvex

GL_ORDER = 12
GRADE_RATIO = 0.25
GRADE_LAYERS = 8
GRADE_STEP = 3
GRADE_MAX_LAYERS = 25
TIE_TOL = 1e-12
MAX_LEVEL = 14
DEFAULT_TOL = 1e-10


@functools.lru_cache(maxsize=None)
def _gauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _composite(breaks):
    """GL nodes/weights on [0,1] for the panels delimited by ``breaks``."""
    x, w = _gauss(GL_ORDER)
    breaks = np.asarray(breaks, dtype=float)
    a = breaks[:-1, None]
    h = np.diff(breaks)[:, None]
    return (a + h * x).ravel(), (h * w).ravel()


def _uniform(a, b, count):
    return np.linspace(a, b, count + 1)


# -- contour pieces ---------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """Straight piece from ``a`` to ``b``; optional grading toward either end."""

    a: complex
    b: complex
    grade_start: bool = False
    grade_end: bool = False

    @staticmethod
    def _half_breaks(level, graded):
        """Panel breaks on ``[0, 1/2]``, measured from the nearer endpoint."""
        # fractional-power decay at a vertex needs depth to grow faster than the level
        layers = min(GRADE_LAYERS + GRADE_STEP * level, GRADE_MAX_LAYERS)
        lo = GRADE_RATIO if graded else 0.0
        pts = [_uniform(lo, 0.5, max(1, 2 ** level // 2))]
        if graded:
            g = np.concatenate(([0.0], GRADE_RATIO ** np.arange(layers, 0, -1)))
            # coarse layers are never wider than the uniform panels
            counts = [max(level + 1, math.ceil((g[k + 1] - g[k]) * 2 ** (level + 1)))
                      for k in range(len(g) - 1)]
            pts += [_uniform(g[k], g[k + 1], c) for k, c in enumerate(counts)]
        return np.unique(np.concatenate(pts))

    def rule(self, level):
        # the far half is parametrised from ``b`` so nodes near it keep full relative precision
        d = self.b - self.a
        t1, w1 = _composite(self._half_breaks(level, self.grade_start))
        t2, w2 = _composite(self._half_breaks(level, self.grade_end))
        z = np.concatenate((self.a + d * t1, (self.b - d * t2)[::-1]))
        return z, np.concatenate((d * w1, (d * w2)[::-1]))

    def point(self, t):
        return self.a + (self.b - self.a) * np.asarray(t)

    @property
    def length(self):
        return abs(self.b - self.a)

    def distance(self, z):
        z = np.asarray(z, dtype=complex)
        d = self.b - self.a
        if d == 0:
            return np.abs(z - self.a)
        t = np.clip(((z - self.a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
        return np.abs(z - (self.a + t * d))

    def to_json(self):
        return {"type": "segment", "start": [self.a.real, self.a.imag],
                "end": [self.b.real, self.b.imag],
                "graded": [bool(self.grade_start), bool(self.grade_end)]}


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius*exp(i t)``, ``t`` from ``t0`` to ``t1``."""

    center: complex
    radius: float
    t0: float
    t1: float

    def rule(self, level):
        base = max(1, math.ceil(abs(self.t1 - self.t0) / (math.pi / 2)))
        t, w = _composite(_uniform(0.0, 1.0, base * 2 ** level))
        th = self.t0 + (self.t1 - self.t0) * t
        z = self.center + self.radius * np.exp(1j * th)
        return z, 1j * (z - self.center) * (self.t1 - self.t0) * w

    def point(self, t):
        th = self.t0 + (self.t1 - self.t0) * np.asarray(t)
        return self.center + self.radius * np.exp(1j * th)

    @property
    def a(self):
        return complex(self.point(0.0))

    @property
    def b(self):
        return complex(self.point(1.0))

    @property
    def length(self):
        return self.radius * abs(self.t1 - self.t0)

    def distance(self, z):
        z = np.asarray(z, dtype=complex)
        lo, hi = sorted((self.t0, self.t1))
        ang = np.angle(z - self.center)
        rel = np.mod(ang - lo, 2 * np.pi)
        on = rel <= hi - lo
        radial = np.abs(np.abs(z - self.center) - self.radius)
        ends = np.minimum(np.abs(z - self.a), np.abs(z - self.b))
        return np.where(on, radial, ends)

    def to_json(self):
        return {"type": "arc", "center": [self.center.real, self.center.imag],
                "radius": self.radius, "angles": [self.t0, self.t1]}


@dataclass(frozen=True)
class Ray:
    """Log-parametrised ray ``vertex + direction*exp(x)``, ``x`` from ``x0`` to ``x1``.

    Used for truncated sector boundaries; uniform panels in ``x`` grade the
    path geometrically toward both the vertex and infinity.
    """

    vertex: complex
    direction: complex
    x0: float
    x1: float

    def rule(self, level):
        base = max(1, math.ceil(abs(self.x1 - self.x0) / 2.0))
        t, w = _composite(_uniform(0.0, 1.0, base * 2 ** level))
        x = self.x0 + (self.x1 - self.x0) * t
        off = self.direction * np.exp(x)
        return self.vertex + off, off * (self.x1 - self.x0) * w

    def point(self, t):
        x = self.x0 + (self.x1 - self.x0) * np.asarray(t)
        return self.vertex + self.direction * np.exp(x)

    @property
    def a(self):
        return complex(self.point(0.0))

    @property
    def b(self):
        return complex(self.point(1.0))

    @property
    def length(self):
        return abs(math.exp(self.x1) - math.exp(self.x0))

    def distance(self, z):
        return Segment(self.a, self.b).distance(z)

    def to_json(self):
        return {"type": "segment", "start": [self.a.real, self.a.imag],
                "end": [self.b.real, self.b.imag], "log_parametrised": True}


@dataclass(frozen=True)
class Contour:
    pieces: tuple
    closed: bool = True

    def rule(self, level=3):
        zs, ws = zip(*(p.rule(level) for p in self.pieces))
        return np.concatenate(zs), np.concatenate(ws)

    @property
    def nodes(self):
        return self.rule()[0]

    @property
    def weights(self):
        return self.rule()[1]

    def distance(self, z):
        z = np.asarray(z, dtype=complex)
        return functools.reduce(np.minimum, (p.distance(z) for p in self.pieces))

    def winding(self, z0, level=4):
        z, w = self.rule(level)
        return complex(np.sum(w / (z - z0)) / (2j * np.pi))

    def sample(self, count):
        """Points spread along the contour in proportion to piece length."""
        lengths = np.array([min(p.length, 1e3) for p in self.pieces])
        share = np.maximum(1, np.round(count * lengths / lengths.sum())).astype(int)
        t = [(np.arange(k) + 0.5) / k for k in share]
        return np.concatenate([np.asarray(p.point(tt)) for p, tt in zip(self.pieces, t)])

    def reversed(self):
        out = []
        for p in reversed(self.pieces):
            if isinstance(p, Segment):
                out.append(Segment(p.b, p.a, p.grade_end, p.grade_start))
            elif isinstance(p, Arc):
                out.append(Arc(p.center, p.radius, p.t1, p.t0))
            else:
                out.append(Ray(p.vertex, p.direction, p.x1, p.x0))
        return Contour(tuple(out), self.closed)

    def mapped(self, a, b):
        """Image under the affine map ``z -> a*z + b`` (a != 0)."""
        out = []
        for p in self.pieces:
            if isinstance(p, Segment):
                out.append(Segment(a * p.a + b, a * p.b + b, p.grade_start, p.grade_end))
            elif isinstance(p, Arc):
                rot = float(np.angle(a))
                out.append(Arc(a * p.center + b, abs(a) * p.radius, p.t0 + rot, p.t1 + rot))
            else:
                out.append(Ray(a * p.vertex + b, a / abs(a) * p.direction,
                               p.x0 + math.log(abs(a)), p.x1 + math.log(abs(a))))
        return Contour(tuple(out), self.closed)

    def to_json(self):
        return {"closed": self.closed, "pieces": [p.to_json() for p in self.pieces]}


def circle(center, radius):
    return Contour((Arc(complex(center), float(radius), 0.0, 2 * math.pi),))


# -- quadrature -------------------------------------------------------------

@dataclass(frozen=True)
class QuadResult:
    value: object
    error: float
    level: int
    nodes: int


def _size(v):
    return float(np.max(np.abs(v), initial=0.0))


def integrate(contour, summer, tol=DEFAULT_TOL, min_level=1, max_level=MAX_LEVEL):
    """Dyadically refine until two successive levels agree to ``tol``.

    ``summer(nodes, weights)`` must return the weighted sum of the integrand,
    which lets callers evaluate matrix-valued integrands without
    materialising one matrix per node. Agreement is measured in max-entry
    norm, relative to ``max(1, |value|)``.
    """
    prev = None
    for level in range(min_level, max_level + 1):
        z, w = contour.rule(level)
        val = summer(z, w)
        if prev is not None:
            err = _size(np.asarray(val) - np.asarray(prev))
            if err < tol * max(1.0, _size(val)):
                return QuadResult(val, err, level, len(z))
        prev = val
    raise NoConvergence(f"quadrature did not settle within {max_level} refinement levels")


def quadrature(contour, f, tol=DEFAULT_TOL):
    """Integral of ``f`` over ``contour``; ``f`` is evaluated on node arrays."""

    def summer(z, w):
        vals = np.asarray(f(z))
        return np.tensordot(w, vals, axes=(0, 0))

    return integrate(contour, summer, tol).value


# -- spectral configuration --------------------------------------------------

@dataclass(frozen=True)
class SpectralConfig:
    """Finite set ``xi`` on the unit circle with radii ``0 < r < s < 1``.

    ``xi`` is stored sorted counter-clockwise by argument in ``[0, 2*pi)``.
    """

    xi: tuple
    r: float
    s: float

    def __post_init__(self):
        pts = [complex(z) for z in np.atleast_1d(np.asarray(self.xi, dtype=complex))]
        if not pts:
            raise ValueError("E must be non-empty")
        for z in pts:
            if abs(abs(z) - 1.0) > 1e-12:
                raise ValueError(f"point {z} is not on the unit circle")
        for i, z in enumerate(pts):
            for w in pts[i + 1:]:
                if abs(z - w) <= 1e-9:
                    raise ValueError("points of E must be distinct")
        if not 0.0 < self.r < self.s < 1.0:
            raise ValueError("radii must satisfy 0 < r < s < 1")
        pts.sort(key=lambda z: np.mod(np.angle(z), 2 * np.pi))
        object.__setattr__(self, "xi", tuple(pts))
        check_e_large(self.xi, self.r)

    @property
    def N(self):
        return len(self.xi)

    @property
    def angles(self):
        return np.mod(np.angle(np.array(self.xi)), 2 * np.pi)

    @property
    def min_gap(self):
        if self.N == 1:
            return 2.0
        x = np.array(self.xi)
        return float(min(abs(a - b) for i, a in enumerate(x) for b in x[i + 1:]))

    def to_json(self):
        return {"xi": [[z.real, z.imag] for z in self.xi], "r": self.r, "s": self.s}

    @classmethod
    def from_json(cls, doc):
        return cls(tuple(complex(a, b) for a, b in doc["xi"]), doc["r"], doc["s"])


def check_e_large(xi, u):
    """Tangency arcs ``[theta_j - acos u, theta_j + acos u]`` must be disjoint."""
    if len(xi) < 2:
        return
    th = np.sort(np.mod(np.angle(np.asarray(xi)), 2 * np.pi))
    gaps = np.diff(np.concatenate((th, [th[0] + 2 * np.pi])))
    need = 2 * math.acos(u)
    if np.min(gaps) <= need:
        raise DegenerateHull(
            f"radius {u} too small: tangency arcs overlap (min angular gap "
            f"{np.min(gaps):.4f} <= {need:.4f})")


def min_e_large_radius(xi):
    """Smallest radius for which the tangency arcs are disjoint."""
    if len(xi) < 2:
        return 0.0
    th = np.sort(np.mod(np.angle(np.asarray(xi)), 2 * np.pi))
    gaps = np.diff(np.concatenate((th, [th[0] + 2 * np.pi])))
    return math.cos(float(np.min(gaps)) / 2)


# -- regions ----------------------------------------------------------------

class Region:
    kind = "region"
    boundary: Contour

    def inside(self, z):
        raise NotImplementedError

    def distance(self, z):
        return self.boundary.distance(z)

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        return self.inside(z) & (self.distance(z) > TIE_TOL)

    def signed_distance(self, z):
        """Distance to the boundary, negative inside."""
        d = self.distance(z)
        return np.where(self.inside(np.asarray(z, dtype=complex)), -d, d)

    def corners(self):
        """Boundary points where decay conditions bind."""
        return ()

    def to_json(self):
        return {"kind": self.kind, "boundary": self.boundary.to_json()}


class StolzRegion(Region):
    """Interior of the convex hull of ``D(0,u)`` and the points of ``E``."""

    kind = "stolz"

    def __init__(self, cfg, u):
        if not 0.0 < u < 1.0:
            raise ValueError("u must lie in (0, 1)")
        check_e_large(cfg.xi, u)
        self.cfg = cfg
        self.u = float(u)
        self.alpha = math.acos(u)
        th = cfg.angles
        self.tangents = [(u * np.exp(1j * (t - self.alpha)), u * np.exp(1j * (t + self.alpha)))
                         for t in th]
        pieces = []
        for j, (xi, (tm, tp)) in enumerate(zip(cfg.xi, self.tangents)):
            pieces.append(Segment(tm, xi, grade_end=True))
            pieces.append(Segment(xi, tp, grade_start=True))
            t_next = th[(j + 1) % cfg.N] + (2 * np.pi if j + 1 == cfg.N else 0.0)
            pieces.append(Arc(0j, self.u, th[j] + self.alpha, t_next - self.alpha))
        self.boundary = Contour(tuple(pieces))

    def inside(self, z):
        z = np.asarray(z, dtype=complex)
        res = np.abs(z) < self.u
        for xi, (tm, tp) in zip(self.cfg.xi, self.tangents):
            res |= _in_triangle(z, xi, tp, tm)
        return res

    def corners(self):
        return self.cfg.xi

    @property
    def cone_half_angle(self):
        return math.asin(self.u)

    def to_json(self):
        d = super().to_json()
        d.update(u=self.u, config=self.cfg.to_json())
        return d


def _cross(a, b):
    return (np.conj(a) * b).imag


def _in_triangle(z, a, b, c):
    """Strict interior of the counter-clockwise triangle (a, b, c)."""
    return (_cross(b - a, z - a) > 0) & (_cross(c - b, z - b) > 0) & (_cross(a - c, z - c) > 0)


class SectorRegion(Region):
    """Open sector ``{v + t*axis*e^{i phi}: t > 0, |phi| < half_angle}``.

    ``boundary`` is the closed truncation by the circle ``|z - v| = radius``;
    ``rays(r_min, r_max)`` gives the open log-graded boundary used by the
    calculus.
    """

    kind = "sector"

    def __init__(self, half_angle, vertex=0j, axis=1 + 0j, radius=1e3):
        if not 0.0 < half_angle < math.pi:
            raise ValueError("half-angle must lie in (0, pi)")
        self.half_angle = float(half_angle)
        self.vertex = complex(vertex)
        self.axis = complex(axis) / abs(axis)
        self.radius = float(radius)
        up = self.axis * np.exp(1j * self.half_angle)
        dn = self.axis * np.exp(-1j * self.half_angle)
        ax = float(np.angle(self.axis))
        self.boundary = Contour((
            Segment(self.vertex + self.radius * up, self.vertex, grade_end=True),
            Segment(self.vertex, self.vertex + self.radius * dn, grade_start=True),
            Arc(self.vertex, self.radius, ax - self.half_angle, ax + self.half_angle),
        ))

    def inside(self, z):
        w = (np.asarray(z, dtype=complex) - self.vertex) / self.axis
        return (np.abs(w) > 0) & (np.abs(np.angle(w)) < self.half_angle)

    def distance(self, z):
        z = np.asarray(z, dtype=complex)
        up = self.axis * np.exp(1j * self.half_angle)
        dn = self.axis * np.exp(-1j * self.half_angle)
        return np.minimum(_ray_distance(z, self.vertex, up), _ray_distance(z, self.vertex, dn))

    def rays(self, r_min, r_max):
        up = self.axis * np.exp(1j * self.half_angle)
        dn = self.axis * np.exp(-1j * self.half_angle)
        lo, hi = math.log(r_min), math.log(r_max)
        return Contour((Ray(self.vertex, up, hi, lo), Ray(self.vertex, dn, lo, hi)), closed=False)

    def corners(self):
        return (self.vertex,)

    def to_json(self):
        d = super().to_json()
        d.update(half_angle=self.half_angle, vertex=[self.vertex.real, self.vertex.imag],
                 axis=[self.axis.real, self.axis.imag])
        return d


def _ray_distance(z, v, d):
    t = np.maximum(((z - v) * np.conj(d)).real, 0.0)
    return np.abs(z - (v + t * d))


class PolygonRegion(Region):
    """Open convex polygon with counter-clockwise vertices.

    Vertices on the unit circle are treated as corners and graded.
    """

    kind = "polygon"

    def __init__(self, vertices, corners=None):
        v = np.asarray(vertices, dtype=complex)
        if len(v) < 3:
            raise NonConvex("a polygon needs at least 3 vertices")
        edges = np.roll(v, -1) - v
        turn = _cross(edges, np.roll(edges, -1))
        if np.any(turn <= 1e-14):
            raise NonConvex("vertex cycle is not strictly convex and counter-clockwise")
        self.vertices = v
        if corners is None:
            corners = [z for z in v if abs(abs(z) - 1) <= 1e-12]
        self._corners = tuple(complex(c) for c in corners)
        flags = [any(abs(z - c) < 1e-14 for c in self._corners) for z in v]
        n = len(v)
        self.boundary = Contour(tuple(
            Segment(v[k], v[(k + 1) % n], flags[k], flags[(k + 1) % n]) for k in range(n)))

    def inside(self, z):
        z = np.asarray(z, dtype=complex)
        res = np.ones(z.shape, dtype=bool)
        n = len(self.vertices)
        for k in range(n):
            a, b = self.vertices[k], self.vertices[(k + 1) % n]
            res &= _cross(b - a, z - a) > 0
        return res

    def corners(self):
        return self._corners

    def to_json(self):
        d = super().to_json()
        d["vertices"] = [[z.real, z.imag] for z in self.vertices]
        return d


class ProductRegion(Region):
    """Cartesian product; the boundary is the distinguished boundary pair."""

    kind = "product"

    def __init__(self, first, second):
        self.first = first
        self.second = second
        self.boundary = (first.boundary, second.boundary)

    def inside(self, z1, z2=None):
        return self.first.inside(z1) & self.second.inside(z2)

    def contains(self, z1, z2=None):
        return self.first.contains(z1) & self.second.contains(z2)

    def distance(self, z1, z2=None):
        return np.minimum(self.first.distance(z1), self.second.distance(z2))

    def to_json(self):
        return {"kind": self.kind, "factors": [self.first.to_json(), self.second.to_json()]}


def build_stolz(cfg, u):
    return StolzRegion(cfg, u)


def build_sector(half_angle, vertex=0j, axis=1 + 0j):
    return SectorRegion(half_angle, vertex, axis)


# -- sampling ----------------------------------------------------------------

def sample_interior(region, count, rng, box=1.0):
    """Uniform rejection sample of interior points within ``|Re|,|Im| <= box``."""
    out = []
    have = 0
    while have < count:
        z = (rng.uniform(-box, box, 4 * count) + 1j * rng.uniform(-box, box, 4 * count))
        z = z[region.contains(z)]
        out.append(z)
        have += len(z)
    return np.concatenate(out)[:count]


def inward_offset(region, z, eps):
    """Move boundary points ``z`` by ``eps`` toward the region (numerical normal)."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    dirs = np.exp(1j * np.linspace(0, 2 * np.pi, 256, endpoint=False))
    for k, p in enumerate(z):
        cand = p + eps * dirs
        sd = region.signed_distance(cand)
        out[k] = p + eps * dirs[int(np.argmin(sd))]
    return out


def corner_layers(region, layers=12, ratio=0.5, per_layer=16):
    """Interior points approaching each corner geometrically, one array per layer.

    Layer ``k`` sits at distance ``ratio**(k+1)`` from the corners. For a
    Stolz region the points fill the cone at each ``xi_j``; for a sector they
    approach both the vertex and infinity.
    """
    out = []
    for k in range(layers):
        d = ratio ** (k + 1)
        pts = []
        if isinstance(region, StolzRegion):
            phi = np.linspace(-0.95, 0.95, per_layer) * region.cone_half_angle
            pts = [xi * (1 - d * np.exp(1j * phi)) for xi in region.cfg.xi]
        elif isinstance(region, SectorRegion):
            phi = np.linspace(-0.95, 0.95, per_layer) * region.half_angle
            pts = [region.vertex + rad * region.axis * np.exp(1j * phi) for rad in (d, 1.0 / d)]
        elif isinstance(region, PolygonRegion):
            n = len(region.vertices)
            frac = np.linspace(0.05, 0.95, per_layer)
            for i, v in enumerate(region.vertices):
                if any(abs(v - c) < 1e-14 for c in region.corners()):
                    a = np.angle(region.vertices[i - 1] - v)
                    turn = np.angle((region.vertices[(i + 1) % n] - v) / (region.vertices[i - 1] - v))
                    pts.append(v + d * np.exp(1j * (a + turn * frac)))
        z = np.concatenate(pts) if pts else np.zeros(0, dtype=complex)
        out.append(z[region.contains(z)])
    return out


# -- transfer polygons --------------------------------------------------------

@dataclass(frozen=True)
class TransferPolygons:
    """Nested convex polygons around the spectrum.

    ``zeta`` are the shared vertices (the points of E plus auxiliary points at
    radius ``r``), ``beta`` their sector half-angles, ``c`` the inner polygon's
    remaining vertices and ``d = (c + c/|c|)/2`` the outer polygon's.
    """

    inner: PolygonRegion
    outer: PolygonRegion
    zeta: np.ndarray
    beta: np.ndarray
    c: np.ndarray
    d: np.ndarray
    on_circle: np.ndarray
    aux_count: int = field(default=0)

    def __iter__(self):
        return iter((self.inner, self.outer, {"zeta": self.zeta, "c": self.c, "d": self.d}))

    @property
    def m(self):
        return len(self.zeta)

    def to_json(self):
        cx = lambda arr: [[complex(z).real, complex(z).imag] for z in arr]  # noqa: E731
        return {"zeta": cx(self.zeta), "c": cx(self.c), "d": cx(self.d),
                "beta": list(map(float, self.beta)),
                "inner": self.inner.to_json(), "outer": self.outer.to_json()}


def d_from_c(c):
    c = np.asarray(c, dtype=complex)
    return 0.5 * (c + c / np.abs(c))


def _line_meet(p, u, q, v):
    """Intersection parameters of p + t*u and q + s*v."""
    den = _cross(u, v)
    if abs(den) < 1e-15:
        return None
    t = _cross(q - p, v) / den
    s = _cross(q - p, u) / den
    return t, s


def _try_polygons(cfg, theta, count, rho, aux_beta):
    th = np.append(cfg.angles, cfg.angles[0] + 2 * math.pi)
    chord = math.pi - 2 * theta
    spans = np.diff(th) - 2 * chord
    ref = np.min(spans[spans > 0], initial=1.0)
    zeta, beta, circ = [], [], []
    for j in range(cfg.N):
        zeta.append(cfg.xi[j])
        beta.append(theta)
        circ.append(True)
        if spans[j] > 0:
            # wider gaps get proportionally more points
            k_gap = max(count, int(round(count * spans[j] / ref)))
            step = spans[j] / (k_gap + 1)
            lo = th[j] + chord
            for k in range(1, k_gap + 1):
                zeta.append(rho * np.exp(1j * (lo + step * k)))
                beta.append(aux_beta)
                circ.append(False)
    zeta = np.array(zeta)
    beta = np.array(beta)
    m = len(zeta)
    if m < 3:
        raise NonConvex("a polygon needs at least 3 vertices")
    c = np.empty(m, dtype=complex)
    for i in range(m):
        a, b = zeta[i], zeta[(i + 1) % m]
        ua = -a * np.exp(-1j * beta[i])
        ub = -b * np.exp(1j * beta[(i + 1) % m])
        hit = _line_meet(a, ua, b, ub)
        if hit is None or hit[0] <= 0 or hit[1] <= 0:
            raise MeetOutsideDisc(f"sector boundaries at vertices {i}, {i + 1} do not meet")
        c[i] = a + hit[0] * ua
        if not 1e-12 < abs(c[i]) < 1.0:
            raise MeetOutsideDisc(f"c_{i} = {c[i]} lies outside the punctured disc")
    return zeta, beta, np.array(circ), c


def _interleave(zeta, other):
    out = np.empty(2 * len(zeta), dtype=complex)
    out[0::2] = zeta
    out[1::2] = other
    return out


def build_transfer_polygons(cfg, theta=1.40, aux_arc_points=1, max_aux=12):
    """Construct the inner and outer polygons of the transfer argument.

    The points of E get half-angle ``theta``. Auxiliary vertices sit equally
    spaced on an arc of radius ``rho`` between the points where consecutive
    sector rays leave the disc. Starting from ``aux_arc_points`` per gap, the
    count, ``rho`` and the auxiliary half-angle are searched in a fixed order
    until both polygons are convex, ``c_i`` lies in the punctured disc, the
    inner polygon sits inside the outer one and covers the closed ``E_r``.
    """
    if not 0.0 < theta < math.pi / 2:
        raise ValueError("theta must lie in (0, pi/2)")
    if theta <= math.asin(cfg.r):
        raise MeetOutsideDisc("theta must exceed asin(r) so the polygon can hold E_r")
    guard = StolzRegion(cfg, cfg.r).boundary.sample(400)
    guard = guard[np.min(np.abs(guard[:, None] - np.array(cfg.xi)[None, :]), axis=1) > 1e-3]
    last = MeetOutsideDisc("no admissible auxiliary placement found")
    rhos = np.concatenate((np.arange(max(0.5, round(cfg.r + 0.05, 2)), 0.98, 0.02),
                           1.0 - 0.02 * 0.7 ** np.arange(1, 16)))
    betas = np.linspace(math.pi / 2 - 0.01, 0.2, 40)
    for count in range(max(1, aux_arc_points), max_aux + 1):
        for rho in rhos:
            for aux_beta in betas:
                try:
                    zeta, beta, circ, c = _try_polygons(cfg, theta, count, rho, aux_beta)
                    corners = list(zeta[circ])
                    inner = PolygonRegion(_interleave(zeta, c), corners=corners)
                    d = d_from_c(c)
                    outer = PolygonRegion(_interleave(zeta, d), corners=corners)
                except (MeetOutsideDisc, NonConvex) as exc:
                    last = exc
                    continue
                probe = np.concatenate([c, 0.5 * (c + np.roll(zeta, -1)), 0.5 * (c + zeta)])
                if not np.all(outer.inside(probe) | (outer.distance(probe) <= 1e-12)):
                    last = NonConvex("inner polygon not contained in the outer one")
                    continue
                if not np.all(inner.inside(guard)):
                    continue
                return TransferPolygons(inner, outer, zeta, beta, c, d, circ, count)
    raise last
