"""Contour-integral functional calculus for Ritt_E and sectorial matrices.

Every Cauchy-type integral carries the factor ``1/(2 pi i)`` per variable.
On a finite-dimensional Hilbert space R-boundedness of a family coincides
with uniform boundedness, so the R-Ritt_E flag reported by
:func:`classify_rittE` is the Ritt_E flag itself.
"""
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (NoConvergence, NonCommuting, PreconditionSpectrum, SingularResolvent,
                     SpectralAngle)
from .holofun import BivariatePoly, HoloFun1, HoloFun2, polynomial_split, sup_norm
from .linalg import ReducedResolvent, SchurResolvent, as_matrix, commutator_norm, spectrum
from .regions import ProductRegion, SectorRegion, StolzRegion, integrate, min_e_large_radius

TWO_PI_I = 2j * math.pi
TOL_SINGLE = 1e-9
TOL_PAIR = 1e-7
COMMUTE_TOL = 1e-10
SPECTRUM_SLACK = 1e-7
SPLIT_RTOL = 1e-11
DEFECT_RTOL = 1e-8
PAIR_GRID_CAP = 60_000_000
PAIR_BLOCK = 2_000_000


@dataclass(frozen=True)
class CalculusResult:
    value: np.ndarray
    quadrature_error: float
    contour_used: object
    nodes: int = 0
    level: int = 0
    extras: dict = field(default_factory=dict)

    def contour_json(self):
        cs = self.contour_used if isinstance(self.contour_used, tuple) else (self.contour_used,)
        return [c.to_json() for c in cs if c is not None]


# -- classification ---------------------------------------------------------------

@dataclass(frozen=True)
class RittEReport:
    is_rittE: bool
    type_radius: float
    constant: float
    witnesses: tuple
    spectrum_check: bool
    r_rittE: bool
    eigenvalues: np.ndarray = None
    layer_growth: float = 0.0
    reason: str = ""

    def to_json(self):
        return {
            "is_rittE": self.is_rittE, "type_radius": self.type_radius,
            "constant": self.constant if np.isfinite(self.constant) else None,
            "witnesses": [[complex(z).real, complex(z).imag, float(v)] for z, v in self.witnesses],
            "spectrum_check": self.spectrum_check, "r_rittE": self.r_rittE,
            "eigenvalues": [[z.real, z.imag] for z in np.asarray(self.eigenvalues)],
            "layer_growth": self.layer_growth, "reason": self.reason,
        }


def in_closed_stolz(cfg, u, z, tol=1e-9):
    """Membership of ``z`` in the closure of ``E_u`` with slack ``tol``."""
    reg = StolzRegion(cfg, u)
    z = np.asarray(z, dtype=complex)
    return reg.inside(z) | (reg.distance(z) <= tol)


def spectral_type_radius(cfg, eigs, tol=1e-9):
    """Smallest admissible radius whose closed Stolz domain holds ``eigs``.

    Returns 1.0 when no radius below one works.
    """
    lo = max(min_e_large_radius(cfg.xi) + 1e-9, 1e-6)
    hi = 1.0 - 1e-12
    if not np.all(in_closed_stolz(cfg, hi, eigs, tol)):
        return 1.0
    if np.all(in_closed_stolz(cfg, lo, eigs, tol)):
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if np.all(in_closed_stolz(cfg, mid, eigs, tol)):
            hi = mid
        else:
            lo = mid
    return hi


def _classify_grid(cfg, density):
    """Sample of ``D(0,2)`` outside the closed ``E_s``, plus dyadic layers at each xi."""
    reg = StolzRegion(cfg, cfg.s)
    rho = np.linspace(0.02, 2.0, density)
    phi = np.linspace(0, 2 * np.pi, 2 * density, endpoint=False)
    bulk = (rho[:, None] * np.exp(1j * phi[None, :])).ravel()
    edge = reg.boundary.sample(4 * density)
    edge = edge * (1 + 1e-6 / np.maximum(np.abs(edge), 1e-12))
    bulk = np.concatenate([bulk, edge])
    bulk = bulk[reg.signed_distance(bulk) > 1e-12]
    layers = []
    cone = reg.cone_half_angle
    ang = np.concatenate([np.linspace(cone + 0.02, np.pi, 12), -np.linspace(cone + 0.02, np.pi, 12)])
    for k in range(1, 25):
        d = 2.0 ** -k
        pts = np.concatenate([xi * (1 - d * np.exp(1j * ang)) for xi in cfg.xi])
        layers.append(pts[reg.signed_distance(pts) > 1e-12])
    return bulk, layers


def _weighted_norms(S, z, cfg):
    inv = _kernels.tri_inverse_stack(S.U, z)
    nrm = np.linalg.norm(inv, 2, axis=(1, 2))
    prod = np.ones(len(z))
    for xi in cfg.xi:
        prod = prod * np.abs(xi - z)
    return nrm * prod


def classify_rittE(T, cfg, grid=48):
    """Check the spectral inclusion and estimate the Ritt_E resolvent constant.

    The constant is ``max ||R(z,T)|| prod_j |xi_j - z|`` over a grid of
    ``D(0,2)`` outside the closed ``E_s``, refined dyadically toward each
    ``xi_j``. The bound is declared unbounded if the innermost four layers
    grow by more than a factor two.
    """
    T = as_matrix(T)
    eigs = spectrum(T).eigenvalues
    r_type = spectral_type_radius(cfg, eigs)
    # defective eigenvalues are only accurate to about sqrt(eps)
    spec_ok = bool(np.all(in_closed_stolz(cfg, cfg.r, eigs, SPECTRUM_SLACK)))
    S = SchurResolvent(T)
    bulk, layers = _classify_grid(cfg, grid)
    try:
        vb = _weighted_norms(S, bulk, cfg)
        lmax, lw = [], []
        for pts in layers:
            v = _weighted_norms(S, pts, cfg)
            k = int(np.argmax(v))
            lmax.append(float(v[k]))
            lw.append((pts[k], float(v[k])))
    except SingularResolvent:
        return RittEReport(False, r_type, math.inf, (), spec_ok, False, eigs, math.inf,
                           "resolvent singular on the sample")
    allv = np.concatenate([vb, [v for _, v in lw]])
    allz = np.concatenate([bulk, [z for z, _ in lw]])
    order = np.argsort(allv)[::-1][:5]
    witnesses = tuple((complex(allz[i]), float(allv[i])) for i in order)
    growth = lmax[-1] / max(lmax[-5], 1e-300)
    bounded = bool(np.all(np.isfinite(allv))) and growth <= 2.0
    c = float(np.max(allv)) if bounded else math.inf
    ok = spec_ok and bounded
    reason = "" if ok else ("spectrum outside closed E_r" if not spec_ok else
                            "resolvent bound grows toward E")
    return RittEReport(ok, r_type, c, witnesses, spec_ok, ok, eigs, float(growth), reason)


# -- single-variable Ritt_E calculus ------------------------------------------------

def _check_spectrum_in(cfg, u, eigs):
    reg = StolzRegion(cfg, u)
    xi = np.array(cfg.xi)
    at_xi = np.min(np.abs(eigs[:, None] - xi[None, :]), axis=1) <= 1e-9
    bad = ~(reg.contains(eigs) | at_xi)
    if np.any(bad):
        raise PreconditionSpectrum(f"eigenvalues {eigs[bad]} are not inside E_{u}")


def _reduced(T, cfg):
    """Resolvent with the eigenvalues sitting on E split off; they must be semisimple."""
    scale = max(1.0, np.linalg.norm(T, 1))
    S = ReducedResolvent(T, cfg.xi, SPLIT_RTOL * scale)
    if S.defect > DEFECT_RTOL * scale ** cfg.N:
        raise PreconditionSpectrum("eigenvalue on E is defective; T is not Ritt_E")
    return S


def _fc_contour(S, f, contour, tol):
    def summer(z, w):
        return S.weighted_sum(z, w * f(z) / TWO_PI_I)

    return integrate(contour, summer, tol)


def fc_rittE(f, T, cfg, u=None, tol=TOL_SINGLE, check_independence=True):
    """``f(T) = (1/2 pi i) \\oint_{dE_u} f(lam) R(lam, T) dlam``.

    ``f`` must decay at the points of E. Eigenvalues may lie inside ``E_u``
    or exactly at a point of E. When ``check_independence`` is set the
    integral is repeated on ``E_{(u+s)/2}`` and the difference is reported
    as ``extras["radius_drift"]``.
    """
    T = as_matrix(T)
    u = 0.5 * (cfg.r + cfg.s) if u is None else u
    S = _reduced(T, cfg)
    _check_spectrum_in(cfg, u, S.diag)
    reg = StolzRegion(cfg, u)
    res = _fc_contour(S, f, reg.boundary, tol)
    extras = {"u": u}
    if check_independence:
        u2 = 0.5 * (u + cfg.s)
        other = _fc_contour(S, f, StolzRegion(cfg, u2).boundary, tol)
        extras["radius_drift"] = float(np.max(np.abs(other.value - res.value)))
        extras["u_check"] = u2
    return CalculusResult(res.value, res.error, reg.boundary, res.nodes, res.level, extras)


def _is_zero(part):
    return part is None or getattr(part, "name", "") == "0"


def _double_integral(S1, S2, f12, c1, c2, tol, max_level=11):
    """(1/2 pi i)^2 double integral of ``f12(l, m) R(l,T1) R(m,T2)``.

    The two contours are refined independently: at each step the level of
    whichever variable moves the value more is raised, so a slowly decaying
    factor in one variable does not square the node count. Resolvent stacks
    are computed once per (contour, level).
    """
    n = S1.T.shape[0]

    @functools.lru_cache(maxsize=None)
    def nodes(which, level):
        c, S = (c1, S1) if which == 0 else (c2, S2)
        z, w = c.rule(level)
        return z, w, S.stack(z)

    @functools.lru_cache(maxsize=None)
    def value(l1, l2):
        z1, w1, R1 = nodes(0, l1)
        z2, w2, R2 = nodes(1, l2)
        if len(z1) * len(z2) > PAIR_GRID_CAP:
            raise NoConvergence("double contour quadrature exceeded its node budget")
        R2 = R2.reshape(len(z2), n * n)
        val = np.zeros((n, n), dtype=complex)
        step = max(1, PAIR_BLOCK // len(z2))
        for lo in range(0, len(z1), step):
            blk = slice(lo, lo + step)
            F = f12(z1[blk, None], z2[None, :]) * (w1[blk, None] * w2[None, :]) / TWO_PI_I ** 2
            val += np.einsum("kij,kjl->il", R1[blk], (F @ R2).reshape(-1, n, n))
        return val

    l1 = l2 = 1
    while max(l1, l2) < max_level:
        base = value(l1, l2)
        d1 = float(np.max(np.abs(value(l1 + 1, l2) - base)))
        d2 = float(np.max(np.abs(value(l1, l2 + 1) - base)))
        limit = tol * max(1.0, float(np.max(np.abs(base))))
        if d1 < limit and d2 < limit:
            val = value(l1 + 1, l2 + 1)
            return val, max(d1, d2), max(l1, l2) + 1, len(nodes(0, l1 + 1)[0]) + len(nodes(1, l2 + 1)[0])
        if d1 >= limit:
            l1 += 1
        if d2 >= limit:
            l2 += 1
    raise NoConvergence("double contour quadrature did not settle")


def _check_commute(T1, T2):
    scale = max(1.0, np.linalg.norm(T1, 2) * np.linalg.norm(T2, 2))
    if commutator_norm(T1, T2) > COMMUTE_TOL * scale:
        raise NonCommuting("T1 and T2 do not commute")


def fc_rittE_pair(f, T1, T2, cfg, u1=None, u2=None, tol=TOL_PAIR):
    """Joint calculus for ``f = f1(z1) + f2(z2) + f12(z1, z2)``.

    A :class:`HoloFun2` without a split is treated as a pure ``f12``.
    """
    T1 = as_matrix(T1, "T1")
    T2 = as_matrix(T2, "T2")
    _check_commute(T1, T2)
    u1 = 0.5 * (cfg.r + cfg.s) if u1 is None else u1
    u2 = 0.5 * (cfg.r + cfg.s) if u2 is None else u2
    f1, f2, f12 = f.split if f.split is not None else (None, None, f)
    n = T1.shape[0]
    val = np.zeros((n, n), dtype=complex)
    err = 0.0
    if not _is_zero(f1):
        r = fc_rittE(f1, T1, cfg, u1, tol, check_independence=False)
        val += r.value
        err += r.quadrature_error
    if not _is_zero(f2):
        r = fc_rittE(f2, T2, cfg, u2, tol, check_independence=False)
        val += r.value
        err += r.quadrature_error
    c1 = StolzRegion(cfg, u1).boundary
    c2 = StolzRegion(cfg, u2).boundary
    nodes = level = 0
    if not _is_zero(f12):
        S1, S2 = _reduced(T1, cfg), _reduced(T2, cfg)
        _check_spectrum_in(cfg, u1, S1.diag)
        _check_spectrum_in(cfg, u2, S2.diag)
        v, e, level, nodes = _double_integral(S1, S2, f12, c1, c2, tol)
        val += v
        err += e
    return CalculusResult(val, err, (c1, c2), nodes, level, {"u1": u1, "u2": u2})


# -- sectorial calculus -----------------------------------------------------------------

def spectral_angle(A):
    """Largest ``|arg lam|`` over the non-zero eigenvalues of ``A``."""
    eigs = spectrum(A).eigenvalues
    scale = max(1.0, np.max(np.abs(eigs), initial=0.0))
    nz = eigs[np.abs(eigs) > 1e-12 * scale]
    return float(np.max(np.abs(np.angle(nz)), initial=0.0)), eigs


def _sector_angle(A, theta):
    omega, eigs = spectral_angle(A)
    if omega >= theta - 1e-12:
        raise SpectralAngle(f"spectral angle {omega:.6f} is not below {theta:.6f}")
    return 0.5 * (omega + theta), omega


def _ray_grid(theta_p):
    x = np.linspace(-36, 36, 577)
    r = np.exp(x)
    return np.concatenate([r * np.exp(1j * theta_p), r * np.exp(-1j * theta_p)])


def _sector_constant(S, theta_p):
    z = _ray_grid(theta_p)
    inv = _kernels.tri_inverse_stack(S.U, z)
    return float(np.max(np.abs(z) * np.linalg.norm(inv, 2, axis=(1, 2))))


def _profile(z, s):
    a = np.abs(z)
    return a ** s / (1.0 + a ** (2 * s))


def _decay_exponent(f, default=1.0):
    d = getattr(f, "decay", None)
    if d is None:
        return default
    if hasattr(d, "exponents"):
        return float(d.exponents[0])
    return float(d.first.exponents[0])


def _truncation(c_f, C, s, tol, norm_a):
    R = (20.0 * max(c_f, 1e-300) * C / (math.pi * s * tol)) ** (1.0 / s)
    R = max(R, 2.0 * norm_a, 10.0)
    return 1.0 / R, R


def sector_contour(theta_p, r_min, r_max):
    """Boundary of the sector of half-angle ``theta_p`` from ``inf e^{i theta_p}``
    through 0 to ``inf e^{-i theta_p}``, truncated to ``[r_min, r_max]``."""
    return SectorRegion(theta_p).rays(r_min, r_max)


def fc_sectorial(f, A, theta, tol=TOL_SINGLE, s=None):
    """Sectorial calculus ``f(A)`` for ``f`` with sectorial decay of order ``s``.

    The rays are truncated where the certified tail
    ``(c_f C / (pi s)) (eps**s + R**-s)`` falls below ``tol/10``; ``c_f`` is the
    decay constant of ``f`` along the rays and ``C = sup ||z R(z,A)||`` there.
    """
    A = as_matrix(A)
    theta_p, omega = _sector_angle(A, theta)
    s = _decay_exponent(f) if s is None else s
    S = SchurResolvent(A)
    zr = _ray_grid(theta_p)
    c_f = float(np.max(np.abs(f(zr)) / _profile(zr, s)))
    C = _sector_constant(S, theta_p)
    eps, R = _truncation(c_f, C, s, tol, np.linalg.norm(A, 2))
    contour = sector_contour(theta_p, eps, R)
    res = _fc_contour(S, f, contour, tol)
    extras = {"theta_prime": theta_p, "omega": omega, "r_min": eps, "r_max": R,
              "tail_bound": tol / 10, "sector_constant": C, "decay_constant": c_f}
    return CalculusResult(res.value, res.error + tol / 10, contour, res.nodes, res.level, extras)


def fc_sectorial_pair(f, A1, A2, theta1, theta2, tol=TOL_PAIR, s=None):
    """Joint sectorial calculus for ``f = f1 + f2 + f12`` on a sector product."""
    A1 = as_matrix(A1, "A1")
    A2 = as_matrix(A2, "A2")
    _check_commute(A1, A2)
    f1, f2, f12 = f.split if f.split is not None else (None, None, f)
    n = A1.shape[0]
    val = np.zeros((n, n), dtype=complex)
    err = 0.0
    if not _is_zero(f1):
        r = fc_sectorial(f1, A1, theta1, tol)
        val += r.value
        err += r.quadrature_error
    if not _is_zero(f2):
        r = fc_sectorial(f2, A2, theta2, tol)
        val += r.value
        err += r.quadrature_error
    tp1, _ = _sector_angle(A1, theta1)
    tp2, _ = _sector_angle(A2, theta2)
    extras = {"theta_prime": (tp1, tp2)}
    contours = (None, None)
    nodes = level = 0
    if not _is_zero(f12):
        if s is None:
            d = getattr(f12, "decay", None) or getattr(f, "decay", None)
            s = (d.first.exponents[0], d.second.exponents[0]) if d is not None else (1.0, 1.0)
        s1, s2 = s
        S1, S2 = SchurResolvent(A1), SchurResolvent(A2)
        g1 = _ray_grid(tp1)[::8]
        g2 = _ray_grid(tp2)[::8]
        ratio = np.abs(f12(g1[:, None], g2[None, :])) / (_profile(g1, s1)[:, None] * _profile(g2, s2)[None, :])
        c_f = float(np.max(ratio))
        C1, C2 = _sector_constant(S1, tp1), _sector_constant(S2, tp2)
        # the other variable contributes at most c_f*C/(pi*s) after integration
        eps1, R1 = _truncation(c_f * C2 / (math.pi * s2), C1, s1, tol, np.linalg.norm(A1, 2))
        eps2, R2 = _truncation(c_f * C1 / (math.pi * s1), C2, s2, tol, np.linalg.norm(A2, 2))
        c1 = sector_contour(tp1, eps1, R1)
        c2 = sector_contour(tp2, eps2, R2)
        v, e, level, nodes = _double_integral(S1, S2, f12, c1, c2, tol)
        val += v
        err += e + tol / 5
        contours = (c1, c2)
        extras.update(r_range=((eps1, R1), (eps2, R2)), decay_constant=c_f)
    return CalculusResult(val, err, contours, nodes, level, extras)


def a_rho(A, rho):
    """``(1 - rho) I + rho A``."""
    A = as_matrix(A)
    return (1.0 - rho) * np.eye(A.shape[0]) + rho * A


# -- functional-calculus constants ------------------------------------------------------

@dataclass(frozen=True)
class FCConstant:
    value: float
    witness: str
    ratios: tuple

    def to_json(self):
        return {"K": self.value, "witness": self.witness, "ratios": list(self.ratios)}


def _reduce(names, ratios):
    ratios = [float(r) for r in ratios]
    k = int(np.argmax(ratios)) if ratios else 0
    return FCConstant(ratios[k] if ratios else 0.0, names[k] if names else "", tuple(ratios))


def estimate_fc_constant(ops, space, corpus, kind="rittE", u=None, tol=None):
    """Corpus maximum of ``||f(T)|| / ||f||_inf`` (a lower bound on the true K).

    ``kind``:
      ``"rittE"``: ``ops = T``, ``space = cfg``, functions in ``H^infty_0(E_s)``
      normed on ``E_s``;
      ``"rittE_pair"``: ``ops = (T1, T2)``; :class:`HoloFun2` items use the
      joint calculus, :class:`BivariatePoly` items are evaluated through the
      four-part split (three interpolating parts exactly, the doubly
      vanishing part by the double contour integral);
      ``"sectorial"`` / ``"sectorial_pair"``: ``space = theta`` (or a pair).
    Reductions run in corpus order, so ties resolve to the first witness.
    """
    names, ratios = [], []
    if kind == "rittE":
        reg = StolzRegion(space, space.s)
        for f in corpus:
            val = fc_rittE(f, ops, space, u, tol or TOL_SINGLE, check_independence=False).value
            den = sup_norm(f, reg)
            names.append(f.name)
            ratios.append(np.linalg.norm(val, 2) / den if den > 0 else 0.0)
    elif kind == "rittE_pair":
        T1, T2 = ops
        reg = StolzRegion(space, space.s)
        prod = ProductRegion(reg, reg)
        for f in corpus:
            if isinstance(f, BivariatePoly):
                val = poly_pair_via_split(f, T1, T2, space, u, tol or TOL_PAIR)
                name = f"poly{f.degrees}"
            else:
                val = fc_rittE_pair(f, T1, T2, space, u, u, tol or TOL_PAIR).value
                name = f.name
            den = sup_norm(f, prod)
            names.append(name)
            ratios.append(np.linalg.norm(val, 2) / den if den > 0 else 0.0)
    elif kind == "sectorial":
        reg = SectorRegion(space)
        for f in corpus:
            val = fc_sectorial(f, ops, space, tol or TOL_SINGLE).value
            den = sup_norm(f, reg)
            names.append(f.name)
            ratios.append(np.linalg.norm(val, 2) / den if den > 0 else 0.0)
    elif kind == "sectorial_pair":
        A1, A2 = ops
        th1, th2 = space if np.ndim(space) else (space, space)
        prod = ProductRegion(SectorRegion(th1), SectorRegion(th2))
        for f in corpus:
            val = fc_sectorial_pair(f, A1, A2, th1, th2, tol or TOL_PAIR).value
            den = sup_norm(f, prod)
            names.append(f.name)
            ratios.append(np.linalg.norm(val, 2) / den if den > 0 else 0.0)
    else:
        raise ValueError(f"unknown constant kind {kind!r}")
    return _reduce(names, ratios)


def poly_pair_via_split(phi, T1, T2, cfg, u=None, tol=TOL_PAIR):
    """``phi(T1, T2)`` as ``P1 + P2 + P3`` (direct) plus ``P4`` by contour integral."""
    P1, P2, P3, P4 = polynomial_split(phi, cfg)
    direct = (P1 + P2 + P3).of_matrices(T1, T2)
    if not np.any(np.abs(P4.coeffs) > 0):
        return direct
    f = HoloFun2(P4.__call__, None, None, "P4")
    return direct + fc_rittE_pair(f, T1, T2, cfg, u, u, tol).value


__all__ = [
    "CalculusResult", "FCConstant", "HoloFun1", "RittEReport", "a_rho", "classify_rittE",
    "estimate_fc_constant", "fc_rittE", "fc_rittE_pair", "fc_sectorial",
    "fc_sectorial_pair", "poly_pair_via_split", "sector_contour", "spectral_type_radius",
]
