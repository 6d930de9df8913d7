"""The acceptance battery: twelve property and oracle gates."""
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np
import numpy.polynomial.polynomial as npoly

from .calculus import (TOL_SINGLE, classify_rittE, fc_rittE, fc_rittE_pair, fc_sectorial,
                       fc_sectorial_pair)
from .corpus import (CONFIGS, SEED, gen_corpus, normal_ritt, sample_closed_stolz, semisimple_ritt,
                     stolz_functions, unitary)
from .dilation import (build_dilation, build_joint_dilation, ergodic_decompose, shift_norm_p2,
                       square_function, verify_dilation, verify_joint_dilation)
from .holofun import (BivariatePoly, HoloFun2, SECTOR_BUILTINS, polynomial_split, reciprocal_coeffs,
                      sector_builtin, vanishing_poly)
from .regions import SpectralConfig, sample_interior
from .transfer import (boundary_split_F, build_localization, certify_corrector, corrector_h,
                       h_constant, localize, pullback_g, pulled_back, random_poly, transfer_verify)


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        return f"criterion {self.number:2d} {'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"

    def to_json(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "detail": self.detail, "seconds": round(self.seconds, 3)}


def _rng(k):
    return np.random.default_rng([SEED, k])


def _with_oracle(cfg, rng, count):
    """Diagonalizable matrices ``P D P^{-1}``, alternately normal and non-normal."""
    out = []
    for k in range(count):
        n = int(rng.integers(2, 7))
        out.append((normal_ritt if k % 2 == 0 else semisimple_ritt)(cfg, rng, n))
    return out


def _sector_matrix(rng, n, omega=0.9, cond=10.0):
    lam = np.exp(rng.uniform(-2.5, 1.5, n)) * np.exp(1j * rng.uniform(-omega, omega, n))
    P = unitary(rng, n) @ np.diag(np.geomspace(1.0, cond, n)) @ unitary(rng, n)
    return lam, P


def _cond(P):
    return float(np.linalg.cond(P))


# -- 1 -------------------------------------------------------------------------------------------

def criterion_1():
    rng = _rng(1)
    worst = 0.0
    count = 0
    cfgs = list(CONFIGS.values())
    for k, (T, lam, P) in enumerate(_with_oracle(cfgs[0], rng, 20) + _with_oracle(cfgs[1], rng, 15)
                                    + _with_oracle(cfgs[2], rng, 15)):
        cfg = cfgs[0] if k < 20 else cfgs[1] if k < 35 else cfgs[2]
        Pinv = np.linalg.inv(P)
        for f in stolz_functions(cfg, _rng(100 + k % 3)):
            val = fc_rittE(f, T, cfg, check_independence=False).value
            err = np.linalg.norm(val - P @ np.diag(f(lam)) @ Pinv, 2) / (1e-7 * _cond(P))
            worst = max(worst, err)
            count += 1
    # sectorial single and pair, Ritt_E pair: separable oracles at 1e-6 cond(P)
    names = list(SECTOR_BUILTINS)
    for k in range(20):
        n = int(rng.integers(2, 6))
        lam, P = _sector_matrix(rng, n)
        A = P @ np.diag(lam) @ np.linalg.inv(P)
        for name in names:
            f = sector_builtin(name)
            val = fc_sectorial(f, A, 1.2).value
            err = np.linalg.norm(val - P @ np.diag(f(lam)) @ np.linalg.inv(P), 2) / (1e-6 * _cond(P))
            worst = max(worst, err)
            count += 1
    for k in range(6):
        n = int(rng.integers(2, 5))
        l1, P = _sector_matrix(rng, n)
        l2 = np.exp(rng.uniform(-2, 1.5, n)) * np.exp(1j * rng.uniform(-0.9, 0.9, n))
        Pi = np.linalg.inv(P)
        A1, A2 = P @ np.diag(l1) @ Pi, P @ np.diag(l2) @ Pi
        f, g = sector_builtin(names[k % 3]), sector_builtin(names[(k + 1) % 6])
        val = fc_sectorial_pair(HoloFun2.separable(f, g), A1, A2, 1.2, 1.2).value
        err = np.linalg.norm(val - P @ np.diag(f(l1) * g(l2)) @ Pi, 2) / (1e-6 * _cond(P))
        worst = max(worst, err)
        count += 1
    cfg = CONFIGS["E2"]
    funs = stolz_functions(cfg, _rng(5), n_random=2)
    for k in range(8):
        n = int(rng.integers(2, 5))
        T1, l1, P = semisimple_ritt(cfg, rng, n)
        l2 = sample_closed_stolz(cfg, rng, n)
        Pi = np.linalg.inv(P)
        T2 = P @ np.diag(l2) @ Pi
        f, g = funs[k % len(funs)], funs[(3 * k + 1) % len(funs)]
        val = fc_rittE_pair(HoloFun2.separable(f, g), T1, T2, cfg).value
        err = np.linalg.norm(val - P @ np.diag(f(l1) * g(l2)) @ Pi, 2) / (1e-6 * _cond(P))
        worst = max(worst, err)
        count += 1
    return worst <= 1.0, f"{count} evaluations, worst error/(tol*cond) = {worst:.3g}"


# -- 2 -------------------------------------------------------------------------------------------

def criterion_2():
    rng = _rng(2)
    hom, drift_ratio = 0.0, 0.0
    for key, cfg in CONFIGS.items():
        funs = stolz_functions(cfg, _rng(200), n_random=4)
        for T, lam, P in _with_oracle(cfg, rng, 6):
            vals = [fc_rittE(f, T, cfg) for f in funs]
            for r in vals:
                drift_ratio = max(drift_ratio, r.extras["radius_drift"]
                                  / (2 * TOL_SINGLE * max(1.0, float(np.max(np.abs(r.value))))))
            for i in range(len(funs)):
                j = (i + 3) % len(funs)
                fg = fc_rittE(funs[i] * funs[j], T, cfg, check_independence=False).value
                hom = max(hom, float(np.linalg.norm(fg - vals[i].value @ vals[j].value, 2)))
    ok = hom <= 1e-7 and drift_ratio <= 1.0
    return ok, f"max ||(fg)(T) - f(T)g(T)|| = {hom:.3g}; radius drift / (2 tol) = {drift_ratio:.3g}"


# -- 3 -------------------------------------------------------------------------------------------

def criterion_3():
    rng = _rng(3)
    cfg = CONFIGS["E1"]
    sys = build_localization(cfg, math.pi / 3)
    i0 = sys.circle_vertices()[0]
    p = sys.xi_index(i0)
    part, split, f11 = 0.0, 0.0, 0.0
    for _ in range(20):
        phi = random_poly(rng, int(rng.integers(1, 4)), zero_origin=True)
        z1 = sample_interior(sys.inner, 50, rng)
        z2 = sample_interior(sys.inner, 50, rng)
        total = sum(localize(phi, sys, i, j)(z1, z2) for i in range(sys.m) for j in range(sys.m))
        part = max(part, float(np.max(np.abs(total - phi(z1, z2)))))
        # pulled-back grid: w = 1 - conj(xi) lam with lam inside the inner polygon
        w1 = 1 - np.conj(cfg.xi[p]) * z1
        w2 = 1 - np.conj(cfg.xi[p]) * z2
        psi = pulled_back(phi, sys, p, p)
        F = boundary_split_F(psi, sys, i0, i0)
        split = max(split, float(np.max(np.abs(sum(Fk(w1, w2) for Fk in F) - psi(w1, w2)))))
        g = pullback_g(localize(phi, sys, i0, i0), sys, p, p)
        f11 = max(f11, float(np.max(np.abs(F[0](w1, w2) - g(w1, w2)))))
    ok = part <= 1e-7 and split <= 1e-7 and f11 <= 1e-7
    return ok, f"partition {part:.3g}, F-split {split:.3g}, F11 vs g {f11:.3g} (20 polynomials, m={sys.m})"


# -- 4 -------------------------------------------------------------------------------------------

def criterion_4(count=20):
    """The corpus is the doubly vanishing part ``P4`` of random polynomials."""
    rng = _rng(4)
    cfg = CONFIGS["E1"]
    sys = build_localization(cfg, 1.40)
    i0 = sys.circle_vertices()[0]
    p = sys.xi_index(i0)
    Ks, drift, refuted = [], 0.0, 0
    for _ in range(count):
        P4 = polynomial_split(random_poly(rng, 3), cfg)[3]
        psi = pulled_back(P4, sys, p, p)
        h = corrector_h(*boundary_split_F(psi, sys, i0, i0))
        try:
            certify_corrector(h, sys.theta)
        except Exception:
            refuted += 1
        drift = max(drift, abs(complex(h(1e-4, 1e-4)) - complex(h(1e-6, 1e-6))))
        Ks.append(h_constant(P4, sys, i0, i0))
    stab = max(Ks) / float(np.median(Ks))
    ok = refuted == 0 and drift < 1e-3 and stab <= 3.0
    return ok, (f"{count - refuted}/{count} certified, drift {drift:.3g}, "
                f"K max/median = {stab:.3g} (median {np.median(Ks):.3g})")


# -- 5 -------------------------------------------------------------------------------------------

def criterion_5():
    rng = _rng(5)
    coef, vanish = 0.0, 0.0
    for cfg in CONFIGS.values():
        for _ in range(10):
            d1, d2 = (int(v) for v in rng.integers(0, 6, 2))
            c = rng.standard_normal((d1 + 1, d2 + 1)) + 1j * rng.standard_normal((d1 + 1, d2 + 1))
            phi = BivariatePoly(c)
            parts = polynomial_split(phi, cfg)
            total = parts[0] + parts[1] + parts[2] + parts[3]
            coef = max(coef, float(np.max(np.abs((total - phi).coeffs))))
            z = 1.2 * (rng.uniform(-1, 1, 64) + 1j * rng.uniform(-1, 1, 64))
            for xi in cfg.xi:
                vanish = max(vanish, float(np.max(np.abs(parts[3](xi, z)))),
                             float(np.max(np.abs(parts[3](z, xi)))))
    return coef <= 1e-12 and vanish <= 1e-9, f"coefficient defect {coef:.3g}, P4 on E x C {vanish:.3g}"


# -- 6 -------------------------------------------------------------------------------------------

def criterion_6(M=200):
    conv = 0.0
    for cfg in list(CONFIGS.values()):
        a = reciprocal_coeffs(cfg, M)
        q = vanishing_poly(cfg)
        c = npoly.polymul(q, a)[:M - cfg.N]
        c[0] -= 1
        conv = max(conv, float(np.max(np.abs(c))))
    m = np.arange(M)
    closed = {
        "{1}": (SpectralConfig([1.0], 0.3, 0.6), np.ones(M)),
        "{1,-1}": (SpectralConfig([1.0, -1.0], 0.3, 0.6), (m % 2 == 0).astype(float)),
        "{i,-i}": (SpectralConfig([1j, -1j], 0.3, 0.6),
                   np.where(m % 2 == 0, (-1.0) ** (m // 2), 0.0)),
    }
    form = max(float(np.max(np.abs(reciprocal_coeffs(cfg, M) - ref))) for cfg, ref in closed.values())
    return conv <= 1e-12 and form <= 1e-12, f"convolution defect {conv:.3g}, closed forms {form:.3g}"


# -- 7 -------------------------------------------------------------------------------------------

def criterion_7(corpus):
    worst, nonnormal = 0.0, 0
    for key, T in corpus.ritt_true:
        dec = ergodic_decompose(T, CONFIGS[key])
        worst = max(worst, dec.check(T))
        nonnormal += np.linalg.norm(T @ T.conj().T - T.conj().T @ T) > 1e-8
    return worst <= 1e-10, f"{len(corpus.ritt_true)} matrices ({nonnormal} non-normal), defect {worst:.3g}"


# -- 8 -------------------------------------------------------------------------------------------

def criterion_8(corpus):
    rng = _rng(8)
    cfg = CONFIGS["E1"]
    x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    zero = abs(square_function(np.zeros((3, 3)), cfg, x) - np.linalg.norm(x))
    half = abs(square_function(0.5 * np.eye(3), cfg, x) - 2 / 3 * np.linalg.norm(x))
    failures = 0
    for key, T in corpus.ritt_true:
        try:
            square_function(T, CONFIGS[key], np.ones(T.shape[0]))
        except Exception:
            failures += 1
    ok = zero == 0.0 and half <= 1e-9 and failures == 0
    return ok, f"T=0 defect {zero:.3g}, diag(0.5) defect {half:.3g}, unconverged {failures}"


# -- 9 -------------------------------------------------------------------------------------------

def criterion_9(corpus, K=60, K_joint=120, n_max=8):
    over, iso, worst = 0, 0.0, 0.0
    for key, T in corpus.ritt_true:
        rep = verify_dilation(build_dilation(T, CONFIGS[key], K, n_max=n_max), n_max)
        over += sum(e > b for e, b in zip(rep.errors_by_n, rep.tail_bound))
        iso = max(iso, rep.isometry_check)
        worst = max(worst, max(rep.errors_by_n))
    jover, red, comm = 0, 0.0, 0.0
    for key, T1, T2 in corpus.pairs_normal[::2] + corpus.pairs_nonnormal[::2]:
        rep = verify_joint_dilation(build_joint_dilation(T1, T2, CONFIGS[key], K_joint, n_max=n_max), n_max)
        jover += sum(rep.errors[k] > rep.tail_bound[k] for k in rep.errors)
        red = max(red, rep.reduces_to_single)
        comm = max(comm, rep.commute_defect)
    ok = over == 0 and iso < 1e-14 and jover == 0 and red <= 1e-10 and comm < 1e-14
    return ok, (f"single: {over} bound violations, max error {worst:.3g}, isometry {iso:.3g}; "
                f"joint: {jover} violations, reduction {red:.3g}, U1U2-U2U1 {comm:.3g}")


# -- 10 ------------------------------------------------------------------------------------------

def criterion_10():
    rng = _rng(10)
    analytic = max(abs(shift_norm_p2(BivariatePoly([[0, 0], [0, 1]])) - 1),
                   abs(shift_norm_p2(BivariatePoly([[1], [1]])) - 2),
                   abs(shift_norm_p2(BivariatePoly([[0, 1], [1, 0]])) - 2))
    viol = 0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        U = unitary(rng, n)
        a, b = np.exp(2j * np.pi * rng.uniform(size=n)), np.exp(2j * np.pi * rng.uniform(size=n))
        T1, T2 = U @ np.diag(a) @ U.conj().T, U @ np.diag(b) @ U.conj().T
        phi = random_poly(rng, int(rng.integers(1, 5)))
        viol += np.linalg.norm(phi.of_matrices(T1, T2), 2) > shift_norm_p2(phi) * (1 + 1e-6)
    return analytic <= 1e-6 and viol == 0, f"analytic defect {analytic:.3g}, von Neumann violations {viol}/20"


# -- 11 ------------------------------------------------------------------------------------------

PINS_RESOURCE = "pins.json"


def load_pins():
    try:
        return json.loads(resources.files("rittlab").joinpath("data", PINS_RESOURCE).read_text())
    except FileNotFoundError:
        return {}


def transfer_baselines(corpus, corpus_size=4):
    out = []
    for k, (key, T1, T2) in enumerate(corpus.pairs_nonnormal[::3]):
        rep = transfer_verify(T1, T2, CONFIGS[key], corpus_size=corpus_size)
        out.append({"index": 3 * k, "config": key, **{f: v for f, v in rep.to_json().items()
                                                      if f in ("ritt", "sect", "poly")}})
    return out


def _flat(rec):
    return [rec["ritt"], rec["poly"]] + [v for row in rec["sect"] for v in row]


def criterion_11(corpus, pins=None):
    normal_worst = 0.0
    for key, T1, T2 in corpus.pairs_normal[::3]:
        rep = transfer_verify(T1, T2, CONFIGS[key], corpus_size=4)
        normal_worst = max([normal_worst, rep.K_ritt, rep.K_poly] + [v for r in rep.K_sect for v in r])
    pins = load_pins() if pins is None else pins
    base = pins.get("transfer_nonnormal")
    current = transfer_baselines(corpus)
    finite = all(np.all(np.isfinite(_flat(r))) for r in current)
    if base is None:
        return False, f"normal max K {normal_worst:.4f}; no pinned baselines found"
    dev = max(abs(a - b) / max(abs(b), 1e-300)
              for r, s in zip(current, base) for a, b in zip(_flat(r), _flat(s)))
    ok = normal_worst <= 1.05 and finite and dev <= 0.05 and len(current) == len(base)
    return ok, f"normal max K {normal_worst:.4f}; non-normal finite={finite}, max deviation from pins {dev:.3g}"


# -- 12 ------------------------------------------------------------------------------------------

def criterion_12(corpus):
    good = sum(classify_rittE(T, CONFIGS[k]).is_rittE for k, T in corpus.ritt_true)
    bad = sum(not classify_rittE(T, CONFIGS[k]).is_rittE for k, T in corpus.ritt_false)
    ok = good == len(corpus.ritt_true) and bad == len(corpus.ritt_false)
    return ok, f"ritt_true {good}/{len(corpus.ritt_true)} accepted, ritt_false {bad}/{len(corpus.ritt_false)} rejected"


CRITERIA = {
    1: ("oracle calculus", lambda c: criterion_1()),
    2: ("algebra homomorphism", lambda c: criterion_2()),
    3: ("Cauchy partitions", lambda c: criterion_3()),
    4: ("corrector h", lambda c: criterion_4()),
    5: ("polynomial split", lambda c: criterion_5()),
    6: ("reciprocal series", lambda c: criterion_6()),
    7: ("ergodic decomposition", criterion_7),
    8: ("square function", criterion_8),
    9: ("dilation identity", criterion_9),
    10: ("shift norms", lambda c: criterion_10()),
    11: ("transfer coherence", criterion_11),
    12: ("classifier discrimination", criterion_12),
}


def run_criterion(number, corpus=None):
    corpus = gen_corpus() if corpus is None else corpus
    name, fn = CRITERIA[number]
    t = time.perf_counter()
    try:
        ok, detail = fn(corpus)
    except Exception as exc:  # a crash is a failed gate, reported with its cause
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return CriterionResult(number, name, bool(ok), detail, time.perf_counter() - t)


def run_suite(numbers=None, workers=None):
    """Run the selected criteria; results come back in criterion order."""
    numbers = sorted(CRITERIA) if numbers is None else list(numbers)
    workers = workers or int(os.environ.get("RITTLAB_THREADS", "1") or 1)
    corpus = gen_corpus()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(lambda k: run_criterion(k, corpus), numbers))


__all__ = ["CRITERIA", "CriterionResult", "load_pins", "run_criterion", "run_suite",
           "transfer_baselines"]
