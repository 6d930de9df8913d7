"""Deterministic matrix and function corpora."""
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .holofun import builtin, vanishing_polynomial
from .linalg import matrix_to_json
from .regions import SpectralConfig

SEED = 0x177E5EED
PAIR_TMAX = 0.8

CONFIGS = {
    "E1": SpectralConfig([1.0], 0.3, 0.6),
    "E2": SpectralConfig([1.0, -1.0], 0.3, 0.6),
    "E3": SpectralConfig([np.exp(2j * np.pi * k / 3) for k in range(3)], 0.55, 0.75),
}

FUNCTION_CORPUS = [
    {"name": "one_minus_z^1"},
    {"name": "one_minus_z^2"},
    {"name": "one_minus_z^3"},
    {"name": "prod_linear_factors", "roots": [[1.5, 0.0]]},
    {"name": "prod_linear_factors", "roots": [[0.0, 2.0], [-2.0, 0.0]]},
    {"name": "rational(p,q)", "p": [[1.0, 0.0]], "q": [[2.0, 0.0], [1.0, 0.0]]},
    {"name": "rational(p,q)", "p": [[1.0, 0.0], [0.5, 0.0]], "q": [[3.0, 0.0], [0.0, 1.0]]},
    {"name": "frac_vanish", "s": 0.5},
]


def _cx(v):
    a = np.asarray(v, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def function_from_spec(spec, cfg):
    """Resolve a function-corpus record; complex parameters are ``[re, im]`` pairs."""
    params = {k: (_cx(v) if k in ("roots", "p", "q") else v) for k, v in spec.items() if k != "name"}
    return builtin(spec["name"], cfg, **params)


def stolz_functions(cfg, rng, n_random=12, degree=3, specs=FUNCTION_CORPUS):
    """Named built-ins followed by random polynomials vanishing on ``E``."""
    funs = [function_from_spec(s, cfg) for s in specs]
    for _ in range(n_random):
        q = rng.standard_normal(degree) + 1j * rng.standard_normal(degree)
        funs.append(vanishing_polynomial(cfg, q / np.sum(np.abs(q))))
    return funs


def unitary(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def sample_closed_stolz(cfg, rng, count, r=None, hit_xi=0.25, tmax=0.999):
    """Points of the closed ``E_r``: the disc, segments toward each ``xi_j``, and ``xi_j`` itself.

    Segment points stop at the fraction ``tmax`` of the way to ``xi_j``.
    """
    r = cfg.r if r is None else r
    out = np.empty(count, dtype=complex)
    for k in range(count):
        u = rng.uniform()
        base = 0.95 * r * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        if u < hit_xi:
            out[k] = cfg.xi[rng.integers(cfg.N)]
        elif u < 0.6:
            xi = cfg.xi[rng.integers(cfg.N)]
            out[k] = base + rng.uniform(0.0, tmax) * (xi - base)
        else:
            out[k] = base
    return out


def normal_ritt(cfg, rng, n):
    lam = sample_closed_stolz(cfg, rng, n)
    U = unitary(rng, n)
    return U @ np.diag(lam) @ U.conj().T, lam, U


def semisimple_ritt(cfg, rng, n, cond=20.0):
    """Non-normal but diagonalizable: ``P diag(lam) P^{-1}`` with ``cond(P)`` about ``cond``."""
    lam = sample_closed_stolz(cfg, rng, n)
    U, W = unitary(rng, n), unitary(rng, n)
    P = U @ np.diag(np.geomspace(1.0, cond, n)) @ W
    return P @ np.diag(lam) @ np.linalg.inv(P), lam, P


def jordan_at_xi(cfg, rng, n):
    xi = cfg.xi[rng.integers(cfg.N)]
    lam = sample_closed_stolz(cfg, rng, n, hit_xi=0.0)
    lam[:2] = xi
    T = np.diag(lam).astype(complex)
    T[0, 1] = 1.0
    U = unitary(rng, n)
    return U @ T @ U.conj().T


def commuting_normal_pair(cfg, rng, n, r=None, tmax=PAIR_TMAX):
    """Simultaneously diagonal pair; eigenvalues off E keep ``|lam| < 1`` by a margin
    so that dilation tails are short."""
    U = unitary(rng, n)
    d1 = sample_closed_stolz(cfg, rng, n, r, tmax=tmax)
    d2 = sample_closed_stolz(cfg, rng, n, r, tmax=tmax)
    return U @ np.diag(d1) @ U.conj().T, U @ np.diag(d2) @ U.conj().T


def commuting_triangular_pair(rng, n, radius=0.2):
    """``S`` upper triangular with small spectrum and ``p(S)`` for a random quadratic ``p``."""
    S = np.triu(0.3 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))), 1)
    S += np.diag(radius * np.sqrt(rng.uniform(size=n)) * np.exp(2j * np.pi * rng.uniform(size=n)))
    c = 0.3 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
    return S, c[0] * S + c[1] * S @ S


@dataclass
class Corpus:
    seed: int
    ritt_true: list = field(default_factory=list)
    ritt_false: list = field(default_factory=list)
    pairs_normal: list = field(default_factory=list)
    pairs_nonnormal: list = field(default_factory=list)
    functions: list = field(default_factory=lambda: list(FUNCTION_CORPUS))

    def manifest(self):
        def entries(items, kind):
            return [{"config": c, "file": f"{kind}_{k:03d}.json"} for k, (c, *_) in enumerate(items)]

        return {
            "seed": self.seed,
            "configs": {k: v.to_json() for k, v in CONFIGS.items()},
            "ritt_true": entries(self.ritt_true, "ritt_true"),
            "ritt_false": entries(self.ritt_false, "ritt_false"),
            "pairs_normal": entries(self.pairs_normal, "pair_normal"),
            "pairs_nonnormal": entries(self.pairs_nonnormal, "pair_nonnormal"),
            "functions": self.functions,
        }


def gen_corpus(seed=SEED, size=10, n_max=6):
    """Matrices per configuration: ``size`` Ritt_E examples, ``size // 2`` Jordan non-examples
    and ``size // 2`` commuting pairs of each kind."""
    rng = np.random.default_rng(seed)
    corpus = Corpus(seed)
    for key, cfg in CONFIGS.items():
        for k in range(size):
            n = int(rng.integers(2, n_max + 1))
            T = (normal_ritt if k % 2 == 0 else semisimple_ritt)(cfg, rng, n)[0]
            corpus.ritt_true.append((key, T))
        for _ in range(max(1, size // 2)):
            n = int(rng.integers(2, n_max + 1))
            corpus.ritt_false.append((key, jordan_at_xi(cfg, rng, n)))
        for _ in range(max(1, size // 2)):
            n = int(rng.integers(2, n_max + 1))
            corpus.pairs_normal.append((key, *commuting_normal_pair(cfg, rng, n)))
            corpus.pairs_nonnormal.append((key, *commuting_triangular_pair(rng, n)))
    return corpus


def _atomic_write(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_corpus(corpus, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    man = corpus.manifest()
    for kind, items in (("ritt_true", corpus.ritt_true), ("ritt_false", corpus.ritt_false)):
        for entry, (_, T) in zip(man[kind], items):
            _atomic_write(out / entry["file"], json.dumps(matrix_to_json(T), sort_keys=True))
    for kind, items in (("pairs_normal", corpus.pairs_normal), ("pairs_nonnormal", corpus.pairs_nonnormal)):
        for entry, (_, T1, T2) in zip(man[kind], items):
            doc = {"T1": matrix_to_json(T1), "T2": matrix_to_json(T2)}
            _atomic_write(out / entry["file"], json.dumps(doc, sort_keys=True))
    _atomic_write(out / "corpus.json", json.dumps(man, sort_keys=True, indent=1))
    return out / "corpus.json"


__all__ = ["CONFIGS", "Corpus", "FUNCTION_CORPUS", "SEED", "function_from_spec", "gen_corpus",
           "stolz_functions", "write_corpus"]
