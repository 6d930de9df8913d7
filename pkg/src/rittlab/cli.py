"""Command-line entry point: ``rittlab <command> [--config path] [--flag value]...``."""
import argparse
import json
import math
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from ._kernels import BACKEND
from .errors import ConfigInvalid, RittlabError
from .linalg import load_matrix, matrix_to_json
from .regions import SpectralConfig

COMMANDS = ("classify", "calc", "calc-pair", "constant", "transfer", "dilate", "dilate-joint",
            "suite", "gen-corpus")


# -- configuration --------------------------------------------------------------------------

def _complex_list(text):
    if isinstance(text, list):
        return [complex(*v) if isinstance(v, list) else complex(v) for v in text]
    return [complex(t.strip().replace(" ", "")) for t in str(text).split(",") if t.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="rittlab", description="Ritt_E / sectorial functional-calculus workbench")
    p.add_argument("--version", action="version", version=f"rittlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, spectral=True):
        sp.add_argument("--config", help="JSON file with default values for any flag")
        sp.add_argument("--out", help="write the JSON report here (default: stdout)")
        sp.add_argument("--dump-geometry", action="store_true", default=None,
                        help="include contour geometry in the report")
        if spectral:
            sp.add_argument("--xi", help="points of E, comma-separated complex literals (e.g. '1,-1')")
            sp.add_argument("--r", type=float)
            sp.add_argument("--s", type=float)
            sp.add_argument("--u", type=float, help="contour radius between r and s")
            sp.add_argument("--tol", type=float)

    sp = sub.add_parser("classify", help="Ritt_E classification of one matrix")
    common(sp)
    sp.add_argument("--matrix")
    sp.add_argument("--grid", type=int)

    for name in ("calc", "calc-pair"):
        sp = sub.add_parser(name, help="contour-integral functional calculus")
        common(sp)
        sp.add_argument("--matrix")
        sp.add_argument("--matrix2")
        sp.add_argument("--function", help="built-in name, or 'zero'")
        sp.add_argument("--function2", help="second factor for calc-pair (separable product)")
        sp.add_argument("--params", help="JSON object of built-in parameters")
        sp.add_argument("--sector", type=float, help="use the sectorial calculus with this half-angle")

    sp = sub.add_parser("constant", help="corpus estimate of the functional-calculus constant")
    common(sp)
    sp.add_argument("--matrix")
    sp.add_argument("--corpus-size", type=int)
    sp.add_argument("--seed", type=lambda v: int(v, 0))

    sp = sub.add_parser("transfer", help="two-sided transfer check for a commuting pair")
    common(sp)
    sp.add_argument("--matrix")
    sp.add_argument("--matrix2")
    sp.add_argument("--theta", type=float)
    sp.add_argument("--corpus-size", type=int)
    sp.add_argument("--pin", help="regression baseline file (written if absent, compared otherwise)")

    for name in ("dilate", "dilate-joint"):
        sp = sub.add_parser(name, help="isometric dilation and its verification")
        common(sp)
        sp.add_argument("--matrix")
        sp.add_argument("--matrix2")
        sp.add_argument("--depth", type=int, help="series truncation K")
        sp.add_argument("--cyclic", type=int, help="cyclic length M")
        sp.add_argument("--nmax", type=int)
        sp.add_argument("--p", type=float)

    sp = sub.add_parser("suite", help="run the acceptance battery")
    common(sp, spectral=False)
    sp.add_argument("--only", help="comma-separated criterion numbers")

    sp = sub.add_parser("gen-corpus", help="write the deterministic matrix corpus")
    common(sp, spectral=False)
    sp.add_argument("--seed", type=lambda v: int(v, 0))
    sp.add_argument("--size", type=int)
    sp.add_argument("--dir", help="output directory")
    return p


DEFAULTS = {
    "xi": [1.0], "r": 0.3, "s": 0.6, "u": None, "tol": None, "grid": 48, "function": None,
    "function2": None, "params": None, "sector": None, "corpus_size": 6, "seed": 0x177E5EED,
    "theta": 1.40, "pin": None, "depth": 60, "cyclic": None, "nmax": 8, "p": 2.0, "only": None,
    "size": 10, "dir": "corpus", "dump_geometry": False, "matrix": None, "matrix2": None,
}


def resolve_config(args):
    """Merge defaults, the ``--config`` file and explicit flags (in increasing priority)."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigInvalid({"config": str(exc)})
        if not isinstance(doc, dict):
            raise ConfigInvalid({"config": "top level must be a JSON object"})
        cfg.update({k.replace("-", "_"): v for k, v in doc.items()})
    for k, v in vars(args).items():
        if v is not None and k not in ("command", "config", "out"):
            cfg[k] = v
    cfg["command"] = args.command
    validate(cfg)
    return cfg


def validate(cfg):
    errors = {}
    try:
        cfg["xi"] = _complex_list(cfg["xi"])
    except (TypeError, ValueError) as exc:
        errors["xi"] = str(exc)
    r, s, u = cfg["r"], cfg["s"], cfg["u"]
    if not (isinstance(r, (int, float)) and isinstance(s, (int, float)) and 0 < r < s < 1):
        errors["r,s"] = f"need 0 < r < s < 1, got r={r}, s={s}"
    elif u is not None and not r < u < s:
        errors["u"] = f"need r < u < s, got u={u}"
    if not 0 < float(cfg["theta"]) < math.pi / 2:
        errors["theta"] = "need 0 < theta < pi/2"
    for key in ("depth", "nmax", "corpus_size", "size", "grid"):
        if int(cfg[key]) < 1:
            errors[key] = "must be a positive integer"
    if cfg["p"] < 1:
        errors["p"] = "need p >= 1"
    if cfg["params"] is not None and isinstance(cfg["params"], str):
        try:
            cfg["params"] = json.loads(cfg["params"])
        except ValueError as exc:
            errors["params"] = str(exc)
    needs = {"classify": ["matrix"], "calc": ["matrix", "function"], "constant": ["matrix"],
             "calc-pair": ["matrix", "matrix2", "function"], "transfer": ["matrix", "matrix2"],
             "dilate": ["matrix"], "dilate-joint": ["matrix", "matrix2"]}
    for key in needs.get(cfg.get("command"), []):
        if cfg.get(key) is None:
            errors[key] = "required"
    if errors:
        raise ConfigInvalid(errors)
    return cfg


def spectral_config(cfg):
    try:
        return SpectralConfig(cfg["xi"], cfg["r"], cfg["s"])
    except RittlabError as exc:
        raise ConfigInvalid({"xi,r,s": str(exc)})


# -- commands ------------------------------------------------------------------------------

def _matrix(cfg, key):
    try:
        return load_matrix(cfg[key])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigInvalid({key: f"cannot read matrix: {exc}"})


def _mat(m):
    return matrix_to_json(np.asarray(m))


def _function(cfg, name, spec):
    from .corpus import function_from_spec
    from .holofun import sector_builtin, zero_fun
    if name in ("zero", "0"):
        return zero_fun()
    if cfg["sector"] is not None:
        return sector_builtin(name)
    return function_from_spec({"name": name, **(cfg["params"] or {})}, spec)


def cmd_classify(cfg):
    from .calculus import classify_rittE
    spec = spectral_config(cfg)
    rep = classify_rittE(_matrix(cfg, "matrix"), spec, cfg["grid"])
    return rep.to_json(), {}


def cmd_calc(cfg):
    from .calculus import fc_rittE, fc_sectorial
    T = _matrix(cfg, "matrix")
    spec = spectral_config(cfg)
    f = _function(cfg, cfg["function"], spec)
    if f.name == "0":
        out = {"value": _mat(np.zeros_like(T)), "error_estimate": 0.0, "function": "0"}
        return out, {}
    tol = cfg["tol"] or 1e-9
    if cfg["sector"] is not None:
        res = fc_sectorial(f, T, cfg["sector"], tol)
    else:
        res = fc_rittE(f, T, spec, cfg["u"], tol)
    out = {"value": _mat(res.value), "error_estimate": res.quadrature_error, "nodes": res.nodes,
           "level": res.level, "function": f.name,
           "extras": {k: v for k, v in res.extras.items() if isinstance(v, (int, float, str))}}
    if cfg["dump_geometry"]:
        out["contour"] = res.contour_json()
    checks = {}
    if "radius_drift" in res.extras:
        checks["radius_independence"] = res.extras["radius_drift"] <= 2 * tol * max(1.0, float(np.max(np.abs(res.value))))
    return out, checks


def cmd_calc_pair(cfg):
    from .calculus import fc_rittE_pair, fc_sectorial_pair
    from .holofun import HoloFun2
    T1, T2 = _matrix(cfg, "matrix"), _matrix(cfg, "matrix2")
    spec = spectral_config(cfg)
    f = _function(cfg, cfg["function"], spec)
    g = _function(cfg, cfg["function2"] or cfg["function"], spec)
    F = HoloFun2.separable(f, g)
    tol = cfg["tol"] or 1e-7
    if cfg["sector"] is not None:
        res = fc_sectorial_pair(F, T1, T2, cfg["sector"], cfg["sector"], tol)
    else:
        res = fc_rittE_pair(F, T1, T2, spec, cfg["u"], cfg["u"], tol)
    out = {"value": _mat(res.value), "error_estimate": res.quadrature_error, "nodes": res.nodes,
           "function": F.name}
    if cfg["dump_geometry"]:
        out["contour"] = res.contour_json()
    return out, {}


def cmd_constant(cfg):
    from .calculus import estimate_fc_constant
    from .corpus import stolz_functions
    spec = spectral_config(cfg)
    T = _matrix(cfg, "matrix")
    corpus = stolz_functions(spec, np.random.default_rng(cfg["seed"]), n_random=cfg["corpus_size"])
    k = estimate_fc_constant(T, spec, corpus, "rittE", cfg["u"], cfg["tol"])
    return k.to_json(), {"finite": bool(np.isfinite(k.value))}


def cmd_transfer(cfg):
    from .transfer import transfer_verify
    spec = spectral_config(cfg)
    rep = transfer_verify(_matrix(cfg, "matrix"), _matrix(cfg, "matrix2"), spec,
                          cfg["theta"], cfg["corpus_size"], cfg["seed"])
    out = rep.to_json()
    checks = {"finite": rep.finite}
    if cfg["pin"]:
        pin = Path(cfg["pin"])
        current = {"ritt": rep.K_ritt, "poly": rep.K_poly, "sect": [list(r) for r in rep.K_sect]}
        if pin.exists():
            base = json.loads(pin.read_text())
            dev = max(abs(a - b) / max(abs(b), 1e-300) for a, b in zip(_flat(current), _flat(base)))
            out["pin_deviation"] = dev
            checks["within_pin"] = dev <= 0.05
        else:
            write_atomic(pin, json.dumps(current, indent=1, sort_keys=True))
            out["pin_written"] = str(pin)
    return out, checks


def _flat(d):
    return [d["ritt"], d["poly"]] + [v for row in d["sect"] for v in row]


def cmd_dilate(cfg):
    from .dilation import build_dilation, verify_dilation
    spec = spectral_config(cfg)
    model = build_dilation(_matrix(cfg, "matrix"), spec, cfg["depth"], cfg["cyclic"],
                           cfg["p"], cfg["nmax"])
    rep = verify_dilation(model, cfg["nmax"])
    return rep.to_json(), {"within_tail_bound": all(e <= b for e, b in zip(rep.errors_by_n, rep.tail_bound)),
                           "isometry": rep.isometry_check < 1e-14}


def cmd_dilate_joint(cfg):
    from .dilation import build_joint_dilation, verify_joint_dilation
    spec = spectral_config(cfg)
    jd = build_joint_dilation(_matrix(cfg, "matrix"), _matrix(cfg, "matrix2"), spec,
                              cfg["depth"], cfg["cyclic"], cfg["p"], cfg["nmax"])
    rep = verify_joint_dilation(jd, cfg["nmax"])
    return rep.to_json(), {"joint_dilation": rep.ok}


def cmd_suite(cfg):
    from .acceptance import run_suite
    only = None
    if cfg["only"]:
        only = [int(v) for v in str(cfg["only"]).split(",")]
    results = run_suite(only)
    for r in results:
        print(r.line(), file=sys.stderr)
    return {"criteria": [r.to_json() for r in results]}, {f"criterion_{r.number}": r.passed for r in results}


def cmd_gen_corpus(cfg):
    from .corpus import gen_corpus, write_corpus
    path = write_corpus(gen_corpus(cfg["seed"], cfg["size"]), cfg["dir"])
    return {"manifest": str(path)}, {}


HANDLERS = {
    "classify": cmd_classify, "calc": cmd_calc, "calc-pair": cmd_calc_pair,
    "constant": cmd_constant, "transfer": cmd_transfer, "dilate": cmd_dilate,
    "dilate-joint": cmd_dilate_joint, "suite": cmd_suite, "gen-corpus": cmd_gen_corpus,
}


# -- reports ---------------------------------------------------------------------------------

def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _jsonable(v):
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (bool, int, float, str)):
        return v
    raise TypeError(f"not serializable: {type(v).__name__}")


def _apply_threads():
    n = os.environ.get("RITTLAB_THREADS")
    if not n:
        return
    try:
        import numba
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    except (ImportError, ValueError):
        pass


def run(cfg):
    """Dispatch one command; returns the report dictionary."""
    t0 = time.perf_counter()
    results, checks = HANDLERS[cfg["command"]](cfg)
    echo = {k: v for k, v in cfg.items() if v is not None}
    echo["xi"] = [[z.real, z.imag] for z in cfg["xi"]]
    return {
        "command": cfg["command"],
        "config": echo,
        "results": results,
        "checks": checks,
        "ok": all(checks.values()),
        "versions": {"rittlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version(), "backend": BACKEND},
        "wall_clock": round(time.perf_counter() - t0, 3),
    }


def main(argv=None):
    args = build_parser().parse_args(argv)
    _apply_threads()
    try:
        cfg = resolve_config(args)
        report = run(cfg)
    except ConfigInvalid as exc:
        print(json.dumps({"error": "ConfigInvalid", "fields": exc.errors}, indent=1), file=sys.stderr)
        return 2
    except RittlabError as exc:
        print(f"rittlab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = json.dumps(report, indent=1, sort_keys=True, default=_jsonable)
    if args.out:
        write_atomic(args.out, text)
    else:
        print(text)
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
