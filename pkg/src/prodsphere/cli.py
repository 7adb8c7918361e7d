"""Command-line front end.

Every command prints one JSON report on stdout (or writes it to ``--out``);
diagnostics go to stderr.  Exit codes: 0 ok, 2 parse/validation error,
3 unsupported (circle) dimension, 4 dimension mismatch, 5 no witness
expected, 6 witness search exhausted.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import gegenbauer as gg
from .classify import Level, classify
from .errors import (DimensionMismatch, PreconditionError, SchemeError, UnsupportedDimension,
                     WitnessSearchExhausted)
from .geometry import ProductPointSet
from .kernel import (SAMPLE_DEGREE, GeometricScheme, ParameterizedScheme, SparseScheme,
                     SupportMask, bounded_mask, eval_kernel, geometric_closed_form,
                     index_quadrants, project_coefficients)
from .witness import antipodal_doubling_witness, gamma_witness, gram, lift_quadrant_witness

logger = logging.getLogger("prodsphere")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DIMENSION = 3
EXIT_MISMATCH = 4
EXIT_NO_WITNESS = 5
EXIT_EXHAUSTED = 6

NEGATIVE_FLAG_TOL = -1e-8


class ConfigError(ValueError):
    pass


class CommandExit(Exception):
    def __init__(self, code: int, message: str, result: dict | None = None):
        super().__init__(message)
        self.code = code
        self.result = result


# --- serialization --------------------------------------------------------

def _format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.16e}"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, type(None))):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = (pad + json.dumps(str(k)) + ": " + dumps(v, indent, _level + 1) for k, v in obj.items())
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dim_to_json(d):
    return "inf" if gg.is_infinite(d) else int(d)


# --- config parsing -------------------------------------------------------

def _load_json(path: str, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{what} {path}: {exc.strerror}") from exc
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _field(obj, key, where, kind=None):
    if not isinstance(obj, dict) or key not in obj:
        raise ConfigError(f"missing field '{where}{key}'")
    value = obj[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"field '{where}{key}' has the wrong type ({type(value).__name__})")
    return value


def _parse_dim(value, name):
    try:
        return gg.check_dim(value)
    except UnsupportedDimension:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field '{name}': {exc}") from exc


def _parse_mask(raw):
    if raw is None or raw == "all":
        return SupportMask.all()
    if raw == "even_sum":
        return SupportMask.even_sum()
    if raw == "odd_sum":
        return SupportMask.odd_sum()
    if isinstance(raw, list):
        try:
            return SupportMask.quadrant_list(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field 'scheme.mask': {exc}") from exc
    if isinstance(raw, dict):
        try:
            quadrants = raw.get("quadrants", [[0, 0], [0, 1], [1, 0], [1, 1]])
            k_max = {(int(i), int(j)): int(v) for i, j, v in raw.get("k_max", [])}
            l_max = {(int(i), int(j)): int(v) for i, j, v in raw.get("l_max", [])}
            return bounded_mask(quadrants, k_max, l_max)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field 'scheme.mask': {exc}") from exc
    raise ConfigError(f"field 'scheme.mask': unknown mask {raw!r}")


def parse_scheme(cfg: dict):
    """Build a scheme from a parsed config document."""
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    m = _parse_dim(_field(cfg, "m", ""), "m")
    M = _parse_dim(_field(cfg, "M", ""), "M")
    body = _field(cfg, "scheme", "", dict)
    kind = _field(body, "type", "scheme.", str)
    try:
        if kind == "sparse":
            entries = _field(body, "entries", "scheme.", list)
            return SparseScheme(m, M, tuple(tuple(e) for e in entries))
        if kind == "geometric":
            return GeometricScheme(m, M, float(body.get("c", 1.0)), float(_field(body, "r", "scheme.")),
                                   float(_field(body, "q", "scheme.")), _parse_mask(body.get("mask")))
    except UnsupportedDimension:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field 'scheme': {exc}") from exc
    raise ConfigError(f"field 'scheme.type': unknown scheme type {kind!r}")


def scheme_to_json(s) -> dict:
    out = {"m": _dim_to_json(s.m), "M": _dim_to_json(s.M)}
    if isinstance(s, SparseScheme):
        out["scheme"] = {"type": "sparse", "entries": [[k, l, a] for k, l, a in s.entries]}
    else:
        mask = s.mask
        if mask.kind in ("all", "even_sum", "odd_sum"):
            mraw = mask.kind
        elif mask.kind == "quadrants":
            mraw = sorted([list(q) for q in mask.quadrants])
        else:
            mraw = mask.spec
        out["scheme"] = {"type": "geometric", "c": s.c, "r": s.r, "q": s.q, "mask": mraw}
    return out


def parse_points(raw) -> ProductPointSet:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("points file must hold a nonempty JSON array")
    for idx, p in enumerate(raw):
        if not isinstance(p, dict) or "x" not in p or "w" not in p:
            raise ConfigError(f"points[{idx}] needs fields 'x' and 'w'")
    try:
        xs = np.array([p["x"] for p in raw], dtype=float)
        ws = np.array([p["w"] for p in raw], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"points: ragged or non-numeric vectors ({exc})") from exc
    if xs.ndim != 2 or ws.ndim != 2:
        raise ConfigError("points: vectors within a slot must share one length")
    try:
        return ProductPointSet(xs, ws)
    except ValueError as exc:
        raise ConfigError(f"points: {exc}") from exc


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode() if isinstance(p, str) else p)
        h.update(b"\0")
    return h.hexdigest()


def _tol(args, cfg) -> float:
    if args.tol is not None:
        return args.tol
    trunc = cfg.get("truncation") if isinstance(cfg, dict) else None
    if isinstance(trunc, dict) and "tol" in trunc:
        return float(trunc["tol"])
    return 1e-10


# --- commands -------------------------------------------------------------

def cmd_classify(args) -> tuple[dict, str]:
    cfg, text = _load_json(args.config, "config")
    s = parse_scheme(cfg)
    verdict = classify(s)
    return {"verdict": verdict.to_dict(), "scheme": scheme_to_json(s)}, _digest(text)


def cmd_eval(args) -> tuple[dict, str]:
    cfg, text = _load_json(args.config, "config")
    s = parse_scheme(cfg)
    tol = _tol(args, cfg)
    value = eval_kernel(s, args.t, args.s, tol)
    return {"t": args.t, "s": args.s, "tol": tol, "value": value}, _digest(text, repr((args.t, args.s, tol)))


def cmd_gram(args) -> tuple[dict, str]:
    cfg, text = _load_json(args.config, "config")
    s = parse_scheme(cfg)
    raw, ptext = _load_json(args.points, "points file")
    pts = parse_points(raw)
    tol = _tol(args, cfg)
    report = gram(s, pts, tol)
    result = {
        "n": len(pts),
        "min_eigenvalue": report.min_eigenvalue,
        "trace": report.trace,
        "eigen_threshold": report.eigen_threshold,
        "null_vector": None if report.null_vector is None else report.null_vector.tolist(),
        "tol": tol,
    }
    if args.matrix:
        result["matrix"] = report.matrix.tolist()
    return result, _digest(text, ptext, repr(tol))


def _block_bound(s, axis: str) -> int:
    """Largest k (or l) index in J^(0,0), read from members or sampled membership."""
    idx = 0 if axis == "k" else 1
    if isinstance(s, SparseScheme):
        vals = [kl[idx] for kl in s.support if kl[0] % 2 == 0 and kl[1] % 2 == 0]
    else:
        k = np.arange(SAMPLE_DEGREE + 1)[:, None]
        l = np.arange(SAMPLE_DEGREE + 1)[None, :]
        inside = s.mask.contains(k, l) & (k % 2 == 0) & (l % 2 == 0)
        vals = [int(v[idx]) for v in np.argwhere(inside)]
    return max(vals, default=0)


def cmd_witness(args) -> tuple[dict, str]:
    cfg, text = _load_json(args.config, "config")
    s = parse_scheme(cfg)
    tol = _tol(args, cfg)
    verdict = classify(s)
    digest = _digest(text, repr((args.seed, tol)))
    base = {"verdict": verdict.to_dict()}
    if verdict.level is Level.SPD:
        raise CommandExit(EXIT_NO_WITNESS, "scheme satisfies the strict positive definiteness "
                          "criterion; no witness exists", dict(base, digest=digest))
    opts = cfg.get("witness", {}) if isinstance(cfg.get("witness", {}), dict) else {}
    method = opts.get("method")
    flags00 = index_quadrants(s)[(0, 0)].flags
    if method is None:
        if isinstance(s, ParameterizedScheme) and not (flags00.k_unbounded and flags00.l_unbounded):
            method = "gamma"
        else:
            method = "doubling"
    try:
        if method == "gamma":
            if "k0" in opts or "l0" in opts:
                k0, l0 = opts.get("k0"), opts.get("l0")
            else:
                bk = math.inf if flags00.k_unbounded else _block_bound(s, "k")
                bl = math.inf if flags00.l_unbounded else _block_bound(s, "l")
                k0, l0 = ((bk + 1) // 2, None) if bk <= bl else (None, (bl + 1) // 2)
            block = gamma_witness(k0, l0, scheme=s, seed=args.seed)
            w = lift_quadrant_witness(s, block, (0, 0), tol, seed=args.seed)
        elif method == "doubling":
            w = antipodal_doubling_witness(s, seed=args.seed, max_n=int(opts.get("max_n", 512)), tol=tol)
        else:
            raise ConfigError(f"field 'witness.method': unknown method {method!r}")
    except PreconditionError as exc:
        raise CommandExit(EXIT_EXHAUSTED, f"no applicable witness construction: {exc}",
                          dict(base, digest=digest)) from exc
    except WitnessSearchExhausted as exc:
        raise CommandExit(EXIT_EXHAUSTED, str(exc), dict(base, digest=digest)) from exc
    scale = float(np.sum(np.abs(w.coefficients))) ** 2 * s.total_mass()
    return dict(base, method=method, witness=w.to_dict(),
                abs_quadratic_form=abs(w.quadratic_form_value),
                quadratic_form_scale=scale), digest


def _samples_kernel(path: str, nodes_needed: int):
    from scipy.interpolate import RectBivariateSpline

    raw, text = _load_json(path, "samples file")
    try:
        t = np.asarray(raw["t"], dtype=float)
        s = np.asarray(raw["s"], dtype=float)
        values = np.asarray(raw["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"samples file needs numeric fields 't', 's', 'values' ({exc})") from exc
    if values.shape != (t.size, s.size):
        raise ConfigError(f"samples: 'values' has shape {values.shape}, expected {(t.size, s.size)}")
    for name, axis in (("t", t), ("s", s)):
        if axis.size < max(nodes_needed, 4) or np.any(np.diff(axis) <= 0):
            raise ConfigError(f"samples: axis '{name}' needs at least {max(nodes_needed, 4)} "
                              "strictly increasing values")
        if axis[0] > -1.0 + 1e-12 or axis[-1] < 1.0 - 1e-12:
            raise ConfigError(f"samples: axis '{name}' must span [-1, 1]")
    spline = RectBivariateSpline(t, s, values, kx=3, ky=3)
    return (lambda tt, ss: spline.ev(tt, ss)), text


def cmd_project(args) -> tuple[dict, str]:
    m = _parse_dim(args.m, "m")
    M = _parse_dim(args.M, "M")
    if gg.is_infinite(m) or gg.is_infinite(M):
        raise ConfigError("project needs finite m and M")
    nodes = args.kmax + args.lmax + 8
    if args.samples:
        K, text = _samples_kernel(args.samples, nodes)
        source = {"samples": args.samples}
        digest = _digest(text, repr((args.m, args.M, args.kmax, args.lmax)))
    elif args.family == "constant":
        K = lambda t, s: np.full(np.broadcast(t, s).shape, args.c)  # noqa: E731
        source = {"family": "constant", "c": args.c}
        digest = _digest(repr(source), repr((args.m, args.M, args.kmax, args.lmax)))
    elif args.family == "geometric":
        mask = args.mask
        if mask[:1] in ("[", "{"):
            try:
                mask = json.loads(mask)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--mask: {exc.msg}") from exc
        base = GeometricScheme(m, M, args.c, 0.5, 0.5, _parse_mask(mask))
        K = lambda t, s: geometric_closed_form(base, t, s, r=args.r, q=args.q)  # noqa: E731
        source = {"family": "geometric", "c": args.c, "r": args.r, "q": args.q, "mask": args.mask}
        digest = _digest(repr(source), repr((args.m, args.M, args.kmax, args.lmax)))
    else:
        raise ConfigError("project needs --samples or --family")
    A = project_coefficients(K, m, M, args.kmax, args.lmax)
    negative = [[int(k), int(l), float(A[k, l])] for k, l in np.argwhere(A < NEGATIVE_FLAG_TOL)]
    result = {"source": source, "m": _dim_to_json(m), "M": _dim_to_json(M),
              "kmax": args.kmax, "lmax": args.lmax, "coefficients": A.tolist(),
              "negative_entries": negative,
              "positive_definite_at_truncation": not negative}
    if negative:
        result["warning"] = "not positive definite at this truncation"
    return result, digest


COMMANDS = {
    "classify": cmd_classify,
    "eval": cmd_eval,
    "gram": cmd_gram,
    "witness": cmd_witness,
    "project": cmd_project,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prodsphere",
        description="Strict positive definiteness of isotropic kernels on S^m x S^M.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    parser.add_argument("--tol", type=float, default=None,
                        help="kernel truncation tolerance (default: config value or 1e-10)")
    parser.add_argument("--out", help="write the JSON report to this path instead of stdout")
    parser.add_argument("--no-timing", action="store_true",
                        help="report wall_time as null so reruns are byte-identical")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="SPD / DC-SPD / PD verdict for a scheme")
    p.add_argument("config")

    p = sub.add_parser("eval", help="evaluate K(t, s)")
    p.add_argument("config")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--s", type=float, required=True)

    p = sub.add_parser("gram", help="Gram matrix eigen-certificate on a point set")
    p.add_argument("config")
    p.add_argument("points")
    p.add_argument("--matrix", action="store_true", help="include the full Gram matrix")

    p = sub.add_parser("witness", help="construct a non-strictness witness")
    p.add_argument("config")

    p = sub.add_parser("project", help="recover expansion coefficients of a kernel")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--samples", help="JSON grid {'t': [...], 's': [...], 'values': [[...]]}")
    src.add_argument("--family", choices=["geometric", "constant"])
    p.add_argument("--m", required=True)
    p.add_argument("--M", required=True)
    p.add_argument("--kmax", type=int, required=True)
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--mask", default="all",
                   help="all, even_sum, odd_sum or a JSON quadrant list / bounded-mask object")
    return parser


def _emit(report: dict, out: str | None) -> None:
    text = dumps(report) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    start = time.perf_counter()
    code = EXIT_OK
    digest = None
    try:
        result, digest = COMMANDS[args.command](args)
    except CommandExit as exc:
        print(f"prodsphere: {exc}", file=sys.stderr)
        code = exc.code
        result = dict(exc.result or {}, error=str(exc))
        digest = result.pop("digest", None)
    except UnsupportedDimension as exc:
        print(f"prodsphere: unsupported dimension: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except DimensionMismatch as exc:
        print(f"prodsphere: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (ConfigError, SchemeError, ValueError) as exc:
        print(f"prodsphere: {exc}", file=sys.stderr)
        return EXIT_PARSE
    wall = None if args.no_timing else time.perf_counter() - start
    report = {"command": args.command, "inputs_digest": digest, "exit_code": code,
              "result": result, "wall_time": wall}
    _emit(report, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
