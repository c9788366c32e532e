"""eigencone command line.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import hyperbolicity as hyp
from .cone_calculus import analyze, gradient_norm_sq, is_cartan_verdict, mean_curvature_op
from .field import AugmentedField, w4, w5, w5_delta
from .kernels import eigvalsh_batch
from .poly import NAMED, Polynomial, dumps, first_difference, loads, norm_sq
from .spectra import closed_form_batch
from .symmetry import normal_form_of

SEED_ENV = "EIGENCONE_SEED"
FIELDS = ("w5", "w4", "w5_delta", "u10")
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    field: str = "w5"
    samples: int = 10000
    restarts: int = 0
    seed: int = 0
    delta: float = 1.0
    big_m: float = 100.0
    band: tuple[float, float] = hyp.RATIO_BAND
    tol: float = 1e-9
    threads: int = 1
    output: str | None = None
    format: str = "json"

    def validate(self):
        if self.samples < 1:
            raise ValueError("--samples must be >= 1")
        if self.restarts < 0:
            raise ValueError("--restarts must be >= 0")
        if not self.band[0] < self.band[1]:
            raise ValueError("--band needs LO < HI")
        if self.tol <= 0:
            raise ValueError("--tol must be positive")
        if self.threads < 1:
            raise ValueError("--threads must be >= 1")
        if self.field not in FIELDS:
            raise ValueError(f"--field must be one of {FIELDS}")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"{SEED_ENV}={raw!r} is not an integer") from None


def _family(cfg: RunConfig):
    if cfg.field == "w5":
        return w5()
    if cfg.field == "w4":
        return w4()
    if cfg.field == "w5_delta":
        return w5_delta(cfg.delta)
    return AugmentedField(cfg.delta, cfg.big_m)


# -- output -------------------------------------------------------------------

def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text: str, output: str | None):
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _emit_timing(output: str | None, started: float):
    elapsed = time.perf_counter() - started
    print(f"wall-clock: {elapsed:.3f} s", file=sys.stderr)
    if output is not None:
        Path(output + ".timing.json").write_text(_json_text({"wall_clock_s": elapsed}))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if isinstance(v, float) and np.isnan(v) else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def samples_csv(report: hyp.SearchReport) -> str:
    s = report.samples
    if s is None:
        raise ValueError("report was built without keep_samples")
    cols = ("p", "p_bar", "lam_max", "lam_min", "ratio")
    rows = zip(*(np.asarray(s[c], dtype=float).tolist() for c in cols))
    return _csv_text(cols, rows)


def _envelope(cfg: RunConfig, **body) -> dict:
    conf = asdict(cfg)
    conf.pop("output")
    conf.pop("threads")  # must not change report bytes
    conf["band"] = list(cfg.band)
    return {"artifact_version": __version__, "config": conf, **body}


# -- commands -----------------------------------------------------------------

def _identity_failures(p5: Polynomial) -> list[str]:
    n = p5.nvars
    r2 = norm_sq(n)
    checks = [
        ("laplacian", p5.laplacian(), Polynomial.zero(n)),
        ("|grad f|^2 = 9|x|^4", gradient_norm_sq(p5), (r2 * r2).scale(9)),
        ("L(f) = -54|x|^2 f", mean_curvature_op(p5), (r2 * p5).scale(-54)),
    ]
    out = []
    for name, lhs, rhs in checks:
        diff = first_difference(lhs, rhs)
        if diff is not None:
            exp, a, b = diff
            out.append(f"{name}: first differing monomial {exp}: {a} vs {b}")
    return out


def cmd_verify_symbolic(args) -> int:
    polys = {name: ctor() for name, ctor in NAMED.items()}
    if args.p5_file:
        polys["P5"] = loads(Path(args.p5_file).read_text())
    reports = [analyze(polys[name], name) for name in ("P4", "P5", "P12", "P24")]
    by_name = {r.name: r for r in reports}
    ok = is_cartan_verdict(by_name["P5"]) and all(r.is_harmonic for r in reports)
    if not ok:
        for line in _identity_failures(polys["P5"]):
            print(f"P5 {line}", file=sys.stderr)
        for r in reports:
            if not r.is_harmonic:
                exp, a, _ = first_difference(polys[r.name].laplacian(), Polynomial.zero(polys[r.name].nvars))
                print(f"{r.name} laplacian: first nonzero monomial {exp}: {a}", file=sys.stderr)
    body = {
        "artifact_version": __version__,
        "command": "verify-symbolic",
        "ok": ok,
        "reports": [r.to_json_dict() for r in reports],
    }
    _emit(_json_text(body), args.output)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_spectrum(args, parser) -> int:
    if args.point is not None:
        x = np.array(args.point, dtype=float)
        if abs(np.linalg.norm(x) - 1.0) > 1e-9:
            parser.error("--point must lie on the unit sphere S^4")
        x = x / np.linalg.norm(x)
        p = np.array([normal_form_of(x).p])
        X = x[None]
    else:
        if args.grid < 2:
            parser.error("--grid must be >= 2")
        p = np.linspace(-1.0, 1.0, args.grid)
        X = np.zeros((args.grid, 5))
        X[:, 0] = p
        X[:, 2] = np.sqrt(np.clip(1.0 - p * p, 0.0, None))
    _, H = w5().hessian_batch(X)
    numeric = eigvalsh_batch(H)
    closed = closed_form_batch(p)
    diff = np.abs(numeric - closed).max(axis=1)
    ordered = bool(np.all(np.diff(closed, axis=1) <= 1e-12))
    header = ["p"] + [f"lam{i}" for i in range(1, 6)] + [f"cf{i}" for i in range(1, 6)] + ["max_abs_diff"]
    rows = [[float(p[k]), *map(float, numeric[k]), *map(float, closed[k]), float(diff[k])] for k in range(len(p))]
    _emit(_csv_text(header, rows), args.output)
    worst = float(diff.max())
    print(f"max |numeric - closed form| = {worst:.3e} (tol {args.tol:g}); ordered: {ordered}", file=sys.stderr)
    return EXIT_OK if worst <= args.tol and ordered else EXIT_FAIL


def cmd_eval(args, parser) -> int:
    cfg = _config(args, parser, "eval")
    F = _family(cfg)
    x = np.array(args.point, dtype=float)
    if x.shape != (F.dim,):
        parser.error(f"--point needs {F.dim} coordinates for field {cfg.field}")
    try:
        value, grad, H = (a[0] for a in F.derivatives_batch(x[None]))
    except ValueError as err:
        parser.error(str(err))
    body = {
        "field": hyp.field_label(F),
        "point": x.tolist(),
        "value": float(value),
        "gradient": grad.tolist(),
        "hessian": H.tolist(),
        "spectrum": eigvalsh_batch(H[None])[0].tolist(),
    }
    _emit(_json_text(body), args.output)
    return EXIT_OK


def cmd_dump(args) -> int:
    _emit(dumps(NAMED[args.name]()), args.output)
    return EXIT_OK


def _write_report(cfg: RunConfig, body: dict, sample_report: hyp.SearchReport | None):
    if cfg.format == "csv":
        _emit(samples_csv(sample_report), cfg.output)
        if cfg.output is not None:
            sys.stdout.write(_json_text(body))
    else:
        _emit(_json_text(body), cfg.output)


def cmd_certify(args, parser) -> int:
    cfg = _config(args, parser, "certify")
    F = _family(cfg)
    started = time.perf_counter()
    sample = hyp.sample_certify(F, cfg.samples, cfg.seed, band=cfg.band, threads=cfg.threads,
                                keep_samples=cfg.format == "csv")
    reports = [sample]
    if cfg.restarts:
        reports.append(hyp.worst_case_search(F, cfg.restarts, cfg.seed, band=cfg.band, threads=cfg.threads))
    ok = all(r.ok for r in reports)
    body = _envelope(cfg, command="certify", ok=ok, reports=[r.to_json_dict() for r in reports])
    _write_report(cfg, body, sample)
    _emit_timing(cfg.output, started)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_witness_lawson(args, parser) -> int:
    cfg = _config(args, parser, "witness-lawson", field="w4", band=hyp.LAWSON_BAND)
    started = time.perf_counter()
    report = hyp.worst_case_search(w4(), cfg.restarts, cfg.seed, band=hyp.LAWSON_BAND, threads=cfg.threads,
                                   stop_on_witness=True)
    found = report.checks["witnesses"] > 0
    body = _envelope(cfg, command="witness-lawson", witness_found=found, reports=[report.to_json_dict()])
    _emit(_json_text(body), cfg.output)
    _emit_timing(cfg.output, started)
    return EXIT_OK if found else EXIT_FAIL


def cmd_scan_delta(args, parser) -> int:
    cfg = _config(args, parser, "scan-delta", field="w5_delta")
    if any(d < 1.0 for d in args.deltas):
        parser.error("--deltas must all be >= 1")
    started = time.perf_counter()
    reports = hyp.delta_scan(args.deltas, cfg.samples, cfg.seed, threads=cfg.threads)
    if cfg.format == "csv":
        header = ["delta", "n_samples", "n_excluded", "min_ratio", "max_ratio", "sign_failures"]
        rows = [
            [float(d), r.n_samples, r.n_excluded, float(r.min_ratio if r.min_ratio is not None else np.nan),
             float(r.max_ratio if r.max_ratio is not None else np.nan), r.checks["sign_failures"]]
            for d, r in zip(args.deltas, reports)
        ]
        _emit(_csv_text(header, rows), cfg.output)
    else:
        body = _envelope(cfg, command="scan-delta", deltas=list(map(float, args.deltas)),
                         reports=[r.to_json_dict() for r in reports])
        _emit(_json_text(body), cfg.output)
    _emit_timing(cfg.output, started)
    return EXIT_OK


def cmd_u10(args, parser) -> int:
    cfg = _config(args, parser, "u10", field="u10")
    started = time.perf_counter()
    report = hyp.u10_certify(cfg.delta, cfg.big_m, cfg.samples, cfg.seed, threads=cfg.threads,
                             keep_samples=cfg.format == "csv")
    body = _envelope(cfg, command="u10", sign_pattern_holds=report.ok, reports=[report.to_json_dict()])
    _write_report(cfg, body, report)
    _emit_timing(cfg.output, started)
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _config(args, parser, command, **overrides) -> RunConfig:
    values = dict(
        command=command,
        field=getattr(args, "field", "w5"),
        samples=getattr(args, "samples", 10000),
        restarts=getattr(args, "restarts", 0),
        seed=args.seed if args.seed is not None else _default_seed(),
        delta=getattr(args, "delta", 1.0),
        big_m=getattr(args, "big_m", 100.0),
        band=tuple(args.band) if getattr(args, "band", None) else hyp.RATIO_BAND,
        tol=args.tol,
        threads=args.threads,
        output=args.output,
        format=args.format,
    )
    values.update(overrides)
    cfg = RunConfig(**values)
    try:
        cfg.validate()
    except ValueError as err:
        parser.error(str(err))
    if cfg.seed < 0:
        parser.error("--seed must be non-negative")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--output", default=None, metavar="PATH")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tol", type=float, default=1e-9)

    fieldopts = argparse.ArgumentParser(add_help=False)
    fieldopts.add_argument("--field", choices=FIELDS, default="w5")
    fieldopts.add_argument("--delta", type=float, default=None)
    fieldopts.add_argument("--big-m", dest="big_m", type=float, default=100.0)

    parser = argparse.ArgumentParser(prog="eigencone", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"eigencone {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-symbolic", parents=[common], help="exact identities for P4, P5, P12, P24")
    p.add_argument("--p5-file", default=None, help="read P5 from a dump file instead of the built-in form")

    p = sub.add_parser("spectrum", parents=[common], help="numeric vs closed-form w5 spectra")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--grid", type=int, default=1001)
    g.add_argument("--point", type=float, nargs=5, default=None)

    p = sub.add_parser("eval", parents=[common, fieldopts], help="value, gradient and Hessian at a point")
    p.add_argument("--point", type=float, nargs="+", required=True)

    p = sub.add_parser("dump", parents=[common], help="text serialization of a named cubic")
    p.add_argument("name", choices=sorted(NAMED))

    p = sub.add_parser("certify", parents=[common, fieldopts], help="sample (and search) the difference family")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--restarts", type=int, default=0)
    p.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"), default=None)

    p = sub.add_parser("witness-lawson", parents=[common], help="search the Lawson family for a non-hyperbolic member")
    p.add_argument("--restarts", type=int, default=200)

    p = sub.add_parser("scan-delta", parents=[common], help="ratio extremes of P5/|x|^delta")
    p.add_argument("--deltas", type=float, nargs="+", default=[1.0, 1.25, 1.5, 2.0])
    p.add_argument("--samples", type=int, default=100000)

    p = sub.add_parser("u10", parents=[common], help="sign pattern of the ten-dimensional family")
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--big-m", dest="big_m", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=100000)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "delta", 0.0) is None:
        args.delta = 1.5 if getattr(args, "field", None) == "w5_delta" else 1e-6 if args.field == "u10" else 1.0
    if args.command == "verify-symbolic":
        return cmd_verify_symbolic(args)
    if args.command == "spectrum":
        return cmd_spectrum(args, parser)
    if args.command == "dump":
        return cmd_dump(args)
    handlers = {
        "eval": cmd_eval,
        "certify": cmd_certify,
        "witness-lawson": cmd_witness_lawson,
        "scan-delta": cmd_scan_delta,
        "u10": cmd_u10,
    }
    return handlers[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
