"""Command-line entry point: ``weylforge <command> [options]``.

Every command writes one JSON document (to ``--output`` or stdout).  Exit
codes: 0 ok, 1 input error, 2 ambiguous or inconclusive.  The environment
variable ``WEYLFORGE_TOL`` replaces the command's default tolerance;
``--tol`` wins over both.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import circle, matgroup, presets, torsion, weyl
from .errors import AmbiguousCommensurability, WeylforgeError
from .fields import load_field, MetricField

log = logging.getLogger("weylforge")

EXIT_OK, EXIT_INPUT, EXIT_AMBIGUOUS = 0, 1, 2


class InputError(Exception):
    pass


def resolve_tol(cli_value, default: float) -> float:
    if cli_value is not None:
        return float(cli_value)
    env = os.environ.get("WEYLFORGE_TOL")
    if env:
        try:
            return float(env)
        except ValueError:
            raise InputError(f"WEYLFORGE_TOL={env!r} is not a number") from None
    return default


def _emit(doc: dict, output) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if output in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        Path(output).write_text(text + "\n")


def _read_json(path):
    try:
        if path in (None, "-"):
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


# --------------------------------------------------------------------------


def cmd_classify(args) -> int:
    doc = _read_json(args.input)
    try:
        spec = matgroup.MatrixGroupSpec.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed generator file: {exc}") from None
    tol = resolve_tol(args.tol, spec.tol)
    spec = matgroup.MatrixGroupSpec(spec.n, spec.generators, tol)
    try:
        result = matgroup.classify_group(spec, max_denominator=args.max_denominator)
    except AmbiguousCommensurability as exc:
        _emit({"error": "AmbiguousCommensurability", "detail": str(exc)}, args.output)
        return EXIT_AMBIGUOUS
    out = result.to_dict()
    out["summary"] = str(result)
    _emit(out, args.output)
    return EXIT_OK


ALGEBRAS = ("so", "co", "gl", "sl")


def torsion_table(nmax: int) -> list:
    rows = []
    for n in range(2, nmax + 1):
        for name in ALGEBRAS:
            rep = torsion.del_matrix(torsion.SubalgebraBasis.named(name, n))
            rows.append(
                {
                    "algebra": name,
                    "n": n,
                    "domain_dim": rep.domain_dim,
                    "codomain_dim": rep.codomain_dim,
                    "rank": rep.rank,
                    "kernel_dim": rep.kernel_dim,
                    "coker_dim": rep.coker_dim,
                }
            )
    return rows


def cmd_torsion_table(args) -> int:
    if not 2 <= args.nmax <= 6:
        raise InputError("--nmax must lie in [2, 6]")
    rows = torsion_table(args.nmax)
    if args.format == "csv":
        fh = sys.stdout if args.output in (None, "-") else open(args.output, "w", newline="")
        try:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        finally:
            if fh is not sys.stdout:
                fh.close()
    else:
        _emit({"rows": rows}, args.output)
    return EXIT_OK


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise InputError(f"--param expects name=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise InputError(f"--param {key}: {val!r} is not a number") from None
    return out


def cmd_weyl_verify(args) -> int:
    params = _parse_params(args.param)
    params.setdefault("c", 1.0)
    try:
        if args.input:
            g = load_field(args.input)
            if not isinstance(g, MetricField):
                raise InputError("--input must hold a metric field")
        else:
            g = presets.metric_preset(args.preset, args.dim, args.resolution, seed=args.seed)
        theta = presets.theta_preset(g.chart, args.theta, seed=args.seed, params=params)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(str(exc)) from None
    rep = weyl.weyl_report(g, theta)
    tol = resolve_tol(args.tol, 10.0 * g.chart.h**2)
    checks = {
        "torsion": rep.torsion_residual <= 1e-12,
        "compatibility": rep.compatibility_residual <= tol,
    }
    if rep.closed:
        checks["local_metric"] = rep.local_metric_residual <= tol
    doc = rep.to_dict()
    doc.update({"preset": None if args.input else args.preset, "theta": args.theta, "tol": tol, "checks": checks})
    doc["ok"] = all(checks.values())
    _emit(doc, args.output)
    return EXIT_OK if doc["ok"] else EXIT_AMBIGUOUS


def cmd_sl_volume_demo(args) -> int:
    try:
        h, rho = presets.density_preset(args.preset, args.dim, args.resolution, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    g = weyl.volume_normalized_metric(h, rho)
    dev = float(np.max(np.abs(np.linalg.det(g.g) - rho.rho**2)))
    tol = resolve_tol(args.tol, 1e-10)
    doc = {
        "preset": args.preset,
        "resolution": args.resolution,
        "max_det_deviation": dev,
        "tol": tol,
        "ok": dev <= tol,
    }
    _emit(doc, args.output)
    return EXIT_OK if doc["ok"] else EXIT_AMBIGUOUS


def cmd_circle_demo(args) -> int:
    if not args.lam > 0:
        raise InputError("--lambda must be positive")
    tol = resolve_tol(args.tol, 1e-8)
    bundle = circle.build_circle_structure(args.lam, args.samples)
    hol_h, reducible = circle.reduction_obstruction(bundle)
    cover = circle.cover_metric(args.lam)
    w = circle.descend_weyl(cover, args.samples)
    hol = circle.lee_holonomy(w)
    rng = np.random.default_rng(args.seed)
    checks = []
    for _ in range(args.checks):
        r = circle.conformal_class_invariance(w, circle.random_periodic(rng))
        checks.append({k: r[k] for k in ("holonomy_prime", "abs_deviation", "pointwise_change", "ok")})
    expected = -2.0 * math.log(args.lam)
    doc = {
        "lambda": args.lam,
        "samples": args.samples,
        "obstruction": hol_h,
        "reducible": reducible,
        "c": cover.c,
        "gamma": float(np.mean(w.gamma)),
        "theta": float(np.mean(w.theta)),
        "gamma_spread": float(np.ptp(w.gamma)),
        "holonomy": hol,
        "holonomy_expected": expected,
        "invariance_checks": checks,
        "ok": abs(hol - expected) <= tol and all(c["ok"] for c in checks),
    }
    _emit(doc, args.output)
    csv_path = args.csv
    if csv_path is None and args.output not in (None, "-"):
        out = Path(args.output)
        csv_path = out.with_name(out.stem + "_theta.csv")
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "theta", "gamma"])
            for row in zip(w.t, w.theta, w.gamma):
                wr.writerow([repr(float(v)) for v in row])
    return EXIT_OK if doc["ok"] else EXIT_AMBIGUOUS


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--tol", type=float, help="override the default tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="weylforge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="classify a group from its generators")
    c.add_argument("--input", "-i", required=True, help="generator JSON file ('-' for stdin)")
    c.add_argument("--max-denominator", type=int, default=matgroup.MAX_DENOMINATOR)
    c.set_defaults(func=cmd_classify)

    t = sub.add_parser("torsion-table", parents=[common], help="rank table of del for so, co, gl, sl")
    t.add_argument("--nmax", type=int, default=6)
    t.add_argument("--format", choices=("json", "csv"), default="json")
    t.set_defaults(func=cmd_torsion_table)

    w = sub.add_parser("weyl-verify", parents=[common], help="build a Weyl connection and check residuals")
    w.add_argument("--preset", default="flat", choices=presets.METRIC_PRESETS)
    w.add_argument("--resolution", type=int, default=64)
    w.add_argument("--dim", type=int, default=2, choices=(2, 3))
    w.add_argument("--theta", default="zero", help="zero | random | closed-random | expression such as 'y*dx'")
    w.add_argument("--param", action="append", help="value for a symbol in --theta, e.g. c=0.5")
    w.add_argument("--input", "-i", help="metric grid-field JSON file instead of a preset")
    w.set_defaults(func=cmd_weyl_verify)

    s = sub.add_parser("sl-volume-demo", parents=[common], help="volume-normalised metric check")
    s.add_argument("--preset", default="identity", choices=presets.SL_VOLUME_PRESETS)
    s.add_argument("--resolution", type=int, default=32)
    s.add_argument("--dim", type=int, default=2, choices=(2, 3))
    s.set_defaults(func=cmd_sl_volume_demo)

    k = sub.add_parser("circle-demo", parents=[common], help="closed, non-exact Weyl structure on S^1")
    k.add_argument("--lambda", dest="lam", type=float, default=2.0)
    k.add_argument("--samples", type=int, default=64)
    k.add_argument("--checks", type=int, default=10, help="number of random conformal changes")
    k.add_argument("--csv", help="write theta(t) samples here")
    k.set_defaults(func=cmd_circle_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except AmbiguousCommensurability as exc:
        log.error("%s", exc)
        return EXIT_AMBIGUOUS
    except (WeylforgeError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
