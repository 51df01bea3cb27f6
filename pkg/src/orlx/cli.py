"""Command-line entry point: ``orlx {young,weight,sparse,verify}``.

JSON goes to stdout, logs to stderr.  Exit codes: 0 pass, 1 failure
(suite failure or a sparse violation), 2 usage or IO error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .dyadic import Cube, Grid, load
from .sparse import NotSparseError, sparse_check, sparse_dominate, stopping_sparse
from .weights import a1_characteristic, ainfty_report, ap_characteristic, rh_characteristic
from .young import LogBump, Oscillatory, Power, YoungFunction, dual_exponent, from_descriptor

log = logging.getLogger("orlx")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(harness._clean(obj), sort_keys=True, indent=1) + "\n")


def _descriptor(text: str) -> YoungFunction:
    """A descriptor given inline as JSON or as a path to a JSON file."""
    p = Path(text)
    try:
        raw = p.read_text() if p.suffix == ".json" and p.exists() else text
        return from_descriptor(json.loads(raw))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed Young descriptor: {exc}") from exc


def _young_from_args(args) -> YoungFunction:
    if args.descriptor:
        return _descriptor(args.descriptor)
    v = args.variant
    try:
        if v == "power":
            return Power(_need(args.p, "--p"))
        if v == "logbump":
            return LogBump(_need(args.p, "--p"), _need(args.delta, "--delta"))
        if v == "oscillatory":
            return Oscillatory(_need(args.s, "--s"), _need(args.a, "--a"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    raise UsageError("give --variant or --descriptor")


def _need(x, flag):
    if x is None:
        raise UsageError(f"{flag} is required for this variant")
    return float(x)


def _grid_hint(args) -> Grid | None:
    if args.grid_depth is None:
        return None
    return Grid(args.dim, args.grid_depth)


def _load(path: str, args):
    try:
        return load(path, _grid_hint(args))
    except FileNotFoundError as exc:
        raise UsageError(f"no such file: {path}") from exc
    except ValueError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


# ---------------------------------------------------------------- commands


def cmd_young(args) -> int:
    phi = _young_from_args(args)
    t = np.logspace(-3, 3, args.table)
    out = {"descriptor": phi.to_descriptor(), "describe": phi.describe(),
           "table": [{"t": float(a), "phi": float(b), "inverse_at_t": float(c)}
                     for a, b, c in zip(t, phi(t), phi.inverse(t))]}
    if args.conjugate:
        try:
            conj = phi.conjugate()
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        out["conjugate"] = {"descriptor": conj.to_descriptor(), "describe": conj.describe()}
        if isinstance(phi, Power):
            out["conjugate"]["p_conjugate"] = dual_exponent(phi.p)
    if args.bp:
        out["bp"] = {repr(float(p)): phi.bp_test(float(p)).to_dict() for p in args.bp}
    _emit(out)
    return EXIT_OK


def cmd_weight(args) -> int:
    w = _load(args.file, args)
    try:
        if args.cls == "ap":
            rep = ap_characteristic(w, _need(args.p, "--p"))
        elif args.cls == "a1":
            rep = a1_characteristic(w)
        elif args.cls == "rh" and args.psi:
            rep = rh_characteristic(w, _descriptor(args.psi))
        elif args.cls == "rh":
            rep = rh_characteristic(w, _need(args.s, "--s"))
        elif args.cls == "rhinf":
            rep = rh_characteristic(w, math.inf)
        elif args.cls == "rhpsi":
            if not args.psi:
                raise UsageError("--class rhpsi needs --psi")
            rep = rh_characteristic(w, _descriptor(args.psi))
        else:
            rep = ainfty_report(w, args.alpha)
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(rep.to_dict())
    return EXIT_OK


def _read_cubes(path: str):
    from .dyadic import _data_path

    p = _data_path(path)
    try:
        data = json.loads(p.read_text())
        g = data["grid"]
        grid = Grid(int(g["n"]), int(g["L"]), tuple(g.get("shift_thirds", ())))
        return [Cube(grid, int(c["level"]), tuple(int(i) for i in c["index"])) for c in data["cubes"]]
    except FileNotFoundError as exc:
        raise UsageError(f"no such file: {path}") from exc
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"malformed cube file {path}: {exc}") from exc


def cmd_sparse(args) -> int:
    try:
        if args.mode == "check":
            fam = sparse_check(_read_cubes(args.inputs[0]))
            _emit(fam.to_dict())
        elif args.mode == "stopping":
            if len(args.inputs) != 2:
                raise UsageError("stopping needs two input files")
            f, g = (_load(x, args) for x in args.inputs)
            fam = stopping_sparse(f, g, a=args.a)
            _emit(fam.to_dict())
        else:
            f = _load(args.inputs[0], args)
            dom = sparse_dominate(f, a=args.a if args.a is not None else 2.0)
            _emit(dom.to_dict())
    except NotSparseError as exc:
        _emit(exc.to_dict())
        return EXIT_FAIL
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.config:
        try:
            configs = harness.load_configs(harness_path(args.config))
        except FileNotFoundError as exc:
            raise UsageError(f"no such config: {args.config}") from exc
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"malformed config: {exc}") from exc
        if args.suite:
            configs = [c for c in configs if c.suite in args.suite or c.label in args.suite]
    else:
        make = harness.negative_configs if args.negative else harness.reference_configs
        configs = make(suites=args.suite, dim=args.dim)
    if not configs:
        raise UsageError("no suites selected")
    if args.seed is not None:
        configs = [c.with_overrides(seed=args.seed) for c in configs]
    if args.trials is not None:
        configs = [c.with_overrides(trials=args.trials) for c in configs]
    reports = []
    for cfg in configs:
        log.info("running %s (seed %d, n=%d, L=%d, %d trials)", cfg.label, cfg.seed, cfg.n, cfg.L, cfg.trials)
        rep = harness.run_suite(cfg, threads=args.threads)
        log.info("%s: max ratio %.6g, ceiling %.6g, %s", cfg.label, rep.max_ratio, rep.ceiling,
                 "PASS" if rep.suite_passed else "FAIL")
        reports.append(rep)
    text = harness.report_json(reports)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for rep in reports:
            label = rep.config.get("name") or rep.suite
            (out / f"{label}.json").write_text(harness.report_json(rep) + "\n")
        (out / "reports.json").write_text(text + "\n")
        (out / "trials.csv").write_text(harness.reports_csv(reports))
    sys.stdout.write(text + "\n")
    return EXIT_OK if all(r.suite_passed for r in reports) else EXIT_FAIL


def harness_path(path: str) -> Path:
    from .dyadic import _data_path

    return _data_path(path)


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orlx", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def grid_flags(p):
        p.add_argument("--grid-depth", type=int, help="L for files without a grid sidecar")
        p.add_argument("--dim", type=int, default=1, choices=(1, 2), help="n for files without a sidecar")

    y = sub.add_parser("young", help="inspect a Young function")
    y.add_argument("--variant", choices=("power", "logbump", "oscillatory"))
    y.add_argument("--descriptor", help="JSON descriptor (inline or a .json path)")
    y.add_argument("--p", type=float)
    y.add_argument("--delta", type=float)
    y.add_argument("--s", type=float)
    y.add_argument("--a", type=float)
    y.add_argument("--conjugate", action="store_true")
    y.add_argument("--bp", type=float, action="append", help="B_p test exponent (repeatable)")
    y.add_argument("--table", type=int, default=7, help="number of log-spaced sample points")
    y.set_defaults(func=cmd_young)

    w = sub.add_parser("weight", help="characteristic of a weight file")
    w.add_argument("file")
    w.add_argument("--class", dest="cls", required=True, choices=("ap", "a1", "rh", "rhinf", "rhpsi", "ainfty"))
    w.add_argument("--p", type=float, help="A_p exponent")
    w.add_argument("--s", type=float, help="reverse Hölder exponent")
    w.add_argument("--psi", help="Young descriptor for --class rhpsi (or rh)")
    w.add_argument("--alpha", type=float, default=0.5, help="fraction for --class ainfty")
    grid_flags(w)
    w.set_defaults(func=cmd_weight)

    s = sub.add_parser("sparse", help="sparse families: check, stopping, dominate")
    s.add_argument("mode", choices=("check", "stopping", "dominate"))
    s.add_argument("inputs", nargs="+", help="cube JSON (check) or function files")
    s.add_argument("--a", type=float, help="stopping constant override")
    grid_flags(s)
    s.set_defaults(func=cmd_sparse)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("--config", help="experiment config JSON (default: built-in reference)")
    v.add_argument("--suite", action="append", help="suite id or config name (repeatable)")
    v.add_argument("--seed", type=int, help="override the config seed")
    v.add_argument("--trials", type=int, help="override trial counts")
    v.add_argument("--threads", type=int, default=1)
    v.add_argument("--out", help="directory for per-suite JSON and a CSV of trials")
    v.add_argument("--dim", type=int, default=1, choices=(1, 2), help="reference set to use without --config")
    v.add_argument("--negative", action="store_true", help="run the negative-control configurations")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"orlx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"orlx: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
