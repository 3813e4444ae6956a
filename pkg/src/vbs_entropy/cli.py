"""Command-line front end: ``vbs-entropy {entropy,sweep,fit,verify}``.

Exit codes: 0 success, 1 usage, 2 numerical failure, 3 verification failure.
Results are written as JSON records into ``--output-dir`` (default: the
``VBS_ENTROPY_OUTPUT_DIR`` environment variable, else the working directory).
A JSON ``--config`` file may supply any flag; command-line flags win.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__, kernels
from .analysis import (
    FitError,
    ScalingDataset,
    curve_points,
    extrapolation_report,
    fit_area_law,
    write_two_column,
)
from .model import build_half
from .oracle import OracleScopeError, exact_vbs_rdm, loop_enumerate_z
from .overlap_mc import MAX_BOUNDARY, EstimatorError, MCConfig, entropy as mc_entropy, estimate_z
from .spectrum import JacobiConvergenceError
from .transfer import MAX_LEGS, MAX_VERTICAL, ladder_entropy, vertical_entropy

ENV_OUTPUT_DIR = "VBS_ENTROPY_OUTPUT_DIR"
ENGINES = ("mc", "transfer", "vertical", "loop", "ed")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3

SUPPORT = f"""supported engine/geometry combinations:
  transfer  square: 1 <= N_y <= {MAX_LEGS}, N_x >= 1;  hex: even N_y, 2 <= N_y <= {2 * MAX_LEGS}, N_x >= 1
  vertical  N_x = 1;  square: 1 <= N_y <= {MAX_VERTICAL['square']};  hex: even N_y <= {2 * MAX_VERTICAL['hex']}
  loop      graphs with at most 3 factors per vertex (no square bulk sites), <= 24 bonds
  ed        doubled graph with <= 16 edges
  mc        |Lambda_A| <= {MAX_BOUNDARY}"""

DEFAULTS = {
    "family": "square",
    "nx": None,
    "ny": None,
    "engine": "transfer",
    "samples": 1_000_000,
    "batches": 16,
    "seed": 0,
    "method": "uniform",
    "step_angle": 1.2,
    "burn_in": 200,
    "thinning": 1,
    "workers": 1,
    "output": None,
    "output_dir": None,
    "level": "quick",
    "mc_samples": 10_000_000,
    "mc_repeats": 3,
    "dataset": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _add_mc(p):
    g = p.add_argument_group("Monte Carlo")
    g.add_argument("--samples", type=int)
    g.add_argument("--batches", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--method", choices=("uniform", "metropolis"))
    g.add_argument("--step-angle", type=float, dest="step_angle")
    g.add_argument("--burn-in", type=int, dest="burn_in")
    g.add_argument("--thinning", type=int)
    g.add_argument("--workers", type=int)


def _add_common(p):
    p.add_argument("--config", help="JSON file supplying defaults for any flag")
    p.add_argument("--output-dir", dest="output_dir")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="vbs-entropy", description="Entanglement entropy of VBS states on square and hexagonal lattices.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    e = sub.add_parser("entropy", help="entropy of one geometry")
    e.add_argument("--family", choices=("square", "hex"))
    e.add_argument("--nx", type=int)
    e.add_argument("--ny", type=int)
    e.add_argument("--engine", choices=ENGINES)
    e.add_argument("--output", help="record path (default: <output-dir>/entropy_<...>.json)")
    _add_mc(e)
    _add_common(e)

    s = sub.add_parser("sweep", help="entropy over a range of N_x or N_y")
    s.add_argument("--family", choices=("square", "hex"))
    s.add_argument("--nx", help="integer or inclusive range start:stop[:step]")
    s.add_argument("--ny", help="integer or inclusive range start:stop[:step]")
    s.add_argument("--engine", choices=ENGINES + ("auto",))
    s.add_argument("--output", help="dataset path")
    _add_mc(s)
    _add_common(s)

    f = sub.add_parser("fit", help="area-law fit of a sweep dataset")
    f.add_argument("dataset", nargs="?")
    f.add_argument("--output", help="fit record path")
    _add_common(f)

    v = sub.add_parser("verify", help="cross-engine verification")
    v.add_argument("--level", choices=("quick", "full"))
    v.add_argument("--mc-samples", type=int, dest="mc_samples")
    v.add_argument("--mc-repeats", type=int, dest="mc_repeats")
    v.add_argument("--output", help="report path")
    _add_common(v)
    return p


def _merge(args: argparse.Namespace) -> argparse.Namespace:
    """Flags > config file > built-in defaults."""
    cfg = {}
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}")
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    out = dict(vars(args))
    for key, default in DEFAULTS.items():
        if out.get(key) is None:
            out[key] = cfg.get(key, default)
    if out.get("output_dir") is None:
        out["output_dir"] = os.environ.get(ENV_OUTPUT_DIR, ".")
    return argparse.Namespace(**out)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def _mc_config(a) -> MCConfig:
    try:
        return MCConfig(
            samples=a.samples, batches=a.batches, seed=a.seed, method=a.method,
            step_angle=a.step_angle, burn_in=a.burn_in, thinning=a.thinning,
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def check_geometry(engine: str, family: str, nx: int, ny: int) -> None:
    """Raise :class:`UsageError` for unsupported engine/geometry pairs."""
    if nx is None or ny is None:
        raise UsageError("--nx and --ny are required")
    if nx < 1 or ny < 1:
        raise UsageError("N_x and N_y must be positive")
    if family == "hex" and ny % 2:
        raise UsageError("hexagonal lattices need even N_y")
    bad = False
    if engine == "transfer":
        legs = ny if family == "square" else ny // 2
        bad = not 1 <= legs <= MAX_LEGS
    elif engine == "vertical":
        legs = ny if family == "square" else ny // 2
        bad = nx != 1 or not 1 <= legs <= MAX_VERTICAL[family]
    elif engine == "mc":
        legs = ny if family == "square" else ny // 2
        bad = legs > MAX_BOUNDARY
    if bad:
        raise UsageError(f"engine {engine!r} does not support {family} N_x={nx}, N_y={ny}\n{SUPPORT}")


def compute(engine: str, family: str, nx: int, ny: int, a) -> dict:
    """Run one engine; returns the numeric payload of a record."""
    check_geometry(engine, family, nx, ny)
    graph = build_half(family, nx, ny)
    payload = {"graph": {"descriptor": graph.descriptor(), **graph.to_json()}}
    legs = graph.boundary_size
    if engine == "transfer":
        spec = ladder_entropy(family, legs, nx)
    elif engine == "vertical":
        spec = vertical_entropy(family, legs)
    elif engine == "loop":
        try:
            spec = loop_enumerate_z(graph).entropy()
        except OracleScopeError as exc:
            raise UsageError(f"{exc}\n{SUPPORT}")
    elif engine == "ed":
        try:
            spec = exact_vbs_rdm(graph)
        except OracleScopeError as exc:
            raise UsageError(f"{exc}\n{SUPPORT}")
    elif engine == "mc":
        est = estimate_z(graph, _mc_config(a), workers=a.workers)
        res = mc_entropy(est)
        spec = res.spectrum
        payload["overlap"] = est.to_json()
        payload["entropy_stderr"] = res.entropy_stderr
        payload["per_bond_stderr"] = res.per_bond_stderr
    else:
        raise UsageError(f"unknown engine {engine!r}")
    payload["spectrum"] = spec.to_json()
    return payload


def _record(command: Sequence[str], engine: str, payload: dict, started: str, extra: Optional[dict] = None) -> dict:
    rec = {
        "command": list(command),
        "engine": engine,
        "version": __version__,
        "backend": kernels.BACKEND,
        "started": started,
        "finished": _now(),
    }
    rec.update(payload)
    if extra:
        rec.update(extra)
    return rec


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _fmt(x: float) -> str:
    return f"{x:.7f}"


def cmd_entropy(a, argv) -> int:
    started = _now()
    payload = compute(a.engine, a.family, a.nx, a.ny, a)
    rec = _record(argv, a.engine, payload, started)
    spec = payload["spectrum"]
    err = payload.get("entropy_stderr")
    if err is None:
        print(f"S = {_fmt(spec['entropy'])}")
        print(f"S/|Lambda_A| = {_fmt(spec['per_bond'])}")
    else:
        print(f"S = {_fmt(spec['entropy'])} +- {_fmt(err)}")
        print(f"S/|Lambda_A| = {_fmt(spec['per_bond'])} +- {_fmt(payload['per_bond_stderr'])}")
    out = Path(a.output) if a.output else Path(a.output_dir) / f"entropy_{a.family}_{a.nx}x{a.ny}_{a.engine}.json"
    _write_json(out, rec)
    return EXIT_OK


def parse_range(text) -> List[int]:
    if text is None:
        raise UsageError("both --nx and --ny are required for a sweep")
    if isinstance(text, int):
        return [text]
    parts = str(text).split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad range {text!r}; use N or start:stop[:step]")
    if len(nums) == 1:
        return nums
    if len(nums) not in (2, 3) or (len(nums) == 3 and nums[2] <= 0):
        raise UsageError(f"bad range {text!r}; use N or start:stop[:step]")
    step = nums[2] if len(nums) == 3 else 1
    return list(range(nums[0], nums[1] + 1, step))


def _auto_engine(family, nx, ny) -> str:
    for engine in ("transfer", "vertical", "mc"):
        try:
            check_geometry(engine, family, nx, ny)
            return engine
        except UsageError:
            continue
    return "mc"


def cmd_sweep(a, argv) -> int:
    nxs, nys = parse_range(a.nx), parse_range(a.ny)
    if not nxs or not nys:
        raise UsageError("empty sweep range")
    if len(nxs) > 1 and len(nys) > 1:
        raise UsageError("sweep over N_x or N_y, not both")
    points, records = [], []
    failures = 0
    out_dir = Path(a.output_dir)
    for nx in nxs:
        for ny in nys:
            engine = _auto_engine(a.family, nx, ny) if a.engine == "auto" else a.engine
            started = _now()
            entry = {"nx": nx, "ny": ny, "engine": engine}
            try:
                payload = compute(engine, a.family, nx, ny, a)
            except (UsageError, ValueError, RuntimeError) as exc:
                failures += 1
                entry["error"] = str(exc).splitlines()[0]
                records.append(entry)
                print(f"N_x={nx} N_y={ny} {engine}: FAILED {entry['error']}")
                continue
            rec = _record(argv, engine, payload, started)
            path = out_dir / f"entropy_{a.family}_{nx}x{ny}_{engine}.json"
            _write_json(path, rec)
            spec = payload["spectrum"]
            err = payload.get("per_bond_stderr", 0.0)
            entry.update(boundary=spec["boundary_size"], per_bond=spec["per_bond"], stderr=err, record=str(path))
            records.append(entry)
            points.append(entry)
            tail = f" +- {_fmt(err)}" if err else ""
            print(f"N_x={nx} N_y={ny} |Lambda_A|={spec['boundary_size']} S/|Lambda_A| = {_fmt(spec['per_bond'])}{tail}")
    dataset = {
        "family": a.family,
        "nx": nxs[0] if len(nxs) == 1 else None,
        "points": points,
        "records": records,
    }
    out = Path(a.output) if a.output else out_dir / f"sweep_{a.family}.json"
    _write_json(out, dataset)
    write_two_column(
        out.with_suffix(".dat"),
        [(p["boundary"] if len(nxs) == 1 else p["nx"], p["per_bond"], p["stderr"]) for p in points],
        header=f"{a.family} sweep\ncolumns: {'|Lambda_A|' if len(nxs) == 1 else 'N_x'} S/|Lambda_A| stderr",
    )
    return EXIT_NUMERIC if failures else EXIT_OK


def cmd_fit(a, argv) -> int:
    if not a.dataset:
        raise UsageError("fit needs a dataset path")
    try:
        with open(a.dataset) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read dataset {a.dataset}: {exc}")
    try:
        ds = ScalingDataset.from_json(data)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad dataset: {exc}")
    if len(ds.points) < 4:
        raise UsageError("fit needs at least 4 points")
    started = _now()
    fit = fit_area_law(ds)
    report = extrapolation_report(fit)
    rec = _record(argv, "fit", {"dataset": a.dataset, "fit": fit.to_json(), "report": report}, started)
    out = Path(a.output) if a.output else Path(a.output_dir) / (Path(a.dataset).stem + "_fit.json")
    _write_json(out, rec)
    lo, hi = ds.sizes.min(), ds.sizes.max()
    xs = [lo + (hi - lo) * k / 200 for k in range(201)]
    write_two_column(out.with_suffix(".dat"), curve_points(fit, xs), header="|Lambda_A| fitted S/|Lambda_A|")
    print(report["row"])
    print(f"alpha gap to ln 2 = {_fmt(report['gap'])} ({'below' if report['below_ln2'] else 'not below'} ln 2 by 3 sigma)")
    return EXIT_OK


def cmd_verify(a, argv) -> int:
    from . import verify

    report = verify.run(a.level, mc_samples=a.mc_samples, mc_repeats=a.mc_repeats)
    for c in report.checks:
        print(c.line())
    if report.mc_fraction is not None:
        print(f"MC agreement within 3 sigma: {report.mc_fraction:.1%}")
    n_fail = sum(not c.passed for c in report.checks)
    print(f"{len(report.checks) - n_fail}/{len(report.checks)} checks passed in {report.seconds:.1f} s: {'PASS' if report.passed else 'FAIL'}")
    out = Path(a.output) if a.output else Path(a.output_dir) / f"verify_{a.level}.json"
    _write_json(out, _record(argv, "verify", {"report": report.to_json()}, _now()))
    return EXIT_OK if report.passed else EXIT_VERIFY


COMMANDS = {"entropy": cmd_entropy, "sweep": cmd_sweep, "fit": cmd_fit, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        merged = _merge(args)
        return COMMANDS[args.command](merged, argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EstimatorError, JacobiConvergenceError, FitError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
