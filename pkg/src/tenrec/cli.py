"""Command-line front end: corrupt, recover, bench, sweep and replay.

Exit codes: 0 success, 2 I/O error, 3 usage or validation error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import media
from .errors import FormatError, InvalidConfig, NumericalFailure, ShapeMismatch, TenrecError
from .metrics import psnr, ssim
from .nonlocal_trpca import GroupingConfig
from .pipeline import METHODS, restore
from .solvers import SolverConfig

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3, 4
CSV_SCHEMA = "tenrec-csv-1"
CSV_COLUMNS = ["schema", "input", "method", "noise_rate", "seed", "parameter", "value",
               "psnr", "ssim", "iterations", "converged", "seconds", "status"]
SWEEP_PARAMS = {"theta": float, "p": int, "m": int}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- argument groups --------------------------------------------------------

def _add_io(p, out=True):
    p.add_argument("--in", "--tensor-in", dest="input", required=True, help="image, frame directory or .t3rc tensor")
    if out:
        p.add_argument("--out", "--tensor-out", dest="out", required=True)
    p.add_argument("--scale", type=float, default=None, help="resize factor for frame directories")
    p.add_argument("--resample", choices=sorted(media.RESAMPLERS), default="bilinear")
    p.add_argument("--manifest", default=None,
                   help="run manifest path (default: <out or csv>.manifest.json)")


def _add_noise(p, required=False):
    p.add_argument("--rate", type=float, required=required, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--low", type=float, default=0.0)
    p.add_argument("--high", type=float, default=255.0)
    p.add_argument("--uncoupled", action="store_true", help="draw corrupted positions per slice")


def _add_solver(p):
    d = SolverConfig()
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--mu0", type=float, default=d.mu0)
    p.add_argument("--mu-max", type=float, default=d.mu_max)
    p.add_argument("--rho", type=float, default=d.rho)
    p.add_argument("--eps", type=float, default=d.epsilon)
    p.add_argument("--theta", type=float, default=d.theta)
    p.add_argument("--max-iters", type=int, default=d.max_iters)
    g = GroupingConfig()
    p.add_argument("--patch", type=int, default=g.p)
    p.add_argument("--group-size", type=int, default=g.m)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--grouping", choices=["mode3", "unfold1"], default=g.method.value)
    p.add_argument("--window", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tenrec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("corrupt", help="inject random-valued impulse noise")
    _add_io(p)
    _add_noise(p, required=True)
    p.add_argument("--mask", default=None, help="where to write the 0/1 mask (default: <out stem>_mask)")

    p = sub.add_parser("recover", help="restore a corrupted tensor")
    _add_io(p)
    p.add_argument("--method", default="nntrpca")
    p.add_argument("--report", default=None, help="write the solver report as JSON")
    _add_solver(p)

    for name, helptext in (("bench", "compare methods on one input"), ("sweep", "sweep theta, p or m")):
        p = sub.add_parser(name, help=helptext)
        _add_io(p, out=False)
        p.add_argument("--corrupted", default=None, help="pre-corrupted input; otherwise noise is injected")
        _add_noise(p)
        p.add_argument("--csv", default=None, help="append rows here (default: stdout)")
        _add_solver(p)
        if name == "bench":
            p.add_argument("--methods", default=",".join(METHODS))
        else:
            p.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMS))
            p.add_argument("--values", required=True, help="comma list or start:stop:step")
            p.add_argument("--method", default=None, help="default ntrpca for theta, nntrpca for p and m")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("--manifest", required=True)
    return parser


# --- config helpers ---------------------------------------------------------

def _flagged(flags: str, build):
    try:
        return build()
    except InvalidConfig as exc:
        raise UsageError(f"{flags}: {exc}") from exc


def solver_config(a) -> SolverConfig:
    return _flagged("--lambda/--mu0/--mu-max/--rho/--eps/--theta/--max-iters", lambda: SolverConfig(
        lam=a.lam, mu0=a.mu0, mu_max=a.mu_max, rho=a.rho, epsilon=a.eps, theta=a.theta, max_iters=a.max_iters))


def grouping_config(a) -> GroupingConfig:
    return _flagged("--patch/--group-size/--stride/--window", lambda: GroupingConfig(
        p=a.patch, m=a.group_size, stride=a.stride, method=a.grouping, window=a.window))


def noise_spec(a) -> media.NoiseSpec:
    if not 0.0 <= a.rate <= 1.0:
        raise UsageError(f"--rate: must lie in [0, 1], got {a.rate}")
    return _flagged("--low/--high", lambda: media.NoiseSpec(
        rate=a.rate, seed=a.seed, low=a.low, high=a.high, channel_coupled=not a.uncoupled))


def parse_values(text: str, kind) -> list:
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [start + i * step for i in range(count)]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values: cannot parse {text!r} as numbers") from None
    if not values:
        raise UsageError("--values: empty list")
    if kind is int:
        if any(v != int(v) for v in values):
            raise UsageError(f"--values: {text!r} must be integers for this parameter")
        return [int(v) for v in values]
    return values


def load_input(path, a) -> np.ndarray:
    path = Path(path)
    if path.is_dir():
        return media.load_video(media.frame_paths(path), scale=a.scale, resample=a.resample)
    return media.load_any(path)


def _manifest_path(a):
    if getattr(a, "replaying", False):
        return None
    if a.manifest:
        return Path(a.manifest)
    anchor = getattr(a, "out", None) or getattr(a, "csv", None)
    return Path(str(anchor) + ".manifest.json") if anchor else None


def _write_manifest(a, command, inputs, outputs, wall_time, extra=None):
    path = _manifest_path(a)
    if path is None:
        return
    record = {
        "command": command,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "wall_time": wall_time,
        "args": {k: v for k, v in vars(a).items() if k not in ("manifest", "replaying")},
    }
    for attr, build in (("noise", noise_spec), ("solver", solver_config), ("grouping", grouping_config)):
        try:
            if attr != "noise" or a.rate is not None:
                record[attr] = _plain(dataclasses.asdict(build(a)))
        except AttributeError:
            pass
    record.update(extra or {})
    path.write_text(json.dumps(record, indent=2, sort_keys=True))


def _plain(d):
    return {k: (v.value if hasattr(v, "value") else v) for k, v in d.items()}


# --- commands ---------------------------------------------------------------

def cmd_corrupt(a) -> int:
    spec = noise_spec(a)
    x = load_input(a.input, a)
    start = time.perf_counter()
    corrupted, mask = media.inject_noise(x, spec)
    out = Path(a.out)
    mask_path = Path(a.mask) if a.mask else out.with_name(out.stem + "_mask" + out.suffix)
    media.save_any(out, corrupted)
    media.save_any(mask_path, mask * 255.0 if mask_path.suffix.lower() not in media.RAW_SUFFIXES else mask)
    _write_manifest(a, "corrupt", [a.input], [out, mask_path], time.perf_counter() - start)
    return EXIT_OK


def cmd_recover(a) -> int:
    if a.method not in METHODS:
        raise UsageError(f"--method: unknown method {a.method!r}; choose from {', '.join(METHODS)}")
    scfg, gcfg = solver_config(a), grouping_config(a)
    x = load_input(a.input, a)
    dec, seconds = restore(x, a.method, scfg, gcfg)
    media.save_any(a.out, dec.low_rank)
    outputs = [a.out]
    if a.report:
        payload = dec.report.to_dict()
        payload.update(method=a.method, seconds=seconds)
        Path(a.report).write_text(json.dumps(payload, indent=2))
        outputs.append(a.report)
    _write_manifest(a, "recover", [a.input], outputs, seconds, {"method": a.method})
    return EXIT_OK


def _bench_inputs(a):
    ref = load_input(a.input, a)
    if a.corrupted:
        corrupted = load_input(a.corrupted, a)
        if corrupted.shape != ref.shape:
            raise UsageError(f"reference shape {ref.shape} does not match corrupted shape {corrupted.shape}")
        rate = ""
    else:
        if a.rate is None:
            raise UsageError("give either --corrupted or --rate")
        corrupted, _ = media.inject_noise(ref, noise_spec(a))
        rate = a.rate
    return ref, corrupted, rate


def _run_row(ref, corrupted, method, scfg, gcfg, base) -> dict:
    row = dict(base, schema=CSV_SCHEMA, method=method)
    try:
        dec, seconds = restore(corrupted, method, scfg, gcfg)
    except NumericalFailure as exc:
        row.update(psnr="", ssim="", iterations="", converged="", seconds="", status=f"failed: {exc}")
        return row
    value = psnr(ref, dec.low_rank)
    row.update(
        psnr="inf" if math.isinf(value) else f"{value:.6f}",
        ssim=f"{ssim(ref, dec.low_rank):.6f}",
        iterations=dec.report.iterations,
        converged=dec.report.converged,
        seconds=f"{seconds:.3f}",
        status="ok",
    )
    return row


def _emit(rows, path):
    if path:
        path = Path(path)
        fresh = not path.exists() or path.stat().st_size == 0
        with path.open("a", newline="") as fh:
            _write_rows(fh, rows, header=fresh)
    else:
        buf = io.StringIO()
        _write_rows(buf, rows, header=True)
        sys.stdout.write(buf.getvalue())


def _write_rows(fh, rows, header):
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
    if header:
        writer.writeheader()
    for row in rows:
        writer.writerow({k: row.get(k, "") for k in CSV_COLUMNS})


def cmd_bench(a) -> int:
    methods = [m.strip() for m in a.methods.split(",") if m.strip()]
    if not methods:
        raise UsageError("--methods: empty method list")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"--methods: unknown method(s) {', '.join(bad)}")
    scfg, gcfg = solver_config(a), grouping_config(a)
    ref, corrupted, rate = _bench_inputs(a)
    base = {"input": a.input, "noise_rate": rate, "seed": a.seed if rate != "" else ""}
    start = time.perf_counter()
    rows = [_run_row(ref, corrupted, m, scfg, gcfg, base) for m in methods]
    _emit(rows, a.csv)
    _write_manifest(a, "bench", [a.input] + ([a.corrupted] if a.corrupted else []),
                    [a.csv] if a.csv else [], time.perf_counter() - start, {"methods": methods})
    return EXIT_OK


def cmd_sweep(a) -> int:
    kind = SWEEP_PARAMS[a.param]
    values = parse_values(a.values, kind)
    method = a.method or ("ntrpca" if a.param == "theta" else "nntrpca")
    if method not in METHODS:
        raise UsageError(f"--method: unknown method {method!r}")
    solver_config(a), grouping_config(a)  # validate the fixed flags up front
    ref, corrupted, rate = _bench_inputs(a)
    base = {"input": a.input, "noise_rate": rate, "seed": a.seed if rate != "" else "", "parameter": a.param}
    start = time.perf_counter()
    rows = []
    for v in values:
        if a.param == "theta":
            scfg, gcfg = solver_config(a).replace(theta=v), grouping_config(a)
        else:
            scfg = solver_config(a)
            field = {"p": "p", "m": "m"}[a.param]
            gcfg = dataclasses.replace(grouping_config(a), **{field: v})
        rows.append(dict(_run_row(ref, corrupted, method, scfg, gcfg, base), value=v))
    _emit(rows, a.csv)
    _write_manifest(a, "sweep", [a.input], [a.csv] if a.csv else [], time.perf_counter() - start,
                    {"method": method, "values": values})
    return EXIT_OK


def cmd_replay(a) -> int:
    try:
        record = json.loads(Path(a.manifest).read_text())
        args = argparse.Namespace(**record["args"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{a.manifest}: not a tenrec manifest ({exc})") from exc
    args.manifest, args.replaying = None, True
    if args.command == "replay":
        raise UsageError("a manifest cannot replay another replay")
    return COMMANDS[args.command](args)


COMMANDS = {"corrupt": cmd_corrupt, "recover": cmd_recover, "bench": cmd_bench,
            "sweep": cmd_sweep, "replay": cmd_replay}


def main(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
        return COMMANDS[a.command](a)
    except (UsageError, InvalidConfig, ShapeMismatch) as exc:
        print(f"tenrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"tenrec: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, FormatError) as exc:
        print(f"tenrec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TenrecError as exc:
        print(f"tenrec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
