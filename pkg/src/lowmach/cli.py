"""Command-line entry point: ``lowmach <command> ...``.

Exit codes: 0 success, 1 runtime failure (aborted run), 2 usage or config error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .faadibruno import PowerSeries1, PowerSeries3, TruncationError, series_compose
from .harness import (
    ConfigError,
    InitialDataError,
    fmt,
    load_config,
    resolve_output_dir,
    run_one,
    run_sweep,
    with_overrides,
    write_csv,
)
from .multiindex import enumerate_partitions
from .norms import analytic_norm
from .spectral import read_snapshot

log = logging.getLogger("lowmach")


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, metavar="FILE", help="TOML experiment config")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides MLL_OUT and the config)")
    p.add_argument("--seed", type=int, help="random seed for the initial data")
    p.add_argument("--eps", type=_float_list, metavar="LIST", help="comma-separated Mach numbers")
    p.add_argument("--jobs", type=int, metavar="N", help="parallel worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lowmach",
        description="Low Mach number limit laboratory: solver, analytic norms, Faa di Bruno kernel.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("run", help="one paired compressible/incompressible run (first eps)")
    _add_experiment_flags(p)

    p = sub.add_parser("sweep", help="paired runs for every eps in the config")
    _add_experiment_flags(p)

    p = sub.add_parser("norm", help="analytic/Gevrey norm of a snapshot as one CSV row")
    p.add_argument("--snapshot", required=True, metavar="FILE")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--mmax", type=int, default=30)
    p.add_argument("--time", type=float, default=0.0, help="value written in the t column")
    p.add_argument("--fields", help="comma-separated field names (default: p and v*)")

    fdb = sub.add_parser("fdb", help="Faa di Bruno combinatorics")
    fsub = fdb.add_subparsers(dest="fdb_command", required=True, metavar="ACTION")
    p = fsub.add_parser("partitions", help="list the partition sets P_s(i, beta)")
    p.add_argument("--i", type=int, required=True, dest="i")
    p.add_argument("--beta", type=_int_list, required=True, metavar="B1,B2[,B3]")
    p = fsub.add_parser("compose", help="coefficients of phi(psi(x)) from a TOML series file")
    p.add_argument("--input", required=True, metavar="FILE")
    p.add_argument("--order", type=int, help="truncation order (default: the file's 'order')")
    p.add_argument("--out", metavar="CSV", help="write here instead of stdout")

    snap = sub.add_parser("snapshot", help="snapshot utilities")
    ssub = snap.add_subparsers(dest="snapshot_command", required=True, metavar="ACTION")
    p = ssub.add_parser("inspect", help="print header and per-field norms")
    p.add_argument("file")
    return parser


def _experiment_config(args):
    config = load_config(args.config)
    return with_overrides(config, seed=args.seed, eps=args.eps, jobs=args.jobs)


def cmd_run(args) -> int:
    config = _experiment_config(args)
    out = resolve_output_dir(config, args.out)
    summary = run_one(config, config.eps[0], out)
    print(",".join(fmt(x) for x in summary.row()))
    return 1 if summary.aborted else 0


def cmd_sweep(args) -> int:
    config = _experiment_config(args)
    out = resolve_output_dir(config, args.out)
    result = run_sweep(config, out)
    for r in result.runs:
        print(f"eps={r.eps:g} status={r.status} sup_M={r.sup_M_eps:.6g} "
              f"L2t_err={r.L2t_A_delta_err:.6g} wall={r.wall_time:.1f}s {r.message}".rstrip())
    print(f"summary: {Path(out) / 'summary.csv'}")
    return 1 if result.any_aborted else 0


def cmd_norm(args) -> int:
    grid, fields = read_snapshot(args.snapshot)
    if args.fields:
        names = args.fields.split(",")
    else:
        names = [n for n in fields if n == "p" or (n.startswith("v") and not n.startswith("vinc"))]
    missing = [n for n in names if n not in fields]
    if missing or not names:
        raise ConfigError(f"snapshot has fields {list(fields)}, requested {names}")
    rep = analytic_norm([fields[n] for n in names], args.tau, args.sigma, args.mmax)
    header = ["t", "tau", "value", "tail_bound"] + [f"m{m}" for m in range(len(rep.per_m))]
    row = [args.time, args.tau, rep.value, rep.tail_bound, *rep.per_m]
    print("# schema=1")
    print(",".join(header))
    print(",".join(fmt(x) for x in row))
    return 0


def cmd_partitions(args) -> int:
    try:
        tuples = enumerate_partitions(args.i, args.beta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for s, ts in tuples.items():
        for t in ts:
            ks = ",".join(str(k) for k in t.ks)
            lams = ";".join("(" + ",".join(str(c) for c in lam) + ")" for lam in t.lambdas)
            print(f"s={s} k={ks} lambda={lams}")
    return 0


def _parse_series_file(path: str):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read series file {path}: {exc}") from exc
    try:
        d = int(data["d"])
        phi = PowerSeries1(tuple(Fraction(str(c)) for c in data["phi"]))
        psi_raw = data["psi"]
        psi_coeffs = {tuple(int(x) for x in key.split(",")): Fraction(str(v)) for key, v in psi_raw.items()}
        psi_order = int(data.get("psi_order", max((sum(b) for b in psi_coeffs), default=0)))
        order = data.get("order")
        psi = PowerSeries3(d, max(psi_order, int(order or 0)), psi_coeffs)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"malformed series file {path}: {exc!r}") from exc
    return phi, psi, order


def cmd_compose(args) -> int:
    phi, psi, order = _parse_series_file(args.input)
    N = args.order if args.order is not None else order
    if N is None:
        raise ConfigError("truncation order missing: pass --order or set 'order' in the file")
    try:
        out = series_compose(phi, psi, int(N))
    except TruncationError as exc:
        raise ConfigError(str(exc)) from exc
    header = [f"beta{j + 1}" for j in range(out.d)] + ["c"]
    rows = [[*beta, str(c)] for beta, c in out.items()]
    if args.out:
        write_csv(args.out, header, rows)
    else:
        print("# schema=1")
        print(",".join(header))
        for row in rows:
            print(",".join(str(x) for x in row))
    return 0


def cmd_inspect(args) -> int:
    grid, fields = read_snapshot(args.file)
    print(f"d={grid.d} N={grid.N} fields={len(fields)}")
    for name, f in fields.items():
        print(f"  {name}: L2={f.l2_norm():.16e} real={f.is_hermitian(1e-12)}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handlers = {
        "run": cmd_run,
        "sweep": cmd_sweep,
        "norm": cmd_norm,
        "fdb": lambda a: cmd_partitions(a) if a.fdb_command == "partitions" else cmd_compose(a),
        "snapshot": cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, InitialDataError) as exc:
        print(f"lowmach: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"lowmach: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
