"""Experiment configuration, initial data, epsilon sweeps and CSV output."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .euler import DIAGNOSTIC_COLUMNS, PairRecord, PressureLaw, SolverConfig, run_pair
from .norms import NormParams, analytic_norm, initial_data_check
from .spectral import SpectralField, StateU, TorusGrid, hermitian_part, leray_multiply, read_snapshot, write_snapshot

log = logging.getLogger(__name__)

CSV_SCHEMA = "# schema=1"
RECIPES = ("general", "well_prepared", "file")


class ConfigError(ValueError):
    pass


class InitialDataError(ValueError):
    pass


@dataclass(frozen=True)
class LawSpec:
    kind: str = "ideal_gas"
    gamma: float = 1.4
    K: float = 1.0
    P_bar: float = 1.0
    order: int = 16
    radius: float = 1.0
    a: tuple = ()
    r: tuple = ()

    def build(self) -> PressureLaw:
        if self.kind == "linear_acoustics":
            return PressureLaw.linear_acoustics()
        if self.kind == "ideal_gas":
            return PressureLaw.ideal_gas(self.gamma, self.K, self.P_bar, self.order, self.radius)
        if self.kind == "series":
            if not self.a or not self.r:
                raise ConfigError("law.kind = 'series' needs both 'a' and 'r' coefficient lists")
            return PressureLaw.from_coefficients(self.a, self.r, self.radius, "series")
        raise ConfigError(f"unknown pressure law {self.kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 2
    N: int = 64
    law: LawSpec = field(default_factory=LawSpec)
    eps: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    recipe: str = "general"
    M0: float = 100.0
    amplitude: float | None = None
    data_file: str | None = None
    tau0: float = 0.5
    K: float = 1.0
    sigma: float = 1.0
    M_max: int = 30
    delta: float | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_dir: str = "out"
    seed: int = 0
    jobs: int = 1
    snapshot_every: int = 0

    def __post_init__(self):
        if not self.eps:
            raise ConfigError("eps list is empty")
        if any(not (e > 0) for e in self.eps):
            raise ConfigError(f"eps values must be positive: {self.eps}")
        if len(set(self.eps)) != len(self.eps):
            raise ConfigError(f"eps values must be distinct: {self.eps}")
        if self.recipe not in RECIPES:
            raise ConfigError(f"recipe must be one of {RECIPES}, got {self.recipe!r}")
        if self.recipe == "file" and not self.data_file:
            raise ConfigError("recipe 'file' needs initial_data.file")
        if self.M0 <= 0:
            raise ConfigError("M0 must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        try:
            TorusGrid(self.d, self.N)
            self.norm_params
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.solver.T > self.norm_params.T * (1 + 1e-12):
            raise ConfigError(f"solver.T={self.solver.T} exceeds tau0/(2K)={self.norm_params.T}")

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(self.d, self.N)

    @property
    def norm_params(self) -> NormParams:
        return NormParams(self.tau0, self.K, self.sigma, self.M_max)

    @property
    def delta_value(self) -> float:
        return self.tau0 / 4 if self.delta is None else self.delta


_SECTIONS = {
    "grid": {"d", "N"},
    "law": {"kind", "gamma", "K", "P_bar", "order", "radius", "a", "r"},
    "initial_data": {"recipe", "M0", "amplitude", "file"},
    "norm": {"tau0", "K", "sigma", "M_max", "delta"},
    "solver": {"T", "c_adv", "c_ac", "dt", "dealias", "diag_every", "advect"},
    "run": {"eps", "snapshot_every"},
}
_TOP = {"seed", "output_dir", "jobs"}


def config_from_mapping(data: Mapping[str, Any]) -> ExperimentConfig:
    unknown = set(data) - set(_SECTIONS) - _TOP
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for name, keys in _SECTIONS.items():
        sect = data.get(name, {})
        if not isinstance(sect, Mapping):
            raise ConfigError(f"[{name}] must be a table")
        bad = set(sect) - keys
        if bad:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(bad)}")
    grid, law, init = data.get("grid", {}), dict(data.get("law", {})), data.get("initial_data", {})
    norm, solver, run = data.get("norm", {}), data.get("solver", {}), data.get("run", {})
    for key in ("a", "r"):
        if key in law:
            law[key] = tuple(law[key])
    kw: dict[str, Any] = {}
    try:
        kw.update(grid)
        kw["law"] = LawSpec(**law)
        if "recipe" in init:
            kw["recipe"] = init["recipe"]
        if "M0" in init:
            kw["M0"] = float(init["M0"])
        if "amplitude" in init:
            kw["amplitude"] = float(init["amplitude"])
        if "file" in init:
            kw["data_file"] = str(init["file"])
        kw.update(norm)
        kw["solver"] = SolverConfig(**solver)
        if "eps" in run:
            kw["eps"] = tuple(float(e) for e in run["eps"])
        if "snapshot_every" in run:
            kw["snapshot_every"] = int(run["snapshot_every"])
        for key in _TOP:
            if key in data:
                kw[key] = data[key]
        return ExperimentConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_mapping(data)


# --- initial data ----------------------------------------------------------


def _random_band_limited(grid: TorusGrid, rng: np.random.Generator, tau0: float, ncomp: int) -> np.ndarray:
    shape = (ncomp,) + grid.shape
    xi = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    c = xi * np.exp(-2.0 * tau0 * np.sqrt(grid.ksq))
    c = np.where(grid.dealias_mask, c, 0.0)
    c[(slice(None),) + (0,) * grid.d] = 0.0
    return hermitian_part(grid, c)


def generate_initial_data(
    recipe: str,
    grid: TorusGrid,
    seed: int,
    tau0: float,
    M0: float,
    M_max: int = 30,
    amplitude: float | None = None,
    data_file: str | None = None,
) -> StateU:
    """Initial state (p0, v0), independent of eps.

    ``general``: random real fields, spectrum ~ exp(-2 tau0 |k|), scaled to
    an A(tau0) norm of 0.9*M0 (or by ``amplitude`` if given).
    ``well_prepared``: the same velocity, Leray-projected, with p0 = 0.
    ``file``: fields p, v1..vd from an MLSF snapshot.
    """
    if recipe == "file":
        if data_file is None:
            raise InitialDataError("recipe 'file' needs a snapshot path")
        fgrid, fields = read_snapshot(data_file)
        if fgrid != grid:
            raise InitialDataError(f"snapshot grid {fgrid} does not match configured {grid}")
        names = ["p"] + [f"v{j + 1}" for j in range(grid.d)]
        missing = [n for n in names if n not in fields]
        if missing:
            raise InitialDataError(f"snapshot lacks fields {missing}")
        u = StateU(fields["p"], tuple(fields[n] for n in names[1:]))
    elif recipe in ("general", "well_prepared"):
        rng = np.random.default_rng(seed)
        c = _random_band_limited(grid, rng, tau0, 1 + grid.d)
        base = analytic_norm(StateU.from_stack(grid, c), tau0, 1.0, M_max).value
        if amplitude is None:
            # stay strictly under 0.9*M0 despite rounding in the rescale
            c = c * (0.9 * M0 / base * (1 - 1e-12))
        else:
            c = c * amplitude
        if recipe == "well_prepared":
            c[1:] = leray_multiply(grid, c[1:])
            c[0] = 0.0
        u = StateU.from_stack(grid, c)
    else:
        raise InitialDataError(f"unknown recipe {recipe!r}")

    ok, rep = initial_data_check(u, tau0, M0, M_max)
    if not ok:
        raise InitialDataError(
            f"initial data have A(tau0) norm {rep.value:.6g} > M0 = {M0:.6g}; "
            "use a smaller amplitude"
        )
    return u


def initial_data_for(config: ExperimentConfig) -> StateU:
    return generate_initial_data(
        config.recipe,
        config.grid,
        config.seed,
        config.tau0,
        config.M0,
        config.M_max,
        config.amplitude,
        config.data_file,
    )


# --- output ----------------------------------------------------------------


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.16e}"
    return str(x)


def write_csv(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    buf = io.StringIO()
    buf.write(CSV_SCHEMA + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def state_fields(u: StateU, v_inc=None) -> dict[str, SpectralField]:
    out = {"p": u.p}
    out.update({f"v{j + 1}": c for j, c in enumerate(u.v)})
    if v_inc is not None:
        out.update({f"vinc{j + 1}": c for j, c in enumerate(v_inc)})
    return out


def eps_label(eps: float) -> str:
    return f"eps_{eps:.6g}"


SUMMARY_COLUMNS = (
    "eps",
    "status",
    "steps",
    "sup_M_eps",
    "final_A_delta_v_err",
    "L2t_A_delta_err",
    "final_L2_proj_v_err",
    "sup_L2_p",
    "energy_drift",
    "message",
)


@dataclass
class RunSummary:
    eps: float
    status: str = "ok"
    steps: int = 0
    sup_M_eps: float = math.nan
    final_A_delta_v_err: float = math.nan
    L2t_A_delta_err: float = math.nan
    final_L2_proj_v_err: float = math.nan
    sup_L2_p: float = math.nan
    energy_drift: float = math.nan
    message: str = ""
    wall_time: float = 0.0

    @property
    def aborted(self) -> bool:
        return self.status != "ok"

    def row(self) -> list:
        return [getattr(self, c) for c in SUMMARY_COLUMNS]


@dataclass
class SweepResult:
    runs: list[RunSummary]
    out_dir: Path

    @property
    def any_aborted(self) -> bool:
        return any(r.aborted for r in self.runs)


def _summarise(eps: float, rec: PairRecord | None) -> RunSummary:
    s = RunSummary(eps)
    if rec is None or not rec.rows:
        return s
    last = rec.rows[-1]
    s.steps = int(last["step"])
    s.sup_M_eps = rec.sup_M
    s.final_A_delta_v_err = last["A_delta_v_err"]
    s.L2t_A_delta_err = rec.err_L2t
    s.final_L2_proj_v_err = last["L2_proj_v_err"]
    s.sup_L2_p = rec.sup_L2_p
    s.energy_drift = rec.energy_drift
    return s


def run_one(config: ExperimentConfig, eps: float, out_dir: str | Path, u0: StateU | None = None) -> RunSummary:
    """One paired run at a given eps, writing into its own directory.  Never raises."""
    run_dir = Path(out_dir) / eps_label(eps)
    run_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rec = None
    try:
        law = config.law.build()
        if u0 is None:
            u0 = initial_data_for(config)
        u0 = u0.replace(eps=eps, t=0.0)
        write_snapshot(run_dir / "initial.mlsf", state_fields(u0))
        solver = config.solver
        def snap(n, u, w):
            if config.snapshot_every and n > 0 and n % config.snapshot_every == 0:
                write_snapshot(run_dir / f"step_{n:07d}.mlsf", state_fields(u, w))

        rec = run_pair(u0, law, solver, config.norm_params, config.delta_value, config.M0, snap)
        summary = _summarise(eps, rec)
        write_snapshot(run_dir / "final.mlsf", state_fields(rec.final, rec.final_inc))
    except Exception as exc:  # a failed run must not take the sweep down
        rec = getattr(exc, "partial_record", rec)
        summary = _summarise(eps, rec)
        summary.status = "aborted"
        summary.message = f"{type(exc).__name__}: {exc}"
        log.error("run eps=%g aborted: %s", eps, summary.message)
    if rec is not None:
        write_csv(
            run_dir / "diagnostics.csv",
            DIAGNOSTIC_COLUMNS,
            [[r[c] for c in DIAGNOSTIC_COLUMNS] for r in rec.rows],
        )
    summary.wall_time = time.perf_counter() - t0
    return summary


def _run_one_job(args):
    config, eps, out_dir = args
    return run_one(config, eps, out_dir)


def run_sweep(config: ExperimentConfig, out_dir: str | Path | None = None) -> SweepResult:
    """run_pair for every eps; writes per-run directories plus summary.csv and timing.csv."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(config, eps, out) for eps in config.eps]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, len(jobs))) as pool:
            runs = list(pool.map(_run_one_job, jobs))
    else:
        runs = [_run_one_job(j) for j in jobs]
    write_csv(out / "summary.csv", SUMMARY_COLUMNS, [r.row() for r in runs])
    # wall times are not reproducible, so they stay out of summary.csv
    write_csv(out / "timing.csv", ("eps", "wall_time_s"), [[r.eps, r.wall_time] for r in runs])
    return SweepResult(runs, out)


def resolve_output_dir(config: ExperimentConfig, cli_out: str | None) -> str:
    if cli_out:
        return cli_out
    return os.environ.get("MLL_OUT") or config.output_dir


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    try:
        return replace(config, **kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
