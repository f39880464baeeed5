"""Symmetrized isentropic Euler on the torus and its incompressible limit.

Compressible system, for u = (p, v) at Mach number eps:

    d_t u = -v.grad u - (1/eps) E^{-1} L u,   E = diag(a(eps p), r(eps p) I)

Incompressible reference: d_t v = -Leray(v.grad v), div v = 0.

Both are advanced with classical RK4 on dealiased pseudo-spectral right-hand
sides.  Hot loops work on stacked coefficient arrays of shape (1+d, N, ..., N).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .faadibruno import PowerSeries1
from .norms import NormParams, analytic_norm, initial_data_check, radius
from .spectral import (
    SpectralField,
    StateU,
    TorusGrid,
    VectorField,
    hermitian_part,
    leray_multiply,
    leray_project,
)

log = logging.getLogger(__name__)


class CoefficientRangeError(ValueError):
    """eps*p left the disc where the pressure-law series is trusted."""

    def __init__(self, sup_norm: float, radius: float):
        self.sup_norm = sup_norm
        self.radius = radius
        super().__init__(
            f"||eps p||_Linf = {sup_norm:.6g} exceeds the pressure-law validity radius {radius:.6g}"
        )


class SolverDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class PressureLaw:
    """Coefficients a(x), r(x) of the symmetrizer as truncated power series.

    ``radius`` is the validity radius: evaluations with |x| > radius are refused.
    """

    a_series: PowerSeries1
    r_series: PowerSeries1
    radius: float = math.inf
    name: str = "custom"
    _a: np.ndarray = field(init=False, repr=False, compare=False)
    _r: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.array([float(c) for c in self.a_series.coeffs])
        r = np.array([float(c) for c in self.r_series.coeffs])
        if a[0] <= 0 or r[0] <= 0:
            raise ValueError(f"a(0)={a[0]} and r(0)={r[0]} must both be positive")
        if self.radius <= 0:
            raise ValueError("validity radius must be positive")
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_r", r)

    @classmethod
    def from_coefficients(cls, a: Sequence, r: Sequence, radius: float = math.inf, name: str = "series"):
        return cls(PowerSeries1(tuple(a)), PowerSeries1(tuple(r)), radius, name)

    @classmethod
    def linear_acoustics(cls) -> "PressureLaw":
        return cls.from_coefficients([1], [1], math.inf, "linear-acoustics")

    @classmethod
    def ideal_gas(cls, gamma=1.4, K=1.0, P_bar=1.0, order: int = 16, radius: float = 1.0) -> "PressureLaw":
        """rho = K P^(1/gamma): a = 1/gamma, r(x) = K (P_bar e^x)^(1/gamma - 1), Taylor-truncated."""
        if gamma <= 1 or K <= 0 or P_bar <= 0:
            raise ValueError("ideal gas needs gamma > 1, K > 0, P_bar > 0")
        g = Fraction(str(gamma))
        c = 1 / g - 1
        r0 = Fraction(float(K) * float(P_bar) ** float(c))
        r = [r0 * c**n / math.factorial(n) for n in range(order + 1)]
        return cls(PowerSeries1((1 / g,)), PowerSeries1(tuple(r)), radius, f"ideal-gas(gamma={gamma})")

    @property
    def a0(self) -> float:
        return float(self._a[0])

    @property
    def r0(self) -> float:
        return float(self._r[0])

    @property
    def is_constant(self) -> bool:
        return len(self._a) == 1 and len(self._r) == 1

    def check_range(self, x: np.ndarray) -> None:
        sup = float(np.max(np.abs(x))) if np.size(x) else 0.0
        if not sup <= self.radius:
            raise CoefficientRangeError(sup, self.radius)

    def a(self, x: np.ndarray) -> np.ndarray:
        self.check_range(x)
        return np.polynomial.polynomial.polyval(x, self._a)

    def r(self, x: np.ndarray) -> np.ndarray:
        self.check_range(x)
        return np.polynomial.polynomial.polyval(x, self._r)


@dataclass(frozen=True)
class SolverConfig:
    T: float = 0.2
    c_adv: float = 0.5
    c_ac: float = 0.5
    dt: float | None = None
    dealias: bool = True
    diag_every: int = 1
    advect: bool = True

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("T must be non-negative")
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.c_adv <= 0 or self.c_ac <= 0:
            raise ValueError("CFL constants must be positive")
        if self.diag_every < 1:
            raise ValueError("diag_every must be >= 1")


def _mask(grid: TorusGrid, dealias: bool):
    return grid.dealias_mask if dealias else np.ones(grid.shape, dtype=bool)


def eval_coefficients(law: PressureLaw, eps_p: SpectralField):
    """a(eps p), r(eps p) and their reciprocals as spectral fields."""
    grid = eps_p.grid
    x = eps_p.physical()
    a = law.a(x)
    r = law.r(x)
    return tuple(SpectralField.from_physical(grid, f) for f in (a, r, 1.0 / a, 1.0 / r))


def _rhs_arrays(grid: TorusGrid, U: np.ndarray, eps: float, law: PressureLaw, mask, advect: bool = True):
    d = grid.d
    ik = grid.ik
    to_phys, to_spec = grid.to_physical, grid.to_spectral
    U = np.where(mask, U, 0.0)
    if law.is_constant and math.isinf(law.radius):
        # constant symmetrizer: the acoustic part is diagonal in Fourier space
        div_hat = sum(ik[j] * U[1 + j] for j in range(d))
        out = -np.stack([div_hat / law.a0] + [ik[j] * U[0] / law.r0 for j in range(d)]) / eps
        if advect:
            phys = to_phys(U)
            adv = np.zeros_like(phys)
            for j in range(d):
                adv += phys[1 + j] * to_phys(ik[j] * U)
            out -= to_spec(adv)
        return np.where(mask, out, 0.0)
    phys = to_phys(U)
    p, v = phys[0], phys[1:]

    x = eps * p
    inv_a = 1.0 / law.a(x)
    inv_r = 1.0 / law.r(x)
    # truncate the coefficient fields to the retained band before multiplying
    inv_a = to_phys(np.where(mask, to_spec(inv_a), 0.0))
    inv_r = to_phys(np.where(mask, to_spec(inv_r), 0.0))

    div_v = to_phys(sum(ik[j] * U[1 + j] for j in range(d)))
    grad_p = to_phys(np.stack([ik[j] * U[0] for j in range(d)]))
    singular = np.concatenate([(inv_a * div_v)[None], inv_r[None] * grad_p])
    out = -to_spec(singular) / eps

    if advect:
        adv = np.zeros_like(phys)
        for j in range(d):
            adv += v[j] * to_phys(ik[j] * U)
        out -= to_spec(adv)
    return np.where(mask, out, 0.0)


def rhs_compressible(u: StateU, law: PressureLaw, advect: bool = True, dealias: bool = True) -> StateU:
    """Time derivative of u; ``advect=False`` drops v.grad u (linearised acoustics)."""
    grid = u.grid
    dU = _rhs_arrays(grid, u.stack(), u.eps, law, _mask(grid, dealias), advect)
    return StateU.from_stack(grid, dU, u.eps, u.t)


def _rhs_inc_arrays(grid: TorusGrid, V: np.ndarray, mask) -> np.ndarray:
    V = np.where(mask, V, 0.0)
    v = grid.to_physical(V)
    adv = np.zeros_like(v)
    for j in range(grid.d):
        adv += v[j] * grid.to_physical(grid.ik[j] * V)
    return -leray_multiply(grid, np.where(mask, grid.to_spectral(adv), 0.0))


def rhs_incompressible(v: Sequence[SpectralField], law: PressureLaw | None = None, dealias: bool = True) -> VectorField:
    """d_t v = -Leray(v.grad v).  The constant density r(0) cancels after projection."""
    grid = v[0].grid
    V = np.stack([c.coeffs for c in v])
    scale = max(1.0, float(np.sqrt(np.sum(np.abs(V) ** 2))))
    div = np.sqrt(np.sum(np.abs(sum(grid.ik[j] * V[j] for j in range(grid.d))) ** 2))
    if div > 1e-10 * scale:
        raise ValueError(f"velocity is not divergence-free (||div v|| ~ {div:.3e})")
    dV = _rhs_inc_arrays(grid, V, _mask(grid, dealias))
    return tuple(SpectralField(grid, c) for c in dV)


def init_w0(v0: Sequence[SpectralField], law: PressureLaw | None = None) -> VectorField:
    """Initial velocity of the limit system.

    Solves div w0 = 0, curl(r0 w0) = curl(r0 v0); with r0 = r(0) constant this
    is the Leray projection of v0 with its mean mode kept.
    """
    return leray_project(v0)


def _rk4(f: Callable[[np.ndarray], np.ndarray], grid: TorusGrid, U: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(U)
    k2 = f(hermitian_part(grid, U + 0.5 * dt * k1))
    k3 = f(hermitian_part(grid, U + 0.5 * dt * k2))
    k4 = f(hermitian_part(grid, U + dt * k3))
    return hermitian_part(grid, U + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def cfl_dt(u: StateU, law: PressureLaw, config: SolverConfig) -> float:
    """min(c_adv dx / |v|_max, c_ac eps dx sqrt(a_min r_min)), or the fixed config.dt."""
    if config.dt is not None:
        return config.dt
    grid = u.grid
    dx = grid.dx
    phys = grid.to_physical(u.stack())
    vmax = float(np.max(np.sqrt(np.sum(phys[1:] ** 2, axis=0))))
    x = u.eps * phys[0]
    a_min = float(np.min(law.a(x)))
    r_min = float(np.min(law.r(x)))
    if a_min <= 0 or r_min <= 0:
        raise SolverDivergedError(f"symmetrizer lost positivity: a_min={a_min}, r_min={r_min}")
    dt_ac = config.c_ac * u.eps * dx * math.sqrt(a_min * r_min)
    dt_adv = config.c_adv * dx / vmax if vmax > 0 else math.inf
    return min(dt_ac, dt_adv)


def _check_finite(U: np.ndarray, t: float, what: str) -> None:
    if not np.all(np.isfinite(U)):
        bad = int(np.sum(~np.isfinite(U)))
        raise SolverDivergedError(f"{what}: {bad} non-finite coefficients at t={t:.6g}")


def step(u: StateU, law: PressureLaw, config: SolverConfig, dt: float | None = None) -> StateU:
    """One RK4 step; dt defaults to the CFL step."""
    grid = u.grid
    if dt is None:
        dt = cfl_dt(u, law, config)
    mask = _mask(grid, config.dealias)

    def f(U):
        return _rhs_arrays(grid, U, u.eps, law, mask, config.advect)

    U = _rk4(f, grid, hermitian_part(grid, u.stack()), dt)
    _check_finite(U, u.t + dt, "compressible state")
    return StateU.from_stack(grid, U, u.eps, u.t + dt)


def step_incompressible(v: Sequence[SpectralField], dt: float, dealias: bool = True) -> VectorField:
    grid = v[0].grid
    mask = _mask(grid, dealias)
    V = _rk4(lambda W: _rhs_inc_arrays(grid, W, mask), grid, np.stack([c.coeffs for c in v]), dt)
    _check_finite(V, math.nan, "incompressible state")
    return tuple(SpectralField(grid, c) for c in V)


def integrate(u: StateU, law: PressureLaw, config: SolverConfig, T: float | None = None) -> StateU:
    """Advance to time T (default config.T), shortening the last step to land on it."""
    T = config.T if T is None else T
    while u.t < T - 1e-14 * max(1.0, T):
        dt = min(cfl_dt(u, law, config), T - u.t)
        u = step(u, law, config, dt)
    return u


def symmetrizer_energy(u: StateU, law: PressureLaw) -> float:
    """integral of a(eps p) p^2 + r(eps p) |v|^2 over the torus."""
    grid = u.grid
    phys = grid.to_physical(u.stack())
    x = u.eps * phys[0]
    dens = law.a(x) * phys[0] ** 2 + law.r(x) * np.sum(phys[1:] ** 2, axis=0)
    return float(np.sum(dens) * grid.dx**grid.d)


# --- paired runs -----------------------------------------------------------

DIAGNOSTIC_COLUMNS = (
    "step",
    "t",
    "tau",
    "A_tau_u",
    "M_eps",
    "A_delta_v_err",
    "A_delta_p",
    "L2_p",
    "L2_v",
    "L2_v_err",
    "L2_proj_v_err",
    "energy",
    "L2t_A_delta_err",
)


@dataclass
class PairRecord:
    eps: float
    rows: list[dict] = field(default_factory=list)
    final: StateU | None = None
    final_inc: VectorField | None = None

    @property
    def sup_M(self) -> float:
        return self.rows[-1]["M_eps"]

    @property
    def err_L2t(self) -> float:
        return self.rows[-1]["L2t_A_delta_err"]

    @property
    def sup_L2_p(self) -> float:
        return max(r["L2_p"] for r in self.rows)

    @property
    def energy_drift(self) -> float:
        e0 = self.rows[0]["energy"]
        return (self.rows[-1]["energy"] - e0) / e0 if e0 else self.rows[-1]["energy"]


def run_pair(
    u0: StateU,
    law: PressureLaw,
    config: SolverConfig,
    norm_params: NormParams,
    delta: float | None = None,
    M0: float | None = None,
    on_diagnostic: Callable[[int, StateU, VectorField], None] | None = None,
) -> PairRecord:
    """Advance the compressible state and the incompressible reference side by side.

    Diagnostics are taken every ``config.diag_every`` steps and at the end.
    ``M_eps`` is the running supremum of the A(tau(t)) norm of u; the
    time-integrated error is sqrt(int_0^t ||v - v_inc||_{A(delta)}^2 dt)
    by the trapezoid rule over the diagnostic times.  ``on_diagnostic`` is
    called as (step, u, v_inc) after each diagnostic row.
    """
    if config.T > norm_params.T * (1 + 1e-12):
        raise ValueError(f"run end time {config.T} beyond the radius horizon {norm_params.T}")
    delta = norm_params.tau0 / 4 if delta is None else delta
    sigma, M_max = norm_params.sigma, norm_params.M_max
    if M0 is not None:
        ok, rep = initial_data_check(u0, norm_params.tau0, M0, M_max)
        if not ok:
            raise ValueError(f"initial data violate the norm bound: {rep.value:.6g} > M0={M0:.6g}")

    grid = u0.grid
    # bring the data into the retained band and check the coefficient range before any step
    mask = _mask(grid, config.dealias)
    u = StateU.from_stack(grid, hermitian_part(grid, np.where(mask, u0.stack(), 0.0)), u0.eps, 0.0)
    w = tuple(SpectralField(grid, np.where(mask, c.coeffs, 0.0)) for c in init_w0(u.v, law))

    rec = PairRecord(eps=u.eps)
    state = {"sup": 0.0, "int": 0.0, "t_prev": None, "e_prev": None}

    def diagnose(n: int) -> None:
        tau = radius(min(u.t, norm_params.T), norm_params)
        A_u = analytic_norm(u, tau, sigma, M_max).value
        state["sup"] = max(state["sup"], A_u)
        err = tuple(a - b for a, b in zip(u.v, w))
        A_err = analytic_norm(err, delta, sigma, M_max).value
        if state["t_prev"] is not None:
            state["int"] += 0.5 * (u.t - state["t_prev"]) * (A_err**2 + state["e_prev"] ** 2)
        state["t_prev"], state["e_prev"] = u.t, A_err
        proj_err = tuple(a - b for a, b in zip(leray_project(u.v), w))
        rec.rows.append(
            {
                "step": n,
                "t": u.t,
                "tau": tau,
                "A_tau_u": A_u,
                "M_eps": state["sup"],
                "A_delta_v_err": A_err,
                "A_delta_p": analytic_norm(u.p, delta, sigma, M_max).value,
                "L2_p": u.p.l2_norm(),
                "L2_v": float(np.sqrt(sum(c.l2_norm() ** 2 for c in u.v))),
                "L2_v_err": float(np.sqrt(sum(c.l2_norm() ** 2 for c in err))),
                "L2_proj_v_err": float(np.sqrt(sum(c.l2_norm() ** 2 for c in proj_err))),
                "energy": symmetrizer_energy(u, law),
                "L2t_A_delta_err": math.sqrt(state["int"]),
            }
        )
        if on_diagnostic is not None:
            on_diagnostic(n, u, w)

    n = 0
    T = config.T
    try:
        law.check_range(u.eps * u.p.physical())
        diagnose(n)
        while u.t < T - 1e-14 * max(1.0, T):
            dt = min(cfl_dt(u, law, config), T - u.t)
            u = step(u, law, config, dt)
            w = step_incompressible(w, dt, config.dealias)
            n += 1
            if n % config.diag_every == 0 or u.t >= T - 1e-14 * max(1.0, T):
                diagnose(n)
    except (CoefficientRangeError, SolverDivergedError) as exc:
        exc.partial_record = rec
        raise
    rec.final, rec.final_inc = u, w
    log.debug("eps=%g finished after %d steps", u.eps, n)
    return rec
