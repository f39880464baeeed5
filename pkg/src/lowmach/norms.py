"""Analytic, Gevrey and dissipative norms of spectral fields, and the radius schedule.

    ||u||_A(tau) = sum_m sum_{|alpha|=m} tau^m / ((m-3)!)^sigma * ||d^alpha u||_{L^2}

with n! = 1 for negative n.  sigma = 1 is the analytic norm.  For a state the
pressure and velocity components are stacked into one L^2 norm per alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .multiindex import indices_of_order
from .spectral import TWO_PI, SpectralField, StateU, TorusGrid

Fieldish = Union[StateU, SpectralField, Sequence[SpectralField]]


@dataclass(frozen=True)
class NormParams:
    tau0: float
    K: float = 1.0
    sigma: float = 1.0
    M_max: int = 30
    T: float | None = None

    def __post_init__(self):
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.sigma < 1:
            raise ValueError("sigma must be >= 1")
        if self.M_max < 4:
            raise ValueError("M_max must be >= 4")
        horizon = self.tau0 / (2 * self.K)
        if self.T is None:
            object.__setattr__(self, "T", horizon)
        elif self.T < 0 or self.T > horizon * (1 + 1e-12):
            raise ValueError(f"T={self.T} outside [0, tau0/(2K)] = [0, {horizon}]")


@dataclass(frozen=True)
class NormReport:
    value: float
    tail_bound: float
    per_m: tuple[float, ...]


def radius(t: float, params: NormParams) -> float:
    """tau(t) = tau0 - K t on [0, T]."""
    if t < 0 or t > params.T * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, T={params.T}]")
    return params.tau0 - params.K * t


def _stack(u: Fieldish) -> tuple[TorusGrid, np.ndarray]:
    if isinstance(u, StateU):
        fields = u.fields
    elif isinstance(u, SpectralField):
        fields = (u,)
    else:
        fields = tuple(u)
    grid = fields[0].grid
    for f in fields:
        f._check(fields[0])
    return grid, np.stack([f.coeffs for f in fields])


def power_spectrum(u: Fieldish) -> tuple[TorusGrid, np.ndarray]:
    grid, c = _stack(u)
    return grid, np.sum(np.abs(c) ** 2, axis=0)


def _axis_tables(grid: TorusGrid, M: int) -> np.ndarray:
    """table[a, i] = |k_i|^(2a); derivatives drop the Nyquist index, so zero there for a >= 1."""
    k = grid.k1d.astype(float)
    a = np.arange(M + 1)[:, None]
    table = np.abs(k)[None, :] ** (2 * a)
    table[1:, grid.N // 2] = 0.0
    return table


def alpha_norms(u: Fieldish, M_max: int) -> list[np.ndarray]:
    """||d^alpha u||_{L^2} for every |alpha| <= M_max, grouped by m.

    Entry m lists the alphas of order m in ``indices_of_order`` order.  The
    squared norms come from contracting the power spectrum with one moment
    table per axis.
    """
    grid, P = power_spectrum(u)
    table = _axis_tables(grid, M_max)
    W = P
    for _ in range(grid.d):
        # contract the leading spatial axis, append a moment axis at the end
        W = np.tensordot(W, table, axes=([0], [1]))
    W = np.maximum(W, 0.0) * TWO_PI**grid.d
    out = []
    for m in range(M_max + 1):
        idx = tuple(np.array(list(indices_of_order(m, grid.d))).T)
        out.append(np.sqrt(W[idx]))
    return out


def derivative_norm_sums(u: Fieldish, M_max: int) -> np.ndarray:
    """S_m = sum_{|alpha|=m} ||d^alpha u||_{L^2}, m = 0..M_max."""
    return np.array([a.sum() for a in alpha_norms(u, M_max)])


def moment_sums(u: Fieldish, M_max: int) -> np.ndarray:
    """sum_{|alpha|=m} ||d^alpha u||^2 via per-wavenumber accumulation of sum_alpha k^(2 alpha)."""
    grid, P = power_spectrum(u)
    table = _axis_tables(grid, M_max)
    # h[m] at each k: coefficient of t^m in prod_j sum_a table_j[a] t^a
    h = None
    for j in range(grid.d):
        shp = [M_max + 1] + [1] * grid.d
        shp[1 + j] = grid.N
        s = table.reshape(shp)
        if h is None:
            h = s
            continue
        new = np.zeros(np.broadcast_shapes(h.shape, s.shape))
        for m in range(M_max + 1):
            new[m] = sum(h[a] * s[m - a] for a in range(m + 1))
        h = new
    return TWO_PI**grid.d * np.array([np.sum(h[m] * P) for m in range(M_max + 1)])


def log_weight_factorial(m: int, sigma: float) -> float:
    """log(((m-3)!)^sigma) with n! = 1 for negative n."""
    return sigma * math.lgamma(m - 2) if m >= 3 else 0.0


def _tail(per_m: Sequence[float]) -> float:
    last, prev = per_m[-1], per_m[-2]
    if last == 0:
        return 0.0
    if prev == 0:
        return math.inf
    ratio = last / prev
    if ratio >= 1:
        return math.inf
    return last * ratio / (1 - ratio)


def _report(per_m: list[float]) -> NormReport:
    return NormReport(float(sum(per_m)), _tail(per_m), tuple(per_m))


def analytic_norm(u: Fieldish, tau: float, sigma: float = 1.0, M_max: int = 30) -> NormReport:
    if tau <= 0:
        raise ValueError("tau must be positive")
    S = derivative_norm_sums(u, M_max)
    per_m = []
    for m in range(M_max + 1):
        if S[m] == 0:
            per_m.append(0.0)
            continue
        w = math.exp(m * math.log(tau) - log_weight_factorial(m, sigma))
        per_m.append(float(w * S[m]))
    return _report(per_m)


def dissipative_norm(u: Fieldish, tau: float, sigma: float = 1.0, M_max: int = 30) -> NormReport:
    """sum_{m>=1} m tau^(m-1) / ((m-3)!)^sigma * S_m; per_m[0] is always 0."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    S = derivative_norm_sums(u, M_max)
    per_m = [0.0]
    for m in range(1, M_max + 1):
        if S[m] == 0:
            per_m.append(0.0)
            continue
        w = m * math.exp((m - 1) * math.log(tau) - log_weight_factorial(m, sigma))
        per_m.append(float(w * S[m]))
    return _report(per_m)


def initial_data_check(u0: Fieldish, tau0: float, M0: float, M_max: int = 30) -> tuple[bool, NormReport]:
    """Whether u0 lies in the initial-data class: A(tau0) norm at sigma=1 is at most M0."""
    report = analytic_norm(u0, tau0, 1.0, M_max)
    return report.value <= M0, report


def h3_norm(u: Fieldish) -> float:
    """sum_{|alpha|<=3} ||d^alpha u||_{L^2}."""
    return float(derivative_norm_sums(u, 3).sum())
