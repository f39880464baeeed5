"""Real fields on the periodic torus [0, 2pi)^d stored as Fourier coefficients.

Normalisation: u(x) = sum_k u_hat(k) exp(i k.x), so that
||u||_{L^2}^2 = (2 pi)^d sum_k |u_hat(k)|^2.  Coefficients are kept in numpy FFT
index order; the Nyquist index carries wavenumber +N/2.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TorusGrid:
    d: int
    N: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"d must be 2 or 3, got {self.d}")
        if self.N < 8 or self.N % 2:
            raise ValueError(f"N must be even and >= 8, got {self.N}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def dx(self) -> float:
        return TWO_PI / self.N

    @cached_property
    def k1d(self) -> np.ndarray:
        """Integer wavenumbers in FFT order, Nyquist mapped to +N/2."""
        k = np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(np.int64)
        k[self.N // 2] = self.N // 2
        return k

    @cached_property
    def k(self) -> tuple[np.ndarray, ...]:
        """Broadcastable wavenumber arrays, one per axis."""
        out = []
        for j in range(self.d):
            shp = [1] * self.d
            shp[j] = self.N
            out.append(self.k1d.astype(float).reshape(shp))
        return tuple(out)

    @cached_property
    def ik(self) -> tuple[np.ndarray, ...]:
        """First-derivative multipliers i*k_j with the Nyquist mode zeroed."""
        out = []
        for kj in self.k:
            m = 1j * kj.copy()
            m[np.abs(kj) == self.N // 2] = 0.0
            out.append(m)
        return tuple(out)

    @cached_property
    def ksq(self) -> np.ndarray:
        return sum(kj**2 for kj in self.k) * np.ones(self.shape)

    @property
    def kmax_dealiased(self) -> int:
        # largest K with 3K < N: sums of two retained modes never alias back into the band
        return (self.N - 1) // 3

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        keep = np.ones(self.shape, dtype=bool)
        for kj in self.k:
            keep = keep & (np.abs(kj) <= self.kmax_dealiased)
        return keep

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        """Physical grid coordinates (indexing='ij')."""
        x1 = np.arange(self.N) * self.dx
        return tuple(np.meshgrid(*([x1] * self.d), indexing="ij"))

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        return self.to_physical_complex(coeffs).real

    def to_physical_complex(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(coeffs, axes=self._axes(coeffs)) * self.N**self.d

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values, axes=self._axes(values)) / self.N**self.d

    def _axes(self, arr: np.ndarray) -> tuple[int, ...]:
        return tuple(range(arr.ndim - self.d, arr.ndim))


def hermitian_part(grid: TorusGrid, coeffs: np.ndarray) -> np.ndarray:
    """Project coefficients (trailing d axes) onto the spectra of real fields."""
    axes = grid._axes(coeffs)
    flipped = np.conj(np.roll(np.flip(coeffs, axis=axes), shift=1, axis=axes))
    return 0.5 * (coeffs + flipped)


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: TorusGrid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_physical(cls, grid: TorusGrid, values: np.ndarray) -> "SpectralField":
        return cls(grid, grid.to_spectral(np.asarray(values, dtype=float)))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def mode(cls, grid: TorusGrid, k: Sequence[int], amplitude: complex = 1.0) -> "SpectralField":
        """The single complex exponential amplitude * exp(i k.x) (not a real field unless k = 0)."""
        c = np.zeros(grid.shape, dtype=complex)
        c[tuple(int(kj) % grid.N for kj in k)] = amplitude
        return cls(grid, c)

    def physical(self) -> np.ndarray:
        return self.grid.to_physical(self.coeffs)

    def l2_norm(self) -> float:
        return float((TWO_PI ** (self.grid.d / 2)) * np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(hermitian_part(self.grid, self.coeffs), self.coeffs, rtol=0, atol=atol))

    def _check(self, other: "SpectralField") -> None:
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, c: float) -> "SpectralField":
        if isinstance(c, SpectralField):
            raise TypeError("use multiply_dealiased for products of fields")
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__


VectorField = tuple[SpectralField, ...]


def l2_inner(f: SpectralField, g: SpectralField) -> float:
    f._check(g)
    return float(TWO_PI**f.grid.d * np.real(np.vdot(f.coeffs, g.coeffs)))


def vector_l2_norm(vs: Sequence[SpectralField]) -> float:
    return float(np.sqrt(sum(v.l2_norm() ** 2 for v in vs)))


def derivative_multiplier(grid: TorusGrid, alpha: Sequence[int]) -> np.ndarray:
    """(i k)^alpha, with the Nyquist plane of every differentiated axis zeroed.

    Zeroing on any derivative (not only odd ones) keeps d^a d^b = d^(a+b).
    """
    if len(alpha) != grid.d:
        raise ValueError(f"multi-index {tuple(alpha)} does not match d={grid.d}")
    real = np.ones(grid.shape)
    for kj, aj in zip(grid.k, alpha):
        if aj == 0:
            continue
        real = real * np.where(np.abs(kj) == grid.N // 2, 0.0, kj**aj)
    return (1j ** (sum(alpha) % 4)) * real


def derivative(f: SpectralField, alpha: Sequence[int]) -> SpectralField:
    return SpectralField(f.grid, derivative_multiplier(f.grid, alpha) * f.coeffs)


def dealias(f: SpectralField) -> SpectralField:
    """Zero every mode with some |k_j| > N/3 (strictly: |k_j| > (N-1)//3)."""
    return SpectralField(f.grid, np.where(f.grid.dealias_mask, f.coeffs, 0.0))


def multiply_dealiased(f: SpectralField, g: SpectralField) -> SpectralField:
    """Product of two fields under the 2/3 rule.

    Both factors are truncated to |k_j| <= N/3 before the physical-space
    product and the result is truncated again, so the retained band equals the
    exact convolution of the truncated factors.
    """
    f._check(g)
    grid = f.grid
    mask = grid.dealias_mask
    fp = grid.to_physical_complex(np.where(mask, f.coeffs, 0.0))
    gp = grid.to_physical_complex(np.where(mask, g.coeffs, 0.0))
    return SpectralField(grid, np.where(mask, grid.to_spectral(fp * gp), 0.0))


def gradient(f: SpectralField) -> VectorField:
    return tuple(SpectralField(f.grid, m * f.coeffs) for m in f.grid.ik)


def divergence(vs: Sequence[SpectralField]) -> SpectralField:
    grid = vs[0].grid
    if len(vs) != grid.d:
        raise ValueError("vector field needs d components")
    return SpectralField(grid, sum(m * v.coeffs for m, v in zip(grid.ik, vs)))


def curl(vs: Sequence[SpectralField]) -> VectorField:
    """Curl; in 2D a one-component tuple holding the scalar vorticity."""
    grid = vs[0].grid
    ik = grid.ik
    c = [v.coeffs for v in vs]
    if grid.d == 2:
        return (SpectralField(grid, ik[0] * c[1] - ik[1] * c[0]),)
    return (
        SpectralField(grid, ik[1] * c[2] - ik[2] * c[1]),
        SpectralField(grid, ik[2] * c[0] - ik[0] * c[2]),
        SpectralField(grid, ik[0] * c[1] - ik[1] * c[0]),
    )


def leray_multiply(grid: TorusGrid, c: np.ndarray) -> np.ndarray:
    """Leray projection on a stacked (d, *shape) coefficient array.

    Uses the same Nyquist-truncated wavenumbers as ``divergence`` so the output
    is divergence-free to round-off.  Modes with vanishing truncated |k| are
    left unchanged.
    """
    kt = [np.imag(m) for m in grid.ik]
    ksq = sum(kk**2 for kk in kt) * np.ones(grid.shape)
    safe = np.where(ksq == 0, 1.0, ksq)
    kdotv = sum(kk * c[j] for j, kk in enumerate(kt))
    return np.stack([c[j] - kk * kdotv / safe for j, kk in enumerate(kt)])


def leray_project(vs: Sequence[SpectralField]) -> VectorField:
    """Orthogonal projection onto divergence-free fields; the mean mode is untouched."""
    grid = vs[0].grid
    if len(vs) != grid.d:
        raise ValueError("vector field needs d components")
    c = np.stack([v.coeffs for v in vs])
    return tuple(SpectralField(grid, cj) for cj in leray_multiply(grid, c))


@dataclass(frozen=True, eq=False)
class StateU:
    """u = (p, v): pressure variation and velocity at Mach number eps and time t."""

    p: SpectralField
    v: VectorField
    eps: float = 1.0
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(self.v))
        if len(self.v) != self.p.grid.d:
            raise ValueError("velocity needs d components")
        for vj in self.v:
            self.p._check(vj)

    @property
    def grid(self) -> TorusGrid:
        return self.p.grid

    @property
    def fields(self) -> tuple[SpectralField, ...]:
        return (self.p,) + self.v

    def stack(self) -> np.ndarray:
        return np.stack([f.coeffs for f in self.fields])

    @classmethod
    def from_stack(cls, grid: TorusGrid, arr: np.ndarray, eps: float = 1.0, t: float = 0.0) -> "StateU":
        return cls(SpectralField(grid, arr[0]), tuple(SpectralField(grid, a) for a in arr[1:]), eps, t)

    def l2_norm(self) -> float:
        return vector_l2_norm(self.fields)

    def replace(self, **kw) -> "StateU":
        data = dict(p=self.p, v=self.v, eps=self.eps, t=self.t)
        data.update(kw)
        return StateU(**data)


def apply_L(u: StateU) -> StateU:
    """Acoustic operator: (p, v) -> (div v, grad p)."""
    return u.replace(p=divergence(u.v), v=gradient(u.p))


def state_inner(u: StateU, w: StateU) -> float:
    return sum(l2_inner(a, b) for a, b in zip(u.fields, w.fields))


# --- binary snapshots -------------------------------------------------------

MAGIC = b"MLSF"
SNAPSHOT_VERSION = 1


def _to_wavenumber_order(grid: TorusGrid, c: np.ndarray) -> np.ndarray:
    # FFT order -> ascending wavenumbers -N/2+1 .. N/2 along every axis
    return np.roll(c, grid.N // 2 - 1, axis=tuple(range(grid.d)))


def _from_wavenumber_order(grid: TorusGrid, c: np.ndarray) -> np.ndarray:
    return np.roll(c, -(grid.N // 2 - 1), axis=tuple(range(grid.d)))


def write_snapshot(path: str | Path, fields: Mapping[str, SpectralField]) -> None:
    """Write named fields of one grid in the MLSF binary layout."""
    fields = dict(fields)
    if not fields:
        raise ValueError("no fields to write")
    grid = next(iter(fields.values())).grid
    parts = [MAGIC, struct.pack("<IIII", SNAPSHOT_VERSION, grid.d, grid.N, len(fields))]
    for name, f in fields.items():
        if f.grid != grid:
            raise ValueError("all snapshot fields must share one grid")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        arr = np.ascontiguousarray(_to_wavenumber_order(grid, f.coeffs), dtype="<c16")
        parts.append(arr.tobytes(order="C"))
    Path(path).write_bytes(b"".join(parts))


def read_snapshot(path: str | Path) -> tuple[TorusGrid, dict[str, SpectralField]]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise ValueError(f"{path}: not an MLSF snapshot")
    version, d, N, count = struct.unpack_from("<IIII", data, 4)
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"{path}: unsupported snapshot version {version}")
    grid = TorusGrid(d, N)
    pos = 20
    nbytes = 16 * N**d
    fields = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<I", data, pos)
        pos += 4
        name = data[pos : pos + nlen].decode("utf-8")
        pos += nlen
        if pos + nbytes > len(data):
            raise ValueError(f"{path}: truncated field {name!r}")
        arr = np.frombuffer(data, dtype="<c16", count=N**d, offset=pos).reshape(grid.shape)
        pos += nbytes
        fields[name] = SpectralField(grid, _from_wavenumber_order(grid, arr.astype(complex)))
    if pos != len(data):
        raise ValueError(f"{path}: {len(data) - pos} trailing bytes")
    return grid, fields
