"""Higher-order chain rule for h(g(x)) and composition of formal power series.

All arithmetic is exact (``fractions.Fraction``).  ``oracle_derivative`` is an
independent route that expands the composition as a polynomial and never
touches the partition machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Mapping, Sequence, Union

from .multiindex import (
    MultiIndex,
    as_multiindex,
    indices_below,
    indices_up_to,
    iter_partitions,
    leq,
    mi_factorial,
    scalar_multinomial,
    sub,
)


class TruncationError(ValueError):
    """A truncated series was asked for a coefficient it does not carry."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Poly:
    """Sparse multivariate polynomial with rational coefficients."""

    d: int
    coeffs: Mapping[MultiIndex, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for alpha, c in self.coeffs.items():
            alpha = as_multiindex(alpha)
            if len(alpha) != self.d:
                raise ValueError(f"exponent {alpha} has wrong dimension for d={self.d}")
            c = _frac(c)
            if c != 0:
                clean[alpha] = clean.get(alpha, Fraction(0)) + c
        object.__setattr__(self, "coeffs", {a: c for a, c in clean.items() if c != 0})

    @classmethod
    def constant(cls, c, d: int) -> "Poly":
        return cls(d, {(0,) * d: c})

    @classmethod
    def variable(cls, j: int, d: int) -> "Poly":
        e = [0] * d
        e[j] = 1
        return cls(d, {tuple(e): 1})

    @classmethod
    def univariate(cls, coeffs: Sequence) -> "Poly":
        """Build h(y) = sum_n coeffs[n] y^n."""
        return cls(1, {(n,): c for n, c in enumerate(coeffs)})

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.coeffs), default=0)

    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.d != self.d:
                raise ValueError("dimension mismatch")
            return other
        return Poly.constant(other, self.d)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, Fraction(0)) + c
        return Poly(self.d, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.d, {a: -c for a, c in self.coeffs.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __mul__(self, other) -> "Poly":
        other = self._coerce(other)
        out: dict[MultiIndex, Fraction] = {}
        for a, ca in self.coeffs.items():
            for b, cb in other.coeffs.items():
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, Fraction(0)) + ca * cb
        return Poly(self.d, out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power")
        result = Poly.constant(1, self.d)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def truncate(self, n: int) -> "Poly":
        return Poly(self.d, {a: c for a, c in self.coeffs.items() if sum(a) <= n})

    def derivative(self, beta: Sequence[int]) -> "Poly":
        beta = as_multiindex(beta)
        out = {}
        for a, c in self.coeffs.items():
            if not leq(beta, a):
                continue
            falling = 1
            for aj, bj in zip(a, beta):
                falling *= factorial(aj) // factorial(aj - bj)
            out[sub(a, beta)] = c * falling
        return Poly(self.d, out)

    def __call__(self, x: Sequence) -> Fraction:
        x = [_frac(v) for v in x]
        if len(x) != self.d:
            raise ValueError("point has wrong dimension")
        total = Fraction(0)
        for a, c in self.coeffs.items():
            term = c
            for xj, aj in zip(x, a):
                term *= xj**aj
            total += term
        return total


@dataclass(frozen=True)
class PowerSeries1:
    """phi(x) = sum_{n<=N} a_n x^n with exact coefficients, known up to order N."""

    coeffs: tuple

    def __post_init__(self):
        if not self.coeffs:
            raise ValueError("need at least a_0")
        object.__setattr__(self, "coeffs", tuple(_frac(c) for c in self.coeffs))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, n: int) -> Fraction:
        if n > self.order:
            raise TruncationError(f"coefficient a_{n} requested but series truncated at order {self.order}")
        return self.coeffs[n]

    def as_poly(self) -> Poly:
        return Poly.univariate(self.coeffs)


@dataclass(frozen=True)
class PowerSeries3:
    """Multivariate series sum_beta c_beta x^beta, known for |beta| <= order."""

    d: int
    order: int
    coeffs: Mapping[MultiIndex, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for beta, c in self.coeffs.items():
            beta = as_multiindex(beta)
            if len(beta) != self.d:
                raise ValueError(f"index {beta} has wrong dimension for d={self.d}")
            if sum(beta) > self.order:
                raise ValueError(f"index {beta} beyond truncation order {self.order}")
            c = _frac(c)
            if c != 0:
                clean[beta] = c
        object.__setattr__(self, "coeffs", clean)

    def coeff(self, beta: Sequence[int]) -> Fraction:
        beta = tuple(beta)
        if sum(beta) > self.order:
            raise TruncationError(f"coefficient {beta} beyond truncation order {self.order}")
        return self.coeffs.get(beta, Fraction(0))

    @property
    def constant_term(self) -> Fraction:
        return self.coeffs.get((0,) * self.d, Fraction(0))

    def as_poly(self) -> Poly:
        return Poly(self.d, self.coeffs)

    def items(self):
        """(beta, c_beta) for every |beta| <= order in the linear order, zeros included."""
        for beta in indices_up_to(self.order, self.d):
            yield beta, self.coeffs.get(beta, Fraction(0))


Univariate = Union[Poly, PowerSeries1]


def _outer_derivatives(h: Univariate, y0: Fraction, n: int) -> list[Fraction]:
    """[h^{(i)}(y0) for i = 0..n]."""
    if isinstance(h, PowerSeries1):
        if y0 != 0:
            raise TruncationError(
                "a truncated series only determines derivatives at its centre 0; "
                f"inner function evaluates to {y0}"
            )
        if h.order < n:
            raise TruncationError(f"need derivatives up to order {n}, series truncated at {h.order}")
        return [factorial(i) * h.coeffs[i] for i in range(n + 1)]
    if h.d != 1:
        raise ValueError("outer function must be univariate")
    return [h.derivative((i,))((y0,)) for i in range(n + 1)]


def fdb_derivative(h: Univariate, g: Poly, x0: Sequence, beta: Sequence[int]) -> Fraction:
    """Exact value of d^beta (h o g) at x0 by the multivariate Faa di Bruno sum."""
    beta = as_multiindex(beta)
    if len(beta) != g.d:
        raise ValueError("beta dimension does not match g")
    n = sum(beta)
    if n < 1:
        raise ValueError("beta must have order >= 1")
    y0 = g(x0)
    hd = _outer_derivatives(h, y0, n)
    # derivatives of g are shared across many partition tuples
    dg = {lam: g.derivative(lam)(x0) for lam in indices_below(beta)}
    beta_fact = mi_factorial(beta)

    total = Fraction(0)
    for i in range(1, n + 1):
        if hd[i] == 0:
            continue
        inner = Fraction(0)
        for t in iter_partitions(i, beta):
            term = Fraction(beta_fact)
            for k, lam in zip(t.ks, t.lambdas):
                term *= dg[lam] ** k / (factorial(k) * mi_factorial(lam) ** k)
            inner += term
        total += hd[i] * inner
    return total


def oracle_derivative(h: Poly, g: Poly, x0: Sequence, beta: Sequence[int]) -> Fraction:
    """d^beta (h o g)(x0) by explicit expansion of h(g(x)) and term-wise differentiation."""
    if h.d != 1:
        raise ValueError("outer function must be univariate")
    composed = Poly.constant(0, g.d)
    power = Poly.constant(1, g.d)
    for n in range(h.degree + 1):
        c = h.coeffs.get((n,), Fraction(0))
        if c:
            composed = composed + power * c
        power = power * g
    return composed.derivative(beta)(x0)


def series_compose(phi: PowerSeries1, psi: PowerSeries3, N: int) -> PowerSeries3:
    """Coefficients c_beta, |beta| <= N, of phi(psi(x)) for psi with zero constant term."""
    if psi.constant_term != 0:
        raise ValueError("inner series must have zero constant term")
    if N > phi.order:
        raise TruncationError(f"outer series known to order {phi.order}, requested {N}")
    if N > psi.order:
        raise TruncationError(f"inner series known to order {psi.order}, requested {N}")

    d = psi.d
    out = {(0,) * d: phi.coeff(0)}
    for beta in indices_up_to(N, d):
        n = sum(beta)
        if n == 0:
            continue
        c = Fraction(0)
        for i in range(1, n + 1):
            a_i = phi.coeff(i)
            if a_i == 0:
                continue
            for t in iter_partitions(i, beta):
                term = Fraction(scalar_multinomial(i, t.ks)) * a_i
                for k, lam in zip(t.ks, t.lambdas):
                    term *= psi.coeff(lam) ** k
                    if term == 0:
                        break
                c += term
        out[beta] = c
    return PowerSeries3(d, N, out)
