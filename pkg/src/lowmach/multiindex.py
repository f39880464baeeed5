"""Multi-index arithmetic, the graded order on N_0^d, and Faa di Bruno partition sets.

Multi-indices are plain tuples of non-negative ints.  Everything here is exact
integer arithmetic.
"""

from __future__ import annotations

import itertools
from math import factorial, prod
from typing import Iterable, Iterator, NamedTuple, Sequence

MultiIndex = tuple[int, ...]


class PartitionTuple(NamedTuple):
    """One element (k_1..k_s; lambda_1..lambda_s) of a partition set P_s(i, beta)."""

    ks: tuple[int, ...]
    lambdas: tuple[MultiIndex, ...]

    @property
    def s(self) -> int:
        return len(self.ks)


def as_multiindex(alpha: Iterable[int]) -> MultiIndex:
    alpha = tuple(int(a) for a in alpha)
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index components must be non-negative: {alpha}")
    return alpha


def order(alpha: Sequence[int]) -> int:
    return sum(alpha)


def order_key(alpha: Sequence[int]) -> tuple:
    """Sort key realising the linear order: total degree first, then lexicographic."""
    return (sum(alpha), tuple(alpha))


def _check_dims(alpha: Sequence[int], beta: Sequence[int]) -> None:
    if len(alpha) != len(beta):
        raise ValueError(f"dimension mismatch: {tuple(alpha)} vs {tuple(beta)}")


def order_lt(alpha: Sequence[int], beta: Sequence[int]) -> bool:
    """Return True iff ``alpha`` strictly precedes ``beta``.

    ``alpha`` precedes ``beta`` when it has lower total degree, or equal degree
    and the first differing component is smaller.
    """
    _check_dims(alpha, beta)
    return order_key(alpha) < order_key(beta)


def add(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    _check_dims(alpha, beta)
    return tuple(a + b for a, b in zip(alpha, beta))


def sub(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    _check_dims(alpha, beta)
    out = tuple(a - b for a, b in zip(alpha, beta))
    if any(c < 0 for c in out):
        raise ValueError(f"{tuple(beta)} is not <= {tuple(alpha)}")
    return out


def scale(k: int, alpha: Sequence[int]) -> MultiIndex:
    return tuple(k * a for a in alpha)


def leq(beta: Sequence[int], alpha: Sequence[int]) -> bool:
    """Componentwise partial order beta <= alpha."""
    _check_dims(alpha, beta)
    return all(b <= a for a, b in zip(alpha, beta))


def mi_factorial(alpha: Sequence[int]) -> int:
    return prod(factorial(a) for a in alpha)


def multinomial(alpha: Sequence[int], parts: Sequence[Sequence[int]]) -> int:
    """alpha! / prod(part!) for parts summing to alpha componentwise."""
    total = tuple(0 for _ in alpha)
    for part in parts:
        _check_dims(alpha, part)
        if any(c < 0 for c in part):
            raise ValueError(f"negative component in part {tuple(part)}")
        total = add(total, part)
    if total != tuple(alpha):
        raise ValueError(f"parts sum to {total}, expected {tuple(alpha)}")
    den = prod(mi_factorial(part) for part in parts)
    return mi_factorial(alpha) // den


def binom(alpha: Sequence[int], beta: Sequence[int]) -> int:
    """Multi-index binomial coefficient, the Leibniz-rule weight."""
    return multinomial(alpha, [beta, sub(alpha, beta)])


def scalar_multinomial(n: int, parts: Sequence[int]) -> int:
    if sum(parts) != n or any(p < 0 for p in parts):
        raise ValueError(f"parts {tuple(parts)} do not sum to {n}")
    return factorial(n) // prod(factorial(p) for p in parts)


def indices_of_order(m: int, d: int) -> Iterator[MultiIndex]:
    """All alpha in N_0^d with |alpha| = m, increasing in the linear order."""
    if d == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in indices_of_order(m - first, d - 1):
            yield (first,) + rest


def indices_up_to(m: int, d: int) -> Iterator[MultiIndex]:
    for k in range(m + 1):
        yield from indices_of_order(k, d)


def indices_below(beta: Sequence[int]) -> list[MultiIndex]:
    """All lambda <= beta componentwise, sorted by the linear order."""
    out = [tuple(c) for c in itertools.product(*(range(b + 1) for b in beta))]
    out.sort(key=order_key)
    return out


def enumerate_partitions(i: int, beta: Sequence[int]) -> dict[int, list[PartitionTuple]]:
    """Enumerate P_s(i, beta) for every s in 1..|beta|.

    Returns a dict keyed by s.  Within each s, tuples are sorted by their
    lambda sequence under the linear order, ties broken by the multiplicities.
    Uses depth-first descent over lambda in increasing order, pruning on the
    remaining multiplicity budget and the remaining multi-index.
    """
    beta = as_multiindex(beta)
    n = sum(beta)
    if n == 0:
        raise ValueError("beta must have order >= 1")
    if i < 1:
        raise ValueError(f"i must be a positive integer, got {i}")
    result: dict[int, list[PartitionTuple]] = {s: [] for s in range(1, n + 1)}
    if i > n:
        return result

    candidates = [lam for lam in indices_below(beta) if sum(lam) > 0]
    ks: list[int] = []
    lams: list[MultiIndex] = []

    def descend(start: int, rem_i: int, rem_beta: MultiIndex) -> None:
        rem_n = sum(rem_beta)
        if rem_i == 0:
            if rem_n == 0:
                result[len(ks)].append(PartitionTuple(tuple(ks), tuple(lams)))
            return
        # each remaining lambda has order >= 1
        if rem_i > rem_n:
            return
        for idx in range(start, len(candidates)):
            lam = candidates[idx]
            lam_n = sum(lam)
            if lam_n > rem_n:
                break
            if not leq(lam, rem_beta):
                continue
            k = 1
            while k <= rem_i and leq(scale(k, lam), rem_beta):
                ks.append(k)
                lams.append(lam)
                descend(idx + 1, rem_i - k, sub(rem_beta, scale(k, lam)))
                ks.pop()
                lams.pop()
                k += 1

    descend(0, i, beta)
    for s in result:
        result[s].sort(key=lambda t: ([order_key(lam) for lam in t.lambdas], t.ks))
    return result


def iter_partitions(i: int, beta: Sequence[int]) -> Iterator[PartitionTuple]:
    for tuples in enumerate_partitions(i, beta).values():
        yield from tuples


def validate_partition(t: PartitionTuple, i: int, beta: Sequence[int]) -> None:
    """Raise ValueError unless ``t`` satisfies the defining constraints of P_s(i, beta)."""
    beta = tuple(beta)
    if len(t.ks) != len(t.lambdas) or not t.ks:
        raise ValueError(f"malformed tuple {t}")
    if any(k < 1 for k in t.ks):
        raise ValueError(f"multiplicities must be positive: {t.ks}")
    zero = tuple(0 for _ in beta)
    chain = (zero,) + tuple(t.lambdas)
    for a, b in zip(chain, chain[1:]):
        if not order_lt(a, b):
            raise ValueError(f"lambdas not strictly increasing: {t.lambdas}")
    if sum(t.ks) != i:
        raise ValueError(f"sum of multiplicities {sum(t.ks)} != {i}")
    total = zero
    for k, lam in zip(t.ks, t.lambdas):
        total = add(total, scale(k, lam))
    if total != beta:
        raise ValueError(f"weighted sum {total} != {beta}")
