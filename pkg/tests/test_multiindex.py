import random
from fractions import Fraction

import pytest

from oracles import decompositions, leibniz_counts, naive_partitions, random_weights
from lowmach.multiindex import (
    PartitionTuple,
    binom,
    enumerate_partitions,
    indices_below,
    indices_of_order,
    indices_up_to,
    multinomial,
    order_key,
    order_lt,
    scalar_multinomial,
    validate_partition,
)


# --- order -----------------------------------------------------------------


def test_order_examples():
    assert order_lt((0, 1, 0), (1, 0, 0))
    assert not order_lt((1, 0, 0), (1, 0, 0))
    assert order_lt((2, 0, 0), (0, 0, 3))


def test_order_dimension_mismatch():
    with pytest.raises(ValueError):
        order_lt((1, 0), (1, 0, 0))


@pytest.mark.parametrize("d", [2, 3])
def test_order_is_total_exhaustive(d):
    idx = list(indices_up_to(6, d))
    for a in idx:
        for b in idx:
            rel = [order_lt(a, b), order_lt(b, a), a == b]
            assert sum(rel) == 1
    # transitivity on a sample of triples (the full cube is slow in d=3)
    rnd = random.Random(0)
    for _ in range(20000):
        a, b, c = rnd.sample(idx, 3)
        if order_lt(a, b) and order_lt(b, c):
            assert order_lt(a, c)


def test_indices_of_order_count_and_sorted():
    for m in range(7):
        idx = list(indices_of_order(m, 3))
        assert len(idx) == (m + 1) * (m + 2) // 2
        assert idx == sorted(idx, key=order_key)


# --- multinomials ----------------------------------------------------------


def test_multinomial_example():
    # product rule on d1^2 d2 (f g): the (d1 f)(d1 d2 g) term appears twice
    assert multinomial((2, 1, 0), [(1, 0, 0), (1, 1, 0)]) == 2
    assert leibniz_counts((2, 1, 0), 2)[((1, 0, 0), (1, 1, 0))] == 2


def test_multinomial_trivial_and_binom():
    assert multinomial((2, 1, 0), [(2, 1, 0)]) == 1
    assert binom((2, 2, 0), (1, 1, 0)) == 4
    assert scalar_multinomial(4, [2, 2]) == 6


def test_multinomial_rejects_bad_parts():
    with pytest.raises(ValueError):
        multinomial((2, 1, 0), [(1, 0, 0), (0, 1, 0)])


@pytest.mark.parametrize("alpha,nparts", [((2, 1, 0), 2), ((1, 2, 1), 3), ((3, 1), 2), ((2, 2), 3)])
def test_multinomial_matches_leibniz_brute_force(alpha, nparts):
    for parts, count in leibniz_counts(alpha, nparts).items():
        assert multinomial(alpha, parts) == count


def test_binom_bounded_by_scalar_binom_exhaustive():
    for alpha in indices_up_to(8, 3):
        for beta in indices_below(alpha):
            assert binom(alpha, beta) <= scalar_multinomial(sum(alpha), [sum(beta), sum(alpha) - sum(beta)])


def test_multinomial_bounded_by_scalar_multinomial_exhaustive():
    for alpha in indices_up_to(6, 3):
        for k in (1, 2, 3):
            for parts in decompositions(alpha, k):
                assert multinomial(alpha, parts) <= scalar_multinomial(sum(alpha), [sum(p) for p in parts])


@pytest.mark.parametrize("d", [2, 3])
def test_convolution_identity_two_factors(d):
    rnd = random.Random(d)
    for m in range(7):
        for j in range(m + 1):
            x = random_weights(rnd, d, j)
            y = random_weights(rnd, d, m - j)
            lhs = sum(
                x[beta] * y[tuple(a - b for a, b in zip(alpha, beta))]
                for alpha in indices_of_order(m, d)
                for beta in indices_below(alpha)
                if sum(beta) == j
            )
            assert lhs == sum(x.values()) * sum(y.values())


@pytest.mark.parametrize("d", [2, 3])
def test_convolution_identity_three_factors(d):
    rnd = random.Random(10 + d)
    for m in range(7):
        for j in range(m + 1):
            for k in range(j + 1):
                x = random_weights(rnd, d, k)
                y = random_weights(rnd, d, m - j)
                z = random_weights(rnd, d, j - k)
                lhs = Fraction(0)
                for alpha in indices_of_order(m, d):
                    for beta in indices_below(alpha):
                        if sum(beta) != j:
                            continue
                        for omega in indices_below(beta):
                            if sum(omega) != k:
                                continue
                            a_b = tuple(a - b for a, b in zip(alpha, beta))
                            b_w = tuple(b - w for b, w in zip(beta, omega))
                            lhs += x[omega] * y[a_b] * z[b_w]
                assert lhs == sum(x.values()) * sum(y.values()) * sum(z.values())


# --- partitions ------------------------------------------------------------


def test_partition_examples():
    res = enumerate_partitions(1, (2, 1, 0))
    assert res[1] == [PartitionTuple((1,), ((2, 1, 0),))]
    assert all(not res[s] for s in (2, 3))

    res = enumerate_partitions(2, (2, 0, 0))
    assert res[1] == [PartitionTuple((2,), ((1, 0, 0),))]
    assert res[2] == []

    res = enumerate_partitions(2, (0, 2, 0))
    assert [t for ts in res.values() for t in ts] == [PartitionTuple((2,), ((0, 1, 0),))]


def test_partition_errors():
    with pytest.raises(ValueError):
        enumerate_partitions(1, (0, 0, 0))
    assert all(not v for v in enumerate_partitions(4, (1, 1, 0)).values())


@pytest.mark.parametrize("d", [2, 3])
def test_partitions_match_naive_oracle(d):
    for beta in indices_up_to(5, d):
        n = sum(beta)
        if n == 0:
            continue
        for i in range(1, n + 2):
            fast = enumerate_partitions(i, beta)
            slow = naive_partitions(i, beta)
            for s in range(1, n + 1):
                assert sorted(fast[s]) == sorted(slow[s])
                assert len(set(fast[s])) == len(fast[s])
                for t in fast[s]:
                    validate_partition(t, i, beta)


def test_single_multiplicity_partition_is_trivial():
    for beta in indices_up_to(5, 3):
        if sum(beta) == 0:
            continue
        res = enumerate_partitions(1, beta)
        assert res[1] == [PartitionTuple((1,), (beta,))]
        assert all(not res[s] for s in res if s >= 2)


def test_partitions_deterministic_order():
    res = enumerate_partitions(3, (2, 2, 1))
    for ts in res.values():
        keys = [([order_key(lam) for lam in t.lambdas], t.ks) for t in ts]
        assert keys == sorted(keys)


def test_validator_rejects_broken_tuples():
    with pytest.raises(ValueError):
        validate_partition(PartitionTuple((1, 1), ((1, 0, 0), (0, 1, 0))), 2, (1, 1, 0))  # not increasing
    with pytest.raises(ValueError):
        validate_partition(PartitionTuple((2,), ((1, 0, 0),)), 1, (2, 0, 0))


def test_partitions_feasible_at_order_eight():
    total = sum(len(v) for v in enumerate_partitions(4, (3, 3, 2)).values())
    assert total > 0
