"""Shared helpers: exact rational oracles the float kernels are checked against."""
from fractions import Fraction
from math import comb
from pathlib import Path

DATA_DIR = Path(__file__).parent / "data"


def exact_binom_pmf(k: int, n: int, p: Fraction) -> Fraction:
    return comb(n, k) * p**k * (1 - p) ** (n - k)


def exact_upper_tail(k: int, n: int, p: Fraction) -> Fraction:
    """P(X >= k), inclusive, as an exact rational."""
    return sum(exact_binom_pmf(j, n, p) for j in range(k, n + 1))


def exact_lower_tail(k: int, n: int, p: Fraction) -> Fraction:
    """P(X <= k), inclusive, as an exact rational."""
    return sum(exact_binom_pmf(j, n, p) for j in range(0, k + 1))
