"""Pure-Python probability kernels.

Reference implementation of the kernel core.  The compiled twin in
``_ckernels.pyx`` mirrors every algorithm here operation for operation;
the two must stay bit-identical (same arithmetic, same order, same
uniform-draw consumption), which is why nothing in this module is
vectorised or reordered for speed.

Accuracy notes
--------------
``log_gamma`` shifts the argument above 13 by upward recurrence and
applies the Stirling series there; absolute error stays below 1e-12
wherever float64 can represent the result that finely (|ln gamma| up to
~4e3) and within a few ulps relative beyond.  ``reg_inc_beta`` evaluates
the standard continued fraction with modified Lentz iteration, switching
to the complement at x > (a+1)/(a+b+2) so convergence is uniform over
the domain.
"""
from __future__ import annotations

import math

BACKEND = "python"

_HALF_LOG_TWO_PI = 0.9189385332046727417803297

# Stirling series: B_2n / (2n (2n-1)) for n = 1..5
_STIRLING = (
    8.33333333333333333333e-2,
    -2.77777777777777777778e-3,
    7.93650793650793650794e-4,
    -5.95238095238095238095e-4,
    8.41750841750841750842e-4,
)

_CF_MAX_ITER = 5000
_CF_EPS = 1e-15
_CF_FPMIN = 1e-300

# Poisson sampling: inversion below, transformed rejection above.
_POISSON_INVERSION_CUTOFF = 30.0
# Binomial sampling: sequential CDF search below, bisection on the exact
# CDF above (the sequential start term (1-p)^n stays normal for n <= 1000).
_BINOM_SEQUENTIAL_MAX_N = 1000


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not x > 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    if x == 1.0 or x == 2.0:
        return 0.0
    shift = 0.0
    y = x
    while y < 13.0:
        shift += math.log(y)
        y += 1.0
    w = 1.0 / (y * y)
    corr = _STIRLING[4]
    corr = corr * w + _STIRLING[3]
    corr = corr * w + _STIRLING[2]
    corr = corr * w + _STIRLING[1]
    corr = corr * w + _STIRLING[0]
    corr /= y
    return (y - 0.5) * math.log(y) - y + _HALF_LOG_TWO_PI + corr - shift


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction did not converge for "
        f"a={a!r}, b={b!r}, x={x!r}"
    )


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not a > 0.0 or not b > 0.0:
        raise ValueError(f"reg_inc_beta requires a, b > 0, got a={a!r}, b={b!r}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"reg_inc_beta requires 0 <= x <= 1, got x={x!r}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        log_gamma(a + b) - log_gamma(a) - log_gamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _check_prob(p: float, name: str = "p") -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")


def binom_pmf(k: int, n: int, p: float) -> float:
    """P(X = k) for X ~ Binomial(n, p), evaluated in log space."""
    if n < 0:
        raise ValueError(f"binom_pmf requires n >= 0, got {n!r}")
    if k < 0 or k > n:
        raise ValueError(f"binom_pmf requires 0 <= k <= n, got k={k!r}, n={n!r}")
    _check_prob(p)
    if n == 0:
        return 1.0
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    ln = (
        log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0)
        + k * math.log(p) + (n - k) * math.log1p(-p)
    )
    return math.exp(ln)


def binom_upper_tail(k: int, n: int, p: float) -> float:
    """Inclusive upper tail P(X >= k) for X ~ Binomial(n, p).

    Direct pmf summation up to n = 1000; the incomplete-beta identity
    P(X >= k) = I_p(k, n-k+1) above, so the two routes cross-check each
    other in the mid range.
    """
    if n < 0:
        raise ValueError(f"binom_upper_tail requires n >= 0, got {n!r}")
    if k < 0 or k > n + 1:
        raise ValueError(
            f"binom_upper_tail requires 0 <= k <= n+1, got k={k!r}, n={n!r}"
        )
    _check_prob(p)
    if k == 0:
        return 1.0
    if k == n + 1:
        return 0.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    if n <= _BINOM_SEQUENTIAL_MAX_N:
        total = 0.0
        for j in range(k, n + 1):
            total += binom_pmf(j, n, p)
        return min(total, 1.0)
    return reg_inc_beta(float(k), float(n - k + 1), p)


def binom_lower_tail(k: int, n: int, p: float) -> float:
    """Inclusive lower tail P(X <= k) for X ~ Binomial(n, p)."""
    if n < 0:
        raise ValueError(f"binom_lower_tail requires n >= 0, got {n!r}")
    if k < -1 or k > n:
        raise ValueError(
            f"binom_lower_tail requires -1 <= k <= n, got k={k!r}, n={n!r}"
        )
    _check_prob(p)
    if k == -1:
        return 0.0
    if k == n:
        return 1.0
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 0.0
    if n <= _BINOM_SEQUENTIAL_MAX_N:
        total = 0.0
        for j in range(0, k + 1):
            total += binom_pmf(j, n, p)
        return min(total, 1.0)
    return reg_inc_beta(float(n - k), float(k + 1), 1.0 - p)


def poisson_pmf(k: int, mean: float) -> float:
    """P(X = k) for X ~ Poisson(mean), evaluated in log space."""
    if k < 0:
        raise ValueError(f"poisson_pmf requires k >= 0, got {k!r}")
    if not mean >= 0.0:
        raise ValueError(f"poisson_pmf requires mean >= 0, got {mean!r}")
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-mean + k * math.log(mean) - log_gamma(k + 1.0))


def sample_poisson(mean: float, stream) -> int:
    """One Poisson(mean) variate drawn from `stream`.

    Inversion by sequential search below mean 30 (exact, one uniform);
    transformed rejection with squeeze (Hormann's PTRS) above.
    """
    if not mean >= 0.0:
        raise ValueError(f"sample_poisson requires mean >= 0, got {mean!r}")
    if mean == 0.0:
        return 0
    if mean < _POISSON_INVERSION_CUTOFF:
        u = stream.next_double()
        pm = math.exp(-mean)
        s = pm
        k = 0
        cap = int(mean + 40.0 * math.sqrt(mean + 1.0)) + 10
        while u > s and k < cap:
            k += 1
            pm *= mean / k
            s += pm
        return k
    slam = math.sqrt(mean)
    loglam = math.log(mean)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = stream.next_double() - 0.5
        v = stream.next_double()
        us = 0.5 - abs(u)
        k = int(math.floor((2.0 * a / us + b) * u + mean + 0.43))
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        lhs = math.log(v) + math.log(invalpha) - math.log(a / (us * us) + b)
        if lhs <= k * loglam - mean - log_gamma(k + 1.0):
            return k


def sample_binomial(n: int, p: float, stream) -> int:
    """One Binomial(n, p) variate drawn from `stream`.

    Inverts the CDF with one uniform: sequential search on the pmf
    recurrence for n <= 1000 (after reflecting p above 1/2 to keep the
    walk short), bisection on the exact lower tail for larger n.
    """
    if n < 0:
        raise ValueError(f"sample_binomial requires n >= 0, got {n!r}")
    _check_prob(p)
    if n == 0 or p == 0.0:
        return 0
    if p == 1.0:
        return n
    flip = p > 0.5
    q = 1.0 - p if flip else p
    u = stream.next_double()
    if n <= _BINOM_SEQUENTIAL_MAX_N:
        pm = math.exp(n * math.log1p(-q))
        s = pm
        k = 0
        r = q / (1.0 - q)
        while u > s and k < n:
            k += 1
            pm *= (n - k + 1) * r / k
            s += pm
    else:
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) // 2
            if binom_lower_tail(mid, n, q) >= u:
                hi = mid
            else:
                lo = mid + 1
        k = lo
    return n - k if flip else k
