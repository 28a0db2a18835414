# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled probability kernels.

Operation-for-operation mirror of ``_pykernels``; see that module for
the algorithm notes.  Both backends must return bit-identical results:
same arithmetic, same order, same uniform-draw consumption.  The build
disables FP contraction so this file and the interpreter agree on every
intermediate rounding.

Samplers read uniforms straight from the stream's bit generator; that
consumes exactly the variates ``RandomStream.next_double`` would.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, fabs, floor, log, log1p, sqrt
from numpy.random cimport bitgen_t

BACKEND = "cython"

cdef double _HALF_LOG_TWO_PI = 0.9189385332046727417803297

# Stirling series: B_2n / (2n (2n-1)) for n = 1..5
cdef double _S0 = 8.33333333333333333333e-2
cdef double _S1 = -2.77777777777777777778e-3
cdef double _S2 = 7.93650793650793650794e-4
cdef double _S3 = -5.95238095238095238095e-4
cdef double _S4 = 8.41750841750841750842e-4

cdef int _CF_MAX_ITER = 5000
cdef double _CF_EPS = 1e-15
cdef double _CF_FPMIN = 1e-300

cdef double _POISSON_INVERSION_CUTOFF = 30.0
cdef long long _BINOM_SEQUENTIAL_MAX_N = 1000


cdef bitgen_t *_bitgen(object stream) except NULL:
    capsule = stream.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef double _log_gamma_c(double x):
    # assumes x > 0 (validated by callers)
    cdef double shift, y, w, corr
    if x == 1.0 or x == 2.0:
        return 0.0
    shift = 0.0
    y = x
    while y < 13.0:
        shift += log(y)
        y += 1.0
    w = 1.0 / (y * y)
    corr = _S4
    corr = corr * w + _S3
    corr = corr * w + _S2
    corr = corr * w + _S1
    corr = corr * w + _S0
    corr /= y
    return (y - 0.5) * log(y) - y + _HALF_LOG_TWO_PI + corr - shift


def log_gamma(double x):
    """Natural log of the gamma function for x > 0."""
    if not x > 0.0:
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    return _log_gamma_c(x)


cdef double _beta_cf(double a, double b, double x) except -1.0:
    cdef double qab = a + b
    cdef double qap = a + 1.0
    cdef double qam = a - 1.0
    cdef double c = 1.0
    cdef double d = 1.0 - qab * x / qap
    cdef double h, aa, delta
    cdef int m, m2
    if fabs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if fabs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if fabs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if fabs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(
        f"incomplete beta continued fraction did not converge for "
        f"a={a!r}, b={b!r}, x={x!r}"
    )


cdef double _reg_inc_beta_c(double a, double b, double x) except -1.0:
    # assumes a, b > 0 and 0 <= x <= 1
    cdef double ln_front, front
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        _log_gamma_c(a + b) - _log_gamma_c(a) - _log_gamma_c(b)
        + a * log(x) + b * log1p(-x)
    )
    front = exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def reg_inc_beta(double a, double b, double x):
    """Regularized incomplete beta function I_x(a, b)."""
    if not a > 0.0 or not b > 0.0:
        raise ValueError(f"reg_inc_beta requires a, b > 0, got a={a!r}, b={b!r}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"reg_inc_beta requires 0 <= x <= 1, got x={x!r}")
    return _reg_inc_beta_c(a, b, x)


cdef double _binom_pmf_c(long long k, long long n, double p):
    # assumes 0 <= k <= n and 0 < p < 1 for the log-space branch
    cdef double ln
    if n == 0:
        return 1.0
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    ln = (
        _log_gamma_c(n + 1.0) - _log_gamma_c(k + 1.0) - _log_gamma_c(n - k + 1.0)
        + k * log(p) + (n - k) * log1p(-p)
    )
    return exp(ln)


def binom_pmf(long long k, long long n, double p):
    """P(X = k) for X ~ Binomial(n, p), evaluated in log space."""
    if n < 0:
        raise ValueError(f"binom_pmf requires n >= 0, got {n!r}")
    if k < 0 or k > n:
        raise ValueError(f"binom_pmf requires 0 <= k <= n, got k={k!r}, n={n!r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    return _binom_pmf_c(k, n, p)


def binom_upper_tail(long long k, long long n, double p):
    """Inclusive upper tail P(X >= k) for X ~ Binomial(n, p)."""
    cdef double total
    cdef long long j
    if n < 0:
        raise ValueError(f"binom_upper_tail requires n >= 0, got {n!r}")
    if k < 0 or k > n + 1:
        raise ValueError(
            f"binom_upper_tail requires 0 <= k <= n+1, got k={k!r}, n={n!r}"
        )
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
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
            total += _binom_pmf_c(j, n, p)
        return min(total, 1.0)
    return _reg_inc_beta_c(<double> k, <double> (n - k + 1), p)


def binom_lower_tail(long long k, long long n, double p):
    """Inclusive lower tail P(X <= k) for X ~ Binomial(n, p)."""
    cdef double total
    cdef long long j
    if n < 0:
        raise ValueError(f"binom_lower_tail requires n >= 0, got {n!r}")
    if k < -1 or k > n:
        raise ValueError(
            f"binom_lower_tail requires -1 <= k <= n, got k={k!r}, n={n!r}"
        )
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
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
            total += _binom_pmf_c(j, n, p)
        return min(total, 1.0)
    return _reg_inc_beta_c(<double> (n - k), <double> (k + 1), 1.0 - p)


def poisson_pmf(long long k, double mean):
    """P(X = k) for X ~ Poisson(mean), evaluated in log space."""
    if k < 0:
        raise ValueError(f"poisson_pmf requires k >= 0, got {k!r}")
    if not mean >= 0.0:
        raise ValueError(f"poisson_pmf requires mean >= 0, got {mean!r}")
    if mean == 0.0:
        return 1.0 if k == 0 else 0.0
    return exp(-mean + k * log(mean) - _log_gamma_c(k + 1.0))


def sample_poisson(double mean, stream):
    """One Poisson(mean) variate drawn from `stream`.

    Inversion by sequential search below mean 30 (exact, one uniform);
    transformed rejection with squeeze (Hormann's PTRS) above.
    """
    cdef bitgen_t *rng
    cdef double u, v, us, pm, s, slam, loglam, b, a, invalpha, vr, lhs
    cdef long long k, cap
    if not mean >= 0.0:
        raise ValueError(f"sample_poisson requires mean >= 0, got {mean!r}")
    if mean == 0.0:
        return 0
    rng = _bitgen(stream)
    if mean < _POISSON_INVERSION_CUTOFF:
        u = rng.next_double(rng.state)
        pm = exp(-mean)
        s = pm
        k = 0
        cap = <long long> (mean + 40.0 * sqrt(mean + 1.0)) + 10
        while u > s and k < cap:
            k += 1
            pm *= mean / k
            s += pm
        return k
    slam = sqrt(mean)
    loglam = log(mean)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = rng.next_double(rng.state) - 0.5
        v = rng.next_double(rng.state)
        us = 0.5 - fabs(u)
        k = <long long> floor((2.0 * a / us + b) * u + mean + 0.43)
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        lhs = log(v) + log(invalpha) - log(a / (us * us) + b)
        if lhs <= k * loglam - mean - _log_gamma_c(k + 1.0):
            return k


def sample_binomial(long long n, double p, stream):
    """One Binomial(n, p) variate drawn from `stream`.

    Inverts the CDF with one uniform: sequential search on the pmf
    recurrence for n <= 1000 (after reflecting p above 1/2 to keep the
    walk short), bisection on the exact lower tail for larger n.
    """
    cdef bitgen_t *rng
    cdef double q, u, pm, s, r
    cdef long long k, lo, hi, mid
    cdef bint flip
    if n < 0:
        raise ValueError(f"sample_binomial requires n >= 0, got {n!r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    if n == 0 or p == 0.0:
        return 0
    if p == 1.0:
        return n
    flip = p > 0.5
    q = 1.0 - p if flip else p
    rng = _bitgen(stream)
    u = rng.next_double(rng.state)
    if n <= _BINOM_SEQUENTIAL_MAX_N:
        pm = exp(n * log1p(-q))
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
