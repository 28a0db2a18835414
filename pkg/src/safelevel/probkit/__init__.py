"""Probability kernel: special functions, exact discrete distributions,
and reproducible random streams.

Two interchangeable backends provide the kernels: a compiled Cython core
and a pure-Python fallback.  The compiled core is selected at import when
available; set ``SAFELEVEL_PURE_KERNELS=1`` to force the pure backend.
Both produce bit-identical results, including the samplers' variate
sequences, so reproducibility never depends on which one got picked.
"""
from __future__ import annotations

import os

from .streams import RandomStream

if os.environ.get("SAFELEVEL_PURE_KERNELS"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _pykernels as _impl

BACKEND: str = _impl.BACKEND

log_gamma = _impl.log_gamma
reg_inc_beta = _impl.reg_inc_beta
binom_pmf = _impl.binom_pmf
binom_upper_tail = _impl.binom_upper_tail
binom_lower_tail = _impl.binom_lower_tail
poisson_pmf = _impl.poisson_pmf
sample_poisson = _impl.sample_poisson
sample_binomial = _impl.sample_binomial


def backend_name() -> str:
    """Name of the kernel backend selected at import ('cython' or 'python')."""
    return BACKEND


__all__ = [
    "BACKEND",
    "RandomStream",
    "backend_name",
    "binom_lower_tail",
    "binom_pmf",
    "binom_upper_tail",
    "log_gamma",
    "poisson_pmf",
    "reg_inc_beta",
    "sample_binomial",
    "sample_poisson",
]
