"""Backend selection and weight-evaluation modes shared by the steppers.

Two interchangeable stepper backends exist: a numba-jitted one and a
numpy/python one.  ``CATSIM_BACKEND`` (values ``numba`` or ``numpy``)
picks the default; an explicit ``backend=`` argument wins over the
environment.

Weight modes: the substep weight is max{dist, 1}^(-beta).  For integer
beta up to 8 we evaluate it with plain IEEE arithmetic on the exact
squared distance (divisions and correctly rounded sqrt only), which is
bit-identical across both backends.  Other beta values take the
exp/log route, which is deterministic per backend but may differ
between vectorized and scalar libm by an ulp.
"""

from __future__ import annotations

import logging
import os

log = logging.getLogger("catsim")

BACKENDS = ("numba", "numpy")


def resolve_backend(override: str | None = None) -> str:
    """The backend to use: explicit argument, else env, else numba when available."""
    choice = override or os.environ.get("CATSIM_BACKEND", "")
    if choice:
        if choice not in BACKENDS:
            raise ValueError(f"unknown backend {choice!r}; expected one of {BACKENDS}")
        return choice
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        log.warning("numba not importable; falling back to the numpy backend")
        return "numpy"


def weight_mode(beta: float) -> int:
    """Integer mode code for the stepper weight switch; 0 means the
    general exp/log route."""
    if float(beta) == int(beta) and 1 <= int(beta) <= 8:
        return int(beta)
    return 0
