"""Compute-forward rate regions for multiple-access channels.

Setting CFREGION_THREADS caps the BLAS/OpenMP worker count; it must be set
before the package is first imported.
"""

import os as _os

_threads = _os.environ.get("CFREGION_THREADS")
if _threads:
    if not _threads.isdigit() or int(_threads) < 1:
        raise ValueError("CFREGION_THREADS must be a positive integer")
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ[_var] = _threads

__version__ = "0.1.0"

from .cfcore import (  # noqa: E402
    BudgetExceeded,
    FiniteFieldSpec,
    GaussianSpec,
    IntegerSpec,
    RegionReport,
    SearchBudget,
    fq_embed,
    lmac_region,
    mac_region,
    naga11_rate,
    notch_condition,
    sequential_region,
    simultaneous_Q,
    simultaneous_R,
    single_equation_region,
)
from .estimator import ComputeForwardRegion  # noqa: E402
from .intlab import IntMatrix, smith_normal_form  # noqa: E402
from .region import Polyhedron, RateRegion  # noqa: E402

__all__ = [
    "BudgetExceeded",
    "ComputeForwardRegion",
    "FiniteFieldSpec",
    "GaussianSpec",
    "IntMatrix",
    "IntegerSpec",
    "Polyhedron",
    "RateRegion",
    "RegionReport",
    "SearchBudget",
    "fq_embed",
    "lmac_region",
    "mac_region",
    "naga11_rate",
    "notch_condition",
    "sequential_region",
    "simultaneous_Q",
    "simultaneous_R",
    "single_equation_region",
    "smith_normal_form",
]
