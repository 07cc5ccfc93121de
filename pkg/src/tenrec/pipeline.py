"""Method dispatch shared by the CLI and the experiment scripts."""
from __future__ import annotations

import time

import numpy as np

from .nonlocal_trpca import GroupingConfig, nn_trpca
from .solvers import Decomposition, SolverConfig, n_trpca, tnn_trpca

METHODS = ("tnn", "ntrpca", "nntrpca")


def restore(x, method: str, scfg: SolverConfig = SolverConfig(), gcfg: GroupingConfig = GroupingConfig(),
            peak: float = 255.0) -> tuple[Decomposition, float]:
    """Decompose ``x`` (intensities in ``[0, peak]``) and return it on the original scale.

    The solvers run on ``x / peak``: the log-norm weights depend on the
    absolute size of the singular values, and the default lambda, theta and
    tolerance are calibrated for unit-range data. Returns the decomposition
    and the wall time in seconds.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    unit = np.asarray(x, dtype=np.float64) / peak
    start = time.perf_counter()
    if method == "tnn":
        dec = tnn_trpca(unit, scfg)
    elif method == "ntrpca":
        dec = n_trpca(unit, scfg)
    else:
        dec = nn_trpca(unit, gcfg, scfg)
    elapsed = time.perf_counter() - start
    return Decomposition(dec.low_rank * peak, dec.sparse * peak, dec.report), elapsed
