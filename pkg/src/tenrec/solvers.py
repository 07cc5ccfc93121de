"""ADMM solvers for tensor robust PCA.

``tnn_trpca`` is the convex baseline (uniform t-SVT); ``n_trpca`` replaces the
tensor nuclear norm with the adjustable log norm and reweights the
singular-value thresholds every iteration from the previous low-rank iterate.
"""
from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidConfig, MaxItersExceeded, ShapeMismatch
from .shrinkage import log_weights, shrink_spectrum, soft_threshold
from .tensor_core import RANK_CLAMP, as_tensor, fourier_svd, real_ifft


def default_lambda(shape) -> float:
    n1, n2, n3 = shape
    return 1.0 / math.sqrt(max(n1, n2) * n3)


@dataclass(frozen=True)
class SolverConfig:
    lam: Optional[float] = None  # None -> 1/sqrt(max(n1, n2) * n3) of the solved tensor
    mu0: float = 1e-3
    mu_max: float = 1e10
    rho: float = 1.1
    epsilon: float = 1e-5
    theta: float = 2.0
    max_iters: int = 500

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise InvalidConfig(f"lambda must be positive, got {self.lam}")
        if not 0 < self.mu0 <= self.mu_max:
            raise InvalidConfig(f"need 0 < mu0 <= mu_max, got {self.mu0}, {self.mu_max}")
        if not self.rho > 1:
            raise InvalidConfig(f"rho must exceed 1, got {self.rho}")
        if not self.epsilon > 0:
            raise InvalidConfig(f"epsilon must be positive, got {self.epsilon}")
        if not self.theta > 0:
            raise InvalidConfig(f"theta must be positive, got {self.theta}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidConfig(f"max_iters must be a positive integer, got {self.max_iters}")

    def lambda_for(self, shape) -> float:
        return self.lam if self.lam is not None else default_lambda(shape)

    def replace(self, **changes) -> "SolverConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class SolverReport:
    iterations: int = 0
    converged: bool = False
    residual_L: float = math.inf
    residual_E: float = math.inf
    residual_primal: float = math.inf
    kkt_stationarity: float = math.nan
    kkt_feasibility: float = math.nan
    kkt_sparse: float = math.nan
    objective_trace: list = field(default_factory=list)
    groups: int = 1  # nonlocal runs: number of group solves summarised here
    groups_converged: int = 0

    def to_dict(self) -> dict:
        return {k: _jsonable(v) for k, v in dataclasses.asdict(self).items()}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class Decomposition:
    low_rank: np.ndarray
    sparse: np.ndarray
    report: SolverReport


@dataclass
class IterationState:
    """Snapshot handed to the solver callback after each iteration."""

    k: int
    mu: float
    weights: np.ndarray  # (r, n3) weights used for this L-update
    low_rank: np.ndarray
    sparse: np.ndarray
    multiplier: np.ndarray
    residuals: tuple


def tnn_trpca(x, cfg: SolverConfig = SolverConfig(), callback: Callable | None = None) -> Decomposition:
    """Convex TRPCA: min ||L||_T + lam ||E||_1 s.t. X = L + E."""
    x = as_tensor(x, "x")
    return _admm(x[None], cfg, nonconvex=False, callback=callback)[0]


def n_trpca(x, cfg: SolverConfig = SolverConfig(), callback: Callable | None = None) -> Decomposition:
    """Nonconvex TRPCA with the adjustable log norm (reweighted t-SVT per iteration)."""
    x = as_tensor(x, "x")
    return _admm(x[None], cfg, nonconvex=True, callback=callback)[0]


def solve_batch(xs, cfg: SolverConfig = SolverConfig(), nonconvex: bool = True) -> list[Decomposition]:
    """Solve many same-shape problems at once; each follows exactly its standalone trajectory.

    ``xs`` has shape ``(B, n1, n2, n3)``. Every problem keeps its own penalty
    schedule and stops when its own residuals pass the tolerance.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 4:
        raise ShapeMismatch(f"batch must be (B, n1, n2, n3), got {xs.shape}")
    for b in range(xs.shape[0]):
        as_tensor(xs[b], f"batch item {b}")
    return _admm(xs, cfg, nonconvex=nonconvex, callback=None)


def _admm(xs: np.ndarray, cfg: SolverConfig, nonconvex: bool, callback) -> list[Decomposition]:
    nb, n1, n2, n3 = xs.shape
    r = min(n1, n2)
    lam = cfg.lambda_for((n1, n2, n3))
    eps = cfg.epsilon

    low = np.zeros_like(xs)
    sparse = np.zeros_like(xs)
    mult = np.zeros_like(xs)
    sv = np.zeros((nb, r, n3))
    mu = np.full(nb, cfg.mu0)
    reports = [SolverReport() for _ in range(nb)]
    active = np.arange(nb)

    for k in range(1, cfg.max_iters + 1):
        a = active
        x, e_old, l_old, p = xs[a], sparse[a], low[a], mult[a]
        m = mu[a][:, None, None, None]
        weights = log_weights(sv[a], cfg.theta) if nonconvex else np.ones((a.size, r, n3))
        q = x - e_old - p / m
        lbar, sv_new = shrink_spectrum(np.fft.fft(q, axis=-1), weights / mu[a][:, None, None])
        l_new = real_ifft(lbar)
        e_new = soft_threshold(x - l_new - p / m, lam / m)
        gap = l_new + e_new - x
        p = p + m * gap

        res_l = np.abs(l_new - l_old).max(axis=(1, 2, 3))
        res_e = np.abs(e_new - e_old).max(axis=(1, 2, 3))
        res_p = np.abs(gap).max(axis=(1, 2, 3))
        rank_term = np.log1p(cfg.theta * sv_new) if nonconvex else sv_new
        objective = rank_term.sum(axis=(1, 2)) / n3 + lam * np.abs(e_new).sum(axis=(1, 2, 3))

        low[a], sparse[a], mult[a], sv[a] = l_new, e_new, p, sv_new
        for t, b in enumerate(a):
            rep = reports[b]
            rep.iterations = k
            rep.residual_L, rep.residual_E, rep.residual_primal = float(res_l[t]), float(res_e[t]), float(res_p[t])
            rep.objective_trace.append(float(objective[t]))

        if callback is not None:
            callback(IterationState(
                k, float(mu[0]), weights[0].copy(), low[0].copy(), sparse[0].copy(), mult[0].copy(),
                (float(res_l[0]), float(res_e[0]), float(res_p[0])),
            ))

        mu[a] = np.minimum(cfg.rho * mu[a], cfg.mu_max)
        done = (res_l <= eps) & (res_e <= eps) & (res_p <= eps)
        for b in a[done]:
            reports[b].converged = True
            reports[b].groups_converged = 1
        active = a[~done]
        if active.size == 0:
            break

    if active.size:
        warnings.warn(
            f"{active.size} of {nb} problem(s) did not converge within {cfg.max_iters} iterations",
            MaxItersExceeded,
            stacklevel=3,
        )
    out = []
    for b in range(nb):
        rep = reports[b]
        theta = cfg.theta if nonconvex else None
        rep.kkt_stationarity = _stationarity(low[b], mult[b], theta)
        rep.kkt_feasibility = float(np.abs(low[b] + sparse[b] - xs[b]).max())
        rep.kkt_sparse = _sparse_violation(sparse[b], mult[b], lam)
        out.append(Decomposition(low[b], sparse[b], rep))
    return out


def _stationarity(low, mult, theta) -> float:
    """Distance from ``-P`` to the (Clarke) subdifferential of the rank surrogate at ``L``, in the inf-norm.

    Per Fourier slice with ``L = U diag(s) V^H`` (``s > 0``) the subdifferential
    is ``U diag(w(s)) V^H + Z`` with ``Z`` supported on the orthogonal
    complements and ``||Z||_2 <= w(0)``. ``theta=None`` uses the tensor
    nuclear norm (unit weights).
    """
    n1, n2, n3 = low.shape
    us, ss, vhs = fourier_svd(np.fft.fft(low, axis=2), full=False)
    pbar = np.fft.fft(mult, axis=2)
    top = max(float(s.max()) for s in ss) if min(n1, n2) else 0.0
    w0 = 1.0 if theta is None else float(theta)
    viol = np.empty(low.shape, dtype=np.complex128)
    for i in range(n3):
        k = int(np.sum(ss[i] > RANK_CLAMP * top)) if top > 0 else 0
        u, s, vh = us[i][:, :k], ss[i][:k], vhs[i][:k]
        w = np.ones_like(s) if theta is None else log_weights(s, theta)
        m = pbar[:, :, i] + (u * w) @ vh
        z = m - u @ (u.conj().T @ m) - (m @ vh.conj().T) @ vh + u @ (u.conj().T @ m @ vh.conj().T) @ vh
        zu, zs, zvh = np.linalg.svd(z, full_matrices=False)
        viol[:, :, i] = m - z + (zu * np.maximum(zs - w0, 0.0)) @ zvh
    return float(np.abs(np.fft.ifft(viol, axis=2)).max())


def kkt_residuals(x, low, sparse, mult, theta: float = 2.0, lam: float | None = None):
    """Violations of the three KKT conditions at ``(L, E, P)``.

    Returns ``(r1, r2, r3)``: stationarity ``||P + grad ||L||_log||_inf``,
    feasibility ``||L + E - X||_inf`` and the sparse inclusion
    ``-P in lam * d||E||_1`` measured entrywise in the inf-norm. The multiplier
    sign follows the update ``P += mu (L + E - X)``.
    """
    x, low, sparse, mult = (as_tensor(t) for t in (x, low, sparse, mult))
    if not (x.shape == low.shape == sparse.shape == mult.shape):
        raise ShapeMismatch(f"shapes differ: {x.shape}, {low.shape}, {sparse.shape}, {mult.shape}")
    if lam is None:
        lam = default_lambda(x.shape)
    r2 = float(np.abs(low + sparse - x).max())
    r3 = _sparse_violation(sparse, mult, lam)
    r1 = _stationarity(low, mult, theta)
    return r1, r2, r3


def _sparse_violation(sparse, mult, lam) -> float:
    viol = np.where(sparse == 0, np.maximum(np.abs(mult) - lam, 0.0), np.abs(mult + lam * np.sign(sparse)))
    return float(viol.max())
