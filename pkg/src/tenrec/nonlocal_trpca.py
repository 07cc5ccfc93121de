"""Nonlocal TRPCA: patch grouping, per-group N-TRPCA and overlap averaging."""
from __future__ import annotations

import enum
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    GroupSizeClamped,
    GroupSolveFailure,
    MaxItersExceeded,
    InvalidConfig,
    NotEnoughPatches,
    NumericalFailure,
    PatchTooLarge,
    ShapeMismatch,
    UncoveredPixels,
)
from .solvers import Decomposition, SolverConfig, SolverReport, solve_batch
from .tensor_core import as_tensor


class GroupingMethod(str, enum.Enum):
    STACK_MODE3 = "mode3"  # p x p x (m * n3)
    UNFOLD_MODE1 = "unfold1"  # m x p^2 x n3


class PatchIndex(NamedTuple):
    top: int
    left: int
    p: int


@dataclass(frozen=True)
class GroupingConfig:
    p: int = 10
    m: int = 100
    stride: Optional[int] = None  # None -> p // 2
    method: GroupingMethod = GroupingMethod.UNFOLD_MODE1
    window: Optional[int] = None  # search radius in pixels; None searches globally

    def __post_init__(self):
        object.__setattr__(self, "method", GroupingMethod(self.method))
        if self.p < 1:
            raise InvalidConfig(f"patch size must be positive, got {self.p}")
        if self.m < 1:
            raise InvalidConfig(f"group size must be positive, got {self.m}")
        if not 1 <= self.step <= self.p:
            raise InvalidConfig(f"stride must lie in [1, p={self.p}], got {self.step}")
        if self.window is not None and self.window < 0:
            raise InvalidConfig(f"window must be nonnegative, got {self.window}")

    @property
    def step(self) -> int:
        return self.stride if self.stride is not None else max(self.p // 2, 1)


@dataclass
class PatchGroup:
    reference: PatchIndex
    members: list
    group_tensor: np.ndarray
    method: GroupingMethod


@dataclass
class NonlocalDecomposition(Decomposition):
    group_reports: list = field(default_factory=list)  # one SolverReport per group, in reference order


def _grid(n: int, p: int, step: int) -> list[int]:
    pos = list(range(0, n - p + 1, step))
    if pos[-1] != n - p:
        pos.append(n - p)
    return pos


def extract_patches(x, cfg: GroupingConfig) -> list[PatchIndex]:
    """Reference grid with the configured stride, clamped so the last row/column of patches sits on the border."""
    n1, n2 = np.shape(x)[:2]
    if cfg.p > min(n1, n2):
        raise PatchTooLarge(f"patch size {cfg.p} exceeds spatial extent {n1}x{n2}")
    return [PatchIndex(t, l, cfg.p) for t in _grid(n1, cfg.p, cfg.step) for l in _grid(n2, cfg.p, cfg.step)]


def patch(x: np.ndarray, idx: PatchIndex) -> np.ndarray:
    return x[idx.top:idx.top + idx.p, idx.left:idx.left + idx.p, :]


def _patch_matrix(x: np.ndarray, candidates: Sequence[PatchIndex]) -> np.ndarray:
    return np.stack([patch(x, c).ravel() for c in candidates])


def _nearest(vectors: np.ndarray, coords: np.ndarray, ref_row: int, m: int,
             window: Optional[int]) -> list[int]:
    d = ((vectors - vectors[ref_row]) ** 2).sum(axis=1)
    if window is not None:
        far = np.abs(coords - coords[ref_row]).max(axis=1) > window
        d = np.where(far, np.inf, d)
    d[ref_row] = -1.0  # reference always first
    order = np.lexsort((coords[:, 1], coords[:, 0], d))
    order = [i for i in order[:m] if np.isfinite(d[i])]
    return order


def find_similar(x, ref: PatchIndex, candidates: Sequence[PatchIndex], m: int,
                 window: Optional[int] = None) -> list[PatchIndex]:
    """The reference followed by its ``m - 1`` nearest candidates in Frobenius distance.

    Distances use the full-depth patch; ties go to the smaller ``(top, left)``.
    """
    x = as_tensor(x, "x")
    candidates = list(candidates)
    if ref not in candidates:
        candidates.append(ref)
    if len(candidates) < m:
        raise NotEnoughPatches(f"need {m} patches, only {len(candidates)} available")
    coords = np.array([(c.top, c.left) for c in candidates])
    rows = _nearest(_patch_matrix(x, candidates), coords, candidates.index(ref), m, window)
    return [candidates[i] for i in rows]


def build_group_tensor(x, members: Sequence[PatchIndex], method) -> np.ndarray:
    """Stack member patches into a group tensor.

    ``mode3`` concatenates the ``p x p x n3`` patches along mode 3;
    ``unfold1`` reshapes each patch to ``p^2 x n3`` (pixel ``(r, c)`` to row
    ``r + c * p``) and stacks them as mode-1 slices.
    """
    method = GroupingMethod(method)
    patches = [patch(x, idx) for idx in members]
    if method is GroupingMethod.STACK_MODE3:
        return np.concatenate(patches, axis=2)
    p, _, n3 = patches[0].shape
    return np.stack([pt.reshape(p * p, n3, order="F") for pt in patches], axis=0)


def split_group_tensor(group: np.ndarray, method, m: int, n3: int) -> list[np.ndarray]:
    """Inverse of :func:`build_group_tensor`: the ``m`` member patches in order."""
    method = GroupingMethod(method)
    if method is GroupingMethod.STACK_MODE3:
        if group.shape[2] != m * n3:
            raise ShapeMismatch(f"group {group.shape} does not hold {m} patches of depth {n3}")
        return [group[:, :, i * n3:(i + 1) * n3] for i in range(m)]
    if group.shape[0] != m or group.shape[2] != n3:
        raise ShapeMismatch(f"group {group.shape} does not hold {m} unfolded patches of depth {n3}")
    p = int(round(np.sqrt(group.shape[1])))
    return [group[i].reshape(p, p, n3, order="F") for i in range(m)]


def aggregate(groups, dims) -> np.ndarray:
    """Average recovered patches back into a ``dims`` tensor.

    ``groups`` is a sequence of ``(PatchGroup, recovered_group_tensor)``;
    contributions are summed in the given order.
    """
    total = np.zeros(dims)
    count = np.zeros(dims[:2])
    n3 = dims[2]
    for grp, recovered in groups:
        recovered = np.asarray(recovered)
        if recovered.shape != grp.group_tensor.shape:
            raise ShapeMismatch(f"recovered {recovered.shape} vs group {grp.group_tensor.shape}")
        for idx, pt in zip(grp.members, split_group_tensor(recovered, grp.method, len(grp.members), n3)):
            total[idx.top:idx.top + idx.p, idx.left:idx.left + idx.p, :] += pt
            count[idx.top:idx.top + idx.p, idx.left:idx.left + idx.p] += 1
    if np.any(count == 0):
        raise UncoveredPixels(f"{int((count == 0).sum())} pixels received no patch estimate")
    return total / count[:, :, None]


def make_groups(x, cfg: GroupingConfig) -> list[PatchGroup]:
    x = as_tensor(x, "x")
    refs = extract_patches(x, cfg)
    m = cfg.m
    if m > len(refs):
        warnings.warn(f"group size {m} clamped to the {len(refs)} available patches", GroupSizeClamped, stacklevel=2)
        m = len(refs)
    vectors = _patch_matrix(x, refs)
    coords = np.array([(r.top, r.left) for r in refs])
    groups = []
    for row, ref in enumerate(refs):
        members = [refs[i] for i in _nearest(vectors, coords, row, m, cfg.window)]
        groups.append(PatchGroup(ref, members, build_group_tensor(x, members, cfg.method), cfg.method))
    return groups


#: Groups solved together in one batched ADMM run (bounds peak memory).
BATCH_SIZE = 64


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("TENREC_THREADS", "1")))
    except ValueError:
        return 1


def solve_groups(groups: Sequence[PatchGroup], scfg: SolverConfig) -> list[Decomposition]:
    """Run N-TRPCA on every group tensor; results come back in group order.

    Same-shape groups are solved in batches, which does not change any
    group's iterates. Batches are spread over ``TENREC_THREADS`` workers.
    """
    buckets: dict[tuple, list[int]] = {}
    for t, g in enumerate(groups):
        buckets.setdefault(g.group_tensor.shape, []).append(t)
    jobs = [idx[i:i + BATCH_SIZE] for idx in buckets.values() for i in range(0, len(idx), BATCH_SIZE)]

    def run(job):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", MaxItersExceeded)
                return solve_batch(np.stack([groups[t].group_tensor for t in job]), scfg, nonconvex=True)
        except NumericalFailure as exc:
            # locate the failing group by solving the batch members one at a time
            for t in job:
                try:
                    solve_batch(groups[t].group_tensor[None], scfg)
                except NumericalFailure as inner:
                    raise GroupSolveFailure(f"group {t} at {groups[t].reference}: {inner}", t,
                                            groups[t].reference) from inner
            raise

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        solved = list(pool.map(run, jobs))
    results: list = [None] * len(groups)
    for job, decs in zip(jobs, solved):
        for t, d in zip(job, decs):
            results[t] = d
    return results


def nn_trpca(x, gcfg: GroupingConfig = GroupingConfig(),
             scfg: SolverConfig = SolverConfig()) -> NonlocalDecomposition:
    """Group similar patches, recover each group with N-TRPCA and average the overlaps.

    Each group uses ``lambda = 1/sqrt(max(n1, n2) n3)`` of its own group tensor
    unless ``scfg.lam`` is set. The sparse part is ``x`` minus the aggregate.
    Groups that hit ``max_iters`` still contribute their last iterate.
    """
    x = as_tensor(x, "x")
    groups = make_groups(x, gcfg)
    results = solve_groups(groups, scfg)
    low = aggregate([(g, d.low_rank) for g, d in zip(groups, results)], x.shape)
    reports = [d.report for d in results]
    if not all(r.converged for r in reports):
        warnings.warn(f"{sum(not r.converged for r in reports)} of {len(reports)} groups did not converge",
                      MaxItersExceeded, stacklevel=2)
    report = SolverReport(
        iterations=max(r.iterations for r in reports),
        converged=all(r.converged for r in reports),
        residual_L=max(r.residual_L for r in reports),
        residual_E=max(r.residual_E for r in reports),
        residual_primal=max(r.residual_primal for r in reports),
        kkt_stationarity=max(r.kkt_stationarity for r in reports),
        kkt_feasibility=max(r.kkt_feasibility for r in reports),
        kkt_sparse=max(r.kkt_sparse for r in reports),
        objective_trace=[r.objective_trace[-1] for r in reports],
        groups=len(reports),
        groups_converged=sum(r.converged for r in reports),
    )
    return NonlocalDecomposition(low, x - low, report, reports)
