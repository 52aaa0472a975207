"""Lowest eigenpairs of ``H(lam)`` along a lambda schedule, with branch tracking."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .hamiltonian import SparseHamiltonian, build
from .ising import IsingModel

log = logging.getLogger(__name__)

DENSE_LIMIT = 1024
CLUSTER_TOL = 1e-9
RESIDUAL_TOL = 1e-8
CONTINUITY = 0.5
MAX_BLOCK = 64
MAX_CLUSTER = 2048


class EigensolverError(RuntimeError):
    def __init__(self, message, residuals=None, lam=None):
        super().__init__(message)
        self.residuals = residuals
        self.lam = lam


# ---------------------------------------------------------------------------
# eigensolvers


def dense_eigenpairs(H: SparseHamiltonian, lam: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    k = min(k, H.dimension)
    vals, vecs = scipy.linalg.eigh(H.dense(lam), subset_by_index=[0, k - 1])
    return vals, vecs


def _diagonal_eigenpairs(H: SparseHamiltonian, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact answer at ``lam = 0``: the smallest diagonal entries and their basis vectors."""
    k = min(k, H.dimension)
    idx = np.argsort(H.diagonal, kind="stable")[:k]
    vecs = np.zeros((H.dimension, k))
    vecs[idx, np.arange(k)] = 1.0
    return H.diagonal[idx].astype(np.float64), vecs


def _orthonormalize(W: np.ndarray, V: np.ndarray | None, rng: np.random.Generator) -> np.ndarray:
    """Orthonormal columns spanning ``W`` minus ``span(V)``; rank loss is refilled randomly.

    Column-wise Gram-Schmidt, each projection applied twice. Columns are
    dropped once the whole space is spanned.
    """
    basis = np.zeros((W.shape[0], 0)) if V is None else V
    room = W.shape[0] - basis.shape[1]
    out = np.empty((W.shape[0], max(0, min(W.shape[1], room))))
    for c in range(out.shape[1]):
        w = W[:, c].copy()
        scale = np.linalg.norm(w)
        for _ in range(2):
            w -= basis @ (basis.T @ w)
            w -= out[:, :c] @ (out[:, :c].T @ w)
        nrm = np.linalg.norm(w)
        while nrm <= 1e-10 * max(scale, 1e-300):
            w = rng.standard_normal(W.shape[0])
            scale = np.linalg.norm(w)
            for _ in range(2):
                w -= basis @ (basis.T @ w)
                w -= out[:, :c] @ (out[:, :c].T @ w)
            nrm = np.linalg.norm(w)
        out[:, c] = w / nrm
    return out


def _default_block(H: SparseHamiltonian, k: int) -> int:
    """``k + 2``, widened to hold every diagonal entry tied with the ``k``-th smallest."""
    d = np.sort(H.diagonal)
    kth = d[min(k, d.size) - 1]
    tied = int(np.searchsorted(d, kth + CLUSTER_TOL, side="right"))
    return min(max(k + 2, tied + 2), MAX_BLOCK)


def _cluster_start(H: SparseHamiltonian, lam: float, p: int) -> np.ndarray | None:
    """Ritz vectors of ``H(lam)`` restricted to the basis states at or below the ``p``-th diagonal level.

    When that set is larger than the block, plain basis vectors leave the
    Krylov method to untangle a splitting of order ``lam``; starting from the
    restricted eigenvectors hands it the degenerate-perturbation answer.
    """
    d = H.diagonal
    cut = np.sort(d)[p - 1] + CLUSTER_TOL
    members = np.flatnonzero(d <= cut)
    if members.size <= p or members.size > MAX_CLUSTER:
        return None
    pos = np.full(H.dimension, -1)
    pos[members] = np.arange(members.size)
    M = np.diag(d[members].astype(np.float64))
    rows = np.arange(members.size)
    for q, dq in enumerate(H.delta):
        nb = pos[members ^ (1 << q)]
        hit = nb >= 0
        M[rows[hit], nb[hit]] -= lam * dq
    _, vecs = scipy.linalg.eigh(M, subset_by_index=[0, p - 1])
    start = np.zeros((H.dimension, p))
    start[members] = vecs
    return start


def _start_block(H, lam, p, rng, guess=None, noise=0.1) -> np.ndarray:
    """Orthonormal start: low basis states or the restricted eigenvectors, plus a little noise."""
    dim = H.dimension
    start = noise * rng.standard_normal((dim, p)) / math.sqrt(dim)
    seeded = _cluster_start(H, lam, p)
    if seeded is None:
        low = np.argsort(H.diagonal, kind="stable")[:p]
        start[low, np.arange(p)] += 1.0
    else:
        start += seeded
    if guess is not None:
        g = np.asarray(guess, dtype=np.float64).reshape(dim, -1)[:, :p]
        start[:, : g.shape[1]] = g + 1e-3 * start[:, : g.shape[1]]
    return _orthonormalize(start, None, rng)


def block_lanczos(
    H: SparseHamiltonian,
    lam: float,
    k: int,
    *,
    block: int | None = None,
    krylov_blocks: int = 8,
    tol: float = RESIDUAL_TOL,
    max_restarts: int = 300,
    guess: np.ndarray | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Thick-restart block Lanczos with full reorthogonalisation.

    The block size bounds the multiplicity of any eigenvalue that can be
    resolved. By default it covers the diagonal entries tied with the
    ``k``-th smallest one, and the start block leans on the lowest basis
    states (or on eigenvectors of ``H`` restricted to them), which is where
    the low eigenvectors live at small ``lam``.
    """
    dim = H.dimension
    if lam == 0:
        return _diagonal_eigenpairs(H, k)
    p = min(block or _default_block(H, k), dim)
    rng = np.random.default_rng(seed)
    X = _start_block(H, lam, p, rng, guess, noise=0.1)
    AX = H.matvec(lam, X)
    threshold = tol * max(H.norm_bound(lam), 1.0)
    residuals = None

    for _ in range(max_restarts):
        V_blocks, AV_blocks = [X], [AX]
        width = p
        for _ in range(krylov_blocks - 1):
            room = dim - width
            if room <= 0:
                break
            Q = _orthonormalize(AV_blocks[-1][:, :room], np.hstack(V_blocks), rng)
            V_blocks.append(Q)
            AV_blocks.append(H.matvec(lam, Q))
            width += Q.shape[1]
        V = np.hstack(V_blocks)
        AV = np.hstack(AV_blocks)
        T = V.T @ AV
        theta, S = np.linalg.eigh(0.5 * (T + T.T))
        keep = min(p, theta.size)
        Y = V @ S[:, :keep]
        AY = AV @ S[:, :keep]
        resid = AY - Y * theta[:keep]
        residuals = np.linalg.norm(resid, axis=0)
        if np.all(residuals[:k] <= threshold) or V.shape[1] >= dim:
            return theta[:k], Y[:, :k]
        # restart from the lowest Ritz block; re-orthonormalise against drift
        X, R = np.linalg.qr(Y)
        AX = AY @ np.linalg.inv(R) if np.all(np.abs(np.diag(R)) > 1e-12) else H.matvec(lam, X)
    raise EigensolverError(
        f"block Lanczos did not converge at lambda={lam}: residuals {residuals[:k]} > {threshold:.3g}",
        residuals=residuals,
        lam=lam,
    )


def block_davidson(
    H: SparseHamiltonian,
    lam: float,
    k: int,
    *,
    block: int | None = None,
    max_basis: int | None = None,
    tol: float = RESIDUAL_TOL,
    max_iter: int = 500,
    guess: np.ndarray | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """Block Davidson with the diagonal of ``H`` as preconditioner.

    ``H(lam)`` is diagonally dominant for small ``lam``, and there the
    corrections ``(theta - D)^-1 r`` (with Olsen's projection, so they do not
    just reproduce the Ritz vector) converge in a handful of steps, where a
    Krylov method has to resolve splittings of order ``lam`` against a
    spectral width of order ``m``. The basis is kept fully orthonormal and
    collapses to the current Ritz block when it exceeds ``max_basis``.
    """
    dim = H.dimension
    if lam == 0:
        return _diagonal_eigenpairs(H, k)
    p = min(block or _default_block(H, k), dim)
    max_basis = min(max_basis or max(8 * p, 64), dim)
    rng = np.random.default_rng(seed)
    V = _start_block(H, lam, p, rng, guess, noise=1e-3)
    AV = H.matvec(lam, V)
    threshold = tol * max(H.norm_bound(lam), 1.0)
    diag = H.diagonal[:, None]
    residuals = None

    for _ in range(max_iter):
        T = V.T @ AV
        theta, S = np.linalg.eigh(0.5 * (T + T.T))
        keep = min(p, theta.size)
        X = V @ S[:, :keep]
        AX = AV @ S[:, :keep]
        R = AX - X * theta[:keep]
        residuals = np.linalg.norm(R, axis=0)
        if np.all(residuals[:k] <= threshold) or V.shape[1] >= dim:
            return theta[:k], X[:, :k]
        todo = np.flatnonzero(residuals > threshold)
        denom = theta[todo] - diag
        tiny = np.abs(denom) < 1e-8
        denom[tiny] = np.where(denom[tiny] >= 0, 1e-8, -1e-8)
        MR = R[:, todo] / denom
        MX = X[:, todo] / denom
        eps = np.einsum("ij,ij->j", X[:, todo], MR) / np.einsum("ij,ij->j", X[:, todo], MX)
        correction = MR - MX * eps
        if V.shape[1] + correction.shape[1] > max_basis:
            V = _orthonormalize(X, None, rng)
            AV = H.matvec(lam, V)
        Q = _orthonormalize(correction, V, rng)
        V = np.hstack([V, Q])
        AV = np.hstack([AV, H.matvec(lam, Q)])
    raise EigensolverError(
        f"block Davidson did not converge at lambda={lam}: residuals {residuals[:k]} > {threshold:.3g}",
        residuals=residuals,
        lam=lam,
    )


def lowest_eigenpairs(
    H: SparseHamiltonian,
    lam: float,
    k: int,
    method: Literal["auto", "dense", "davidson", "lanczos"] = "auto",
    guess: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """``k`` algebraically smallest eigenvalues (ascending) and orthonormal eigenvectors.

    ``auto`` solves densely up to ``DENSE_LIMIT`` and uses block Davidson above.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if method == "auto":
        method = "dense" if H.dimension <= DENSE_LIMIT else "davidson"
    if method == "dense" or k >= H.dimension:
        return dense_eigenpairs(H, lam, k)
    if method == "davidson":
        return block_davidson(H, lam, k, guess=guess)
    if method == "lanczos":
        return block_lanczos(H, lam, k, guess=guess)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# sweep


@dataclass(frozen=True)
class SweepSchedule:
    lambda_max: float
    points: int = 200
    spacing: Literal["geometric", "linear"] = "geometric"
    k: int = 4
    min_ratio: float = 1e-6
    refine: int = 12

    def __post_init__(self):
        if not self.lambda_max > 0:
            raise ValueError("lambda_max must be positive")
        if self.points < 2:
            raise ValueError("points must be at least 2")
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.spacing not in ("geometric", "linear"):
            raise ValueError(f"unknown spacing {self.spacing!r}")

    @classmethod
    def default_for(cls, a: int, b, m: int, **kw) -> "SweepSchedule":
        """``lambda_max = 4 a b m``."""
        return cls(lambda_max=4.0 * a * float(b) * max(m, 1), **kw)

    def grid(self) -> np.ndarray:
        """Strictly decreasing lambda values ending at 0."""
        if self.spacing == "geometric":
            lams = np.geomspace(self.lambda_max, self.lambda_max * self.min_ratio, self.points)
        else:
            lams = np.linspace(self.lambda_max, 0.0, self.points, endpoint=False)
        return np.append(lams, 0.0)


@dataclass
class SweepRow:
    lam: float
    energies: np.ndarray
    labels: list[int] = field(default_factory=list)
    overlap_min: float = 1.0
    gap: float = math.nan
    excluded_gap: float = math.nan


@dataclass
class CrossingEvent:
    lam: float
    branches: tuple[int, int]
    gap: float
    swap: bool


@dataclass
class SpectrumSweep:
    rows: list[SweepRow]
    k: int
    cluster_size: int
    cluster_labels: set[int]
    crossing_events: list[CrossingEvent]

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([r.lam for r in self.rows])

    @property
    def energies(self) -> np.ndarray:
        return np.vstack([r.energies for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", *[f"e{i}" for i in range(self.k)], "gap", "excluded_gap"])
        for r in self.rows:
            w.writerow([repr(float(r.lam)), *[repr(float(e)) for e in r.energies], repr(float(r.gap)), repr(float(r.excluded_gap))])
        return buf.getvalue()

    def summary(self) -> dict:
        lam_star, g = min_gap(self)
        lam_naive, g_naive = min_gap(self, excluded=False)
        return {
            "min_gap": g,
            "lambda_star": lam_star,
            "naive_min_gap": g_naive,
            "naive_lambda_star": lam_naive,
            "k": self.k,
            "final_cluster_size": self.cluster_size,
            "points": len(self.rows),
            "crossing_events": [
                {"lambda": e.lam, "branches": list(e.branches), "gap": e.gap, "swap": e.swap} for e in self.crossing_events
            ],
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def _workers() -> int:
    env = os.environ.get("ANNEAL_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _final_cluster_size(H: SparseHamiltonian) -> int:
    d = H.diagonal
    return int(np.count_nonzero(d - d.min() <= CLUSTER_TOL))


def _solve(H, lams, k, method):
    def one(lam):
        try:
            return lowest_eigenpairs(H, float(lam), k, method=method)
        except EigensolverError as exc:
            exc.lam = float(lam)
            raise EigensolverError(f"lambda={lam}: {exc}", exc.residuals, float(lam)) from exc

    workers = _workers()
    if workers > 1 and len(lams) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, lams))
    return [one(lam) for lam in lams]


def _provisional_gap(vals: np.ndarray, cluster: int) -> float:
    idx = min(cluster, vals.size - 1)
    return float(vals[idx] - vals[0])


def _refine(H, sched, lams, results, k, method, cluster):
    """Insert up to ``sched.refine`` points: first where the gap drops by more than 2x, then closing in on the minimum."""
    lams = list(lams)
    results = list(results)
    budget = sched.refine
    geometric = sched.spacing == "geometric"

    def mid(x, y):
        if geometric and x > 0 and y > 0:
            return math.sqrt(x * y)
        return 0.5 * (x + y)

    def insert(lam):
        nonlocal budget
        (res,) = _solve(H, [lam], k, method)
        pos = next(i for i, x in enumerate(lams) if x < lam)
        lams.insert(pos, lam)
        results.insert(pos, res)
        budget -= 1

    gaps = [_provisional_gap(r[0], cluster) for r in results]
    drops = []
    for i in range(len(lams) - 1):
        g1, g2 = gaps[i], gaps[i + 1]
        lo, hi = min(g1, g2), max(g1, g2)
        if lams[i + 1] > 0 and hi > 2 * max(lo, 1e-300):
            drops.append((hi / max(lo, 1e-300), lams[i], lams[i + 1]))
    drops.sort(reverse=True)
    for _, x, y in drops[: budget // 3]:
        insert(mid(x, y))

    while budget > 0:
        gaps = [_provisional_gap(r[0], cluster) for r in results]
        i = int(np.argmin(gaps))
        left = lams[i - 1] if i > 0 else None
        right = lams[i + 1] if i + 1 < len(lams) else None
        cands = []
        if left is not None:
            cands.append((math.log(left / lams[i]) if geometric and lams[i] > 0 else left - lams[i], mid(left, lams[i])))
        if right is not None and right > 0:
            cands.append((math.log(lams[i] / right) if geometric else lams[i] - right, mid(lams[i], right)))
        if not cands:
            break
        width, lam = max(cands)
        if width <= 1e-12 or lam in lams:
            break
        insert(lam)
    return lams, results


def _align_clusters(vals: np.ndarray, vecs: np.ndarray, prev: np.ndarray) -> np.ndarray:
    """Rotate each degenerate eigenspace so its basis best matches the previous vectors."""
    vecs = vecs.copy()
    i = 0
    while i < vals.size:
        j = i + 1
        while j < vals.size and vals[j] - vals[i] <= CLUSTER_TOL:
            j += 1
        if j - i > 1:
            C = vecs[:, i:j]
            P = C.T @ prev
            pick = np.argsort(-np.linalg.norm(P, axis=0))[: j - i]
            U, _, Wt = np.linalg.svd(P[:, pick])
            vecs[:, i:j] = C @ (U @ Wt)
        i = j
    return vecs


def track_branches(lams, results) -> tuple[list[SweepRow], list[CrossingEvent]]:
    """Label eigenbranches by maximal absolute overlap between neighbouring lambda points."""
    rows: list[SweepRow] = []
    events: list[CrossingEvent] = []
    prev_vecs = None
    prev_labels: list[int] = []
    next_label = 0
    for lam, (vals, vecs) in zip(lams, results):
        k = vals.size
        if prev_vecs is None:
            labels = list(range(k))
            next_label = k
            rows.append(SweepRow(float(lam), vals, labels))
            prev_vecs, prev_labels = vecs, labels
            continue
        vecs = _align_clusters(vals, vecs, prev_vecs)
        O = np.abs(prev_vecs.T @ vecs)
        r, c = linear_sum_assignment(-O)
        labels = [-1] * k
        matched = []
        for pi, ci in zip(r, c):
            if O[pi, ci] >= CONTINUITY:
                labels[ci] = prev_labels[pi]
                matched.append(O[pi, ci])
                if pi != ci:
                    other = int(ci)
                    events.append(
                        CrossingEvent(float(lam), (int(pi), other), float(abs(vals[max(pi, ci)] - vals[min(pi, ci)])), True)
                    )
        for ci in range(k):
            if labels[ci] < 0:
                labels[ci] = next_label
                next_label += 1
                if ci + 1 < k:
                    events.append(CrossingEvent(float(lam), (ci, ci), float(vals[min(ci + 1, k - 1)] - vals[ci]), False))
        rows.append(SweepRow(float(lam), vals, labels, float(min(matched)) if matched else 0.0))
        prev_vecs, prev_labels = vecs, labels
    return rows, events


def sweep(
    model_or_H: IsingModel | SparseHamiltonian,
    schedule: SweepSchedule,
    method: Literal["auto", "dense", "davidson", "lanczos"] = "auto",
) -> SpectrumSweep:
    """Eigenpairs along the schedule, branch labels, and gaps with final-degeneracy exclusion."""
    H = model_or_H if isinstance(model_or_H, SparseHamiltonian) else build(model_or_H)
    cluster = _final_cluster_size(H)
    k = min(max(schedule.k, cluster + 2), H.dimension)
    if k != schedule.k:
        log.info("raising k from %d to %d to see past a %d-fold final cluster", schedule.k, k, cluster)
    lams = schedule.grid()
    results = _solve(H, lams, k, method)
    if schedule.refine:
        lams, results = _refine(H, schedule, lams, results, k, method, cluster)

    rows, events = track_branches(lams, results)
    final = rows[-1]
    in_cluster = final.energies - final.energies[0] <= CLUSTER_TOL
    cluster_labels = {lab for lab, inside in zip(final.labels, in_cluster) if inside}
    for row in rows:
        row.gap = float(row.energies[1] - row.energies[0])
        outside = [e for e, lab in zip(row.energies, row.labels) if lab not in cluster_labels]
        row.excluded_gap = float(min(outside) - row.energies[0]) if outside else math.nan
    return SpectrumSweep(rows, k, int(in_cluster.sum()), cluster_labels, events)


def min_gap(result: SpectrumSweep, excluded: bool = True) -> tuple[float, float]:
    """``(lambda*, g_min)`` over the sweep; ``excluded=False`` gives the naive ``E1 - E0``."""
    best = None
    for row in result.rows:
        g = row.excluded_gap if excluded else row.gap
        if math.isnan(g):
            continue
        # ties go to the later (smaller) lambda
        if best is None or g <= best[1]:
            best = (row.lam, max(g, 0.0))
    if best is None:
        return math.nan, math.nan
    return best
