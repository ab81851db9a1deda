"""Online-adaptive reduced model: windowed estimates, residual-driven sampling,
rank-one basis updates.

The adaptive run keeps a sliding window of recent state estimates. Most steps
fill the newest window column from a sparse evaluation (exact at the union of
sampling and interpolation points, interpolated elsewhere); every z-th step
evaluates the full model instead and re-ranks the sampling points by residual
row norms. The basis is corrected by the rank-one update that minimizes the
window misfit in closed form, then interpolation points are re-selected.

All indexing is 0-based. A trajectory column k holds the state estimate at
time step k; window columns are tagged with the loop step that produced them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import EvalLedger
from .exceptions import (
    DegenerateSampleError,
    DegenerateUpdateError,
    DivergenceError,
)
from .linalg import RANK_RTOL, as_matrix, as_vector, gen_eig_max, lstsq, orthonormalize, pod
from .models import FullModel, run_full_model
from .static import VariableLayout, deim_step, select_points


@dataclass(frozen=True)
class AadeimConfig:
    """Knobs of the adaptive run.

    n: reduced dimension; w_init: number of leading full-model steps;
    w: window size (recommended n + 1); m_s: sampling-point count;
    z: sampling-point update period (a full evaluation every z-th step);
    basis_update_period: steps between basis corrections.
    """

    n: int
    w_init: int
    w: int
    m_s: int
    z: int
    basis_update_period: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.w < 1:
            raise ValueError("w must be >= 1")
        if self.w_init < self.w:
            raise ValueError("w_init must be >= w")
        if self.n > self.w_init:
            raise ValueError("n must be <= w_init")
        if self.m_s < 1:
            raise ValueError("m_s must be >= 1")
        if self.z < 1:
            raise ValueError("z must be >= 1")
        if self.basis_update_period < 1:
            raise ValueError("basis_update_period must be >= 1")


class WindowBuffer:
    """Sliding window of state-estimate columns with strictly increasing step tags."""

    def __init__(self, capacity: int, columns, tags):
        columns = as_matrix(columns, "columns")
        tags = [int(t) for t in tags]
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        if columns.shape[1] != len(tags):
            raise ValueError("one tag per column required")
        if columns.shape[1] > capacity:
            raise ValueError("more columns than capacity")
        if any(b <= a for a, b in zip(tags, tags[1:])):
            raise ValueError("tags must be strictly increasing")
        self.capacity = capacity
        self._F = np.empty((columns.shape[0], capacity))
        self._F[:, : columns.shape[1]] = columns
        self._tags = tags

    def append(self, column, tag: int) -> None:
        column = as_vector(column, "column")
        if self._tags and tag <= self._tags[-1]:
            raise ValueError(f"tag {tag} not after {self._tags[-1]}")
        if len(self._tags) == self.capacity:
            self._F[:, :-1] = self._F[:, 1:]
            self._F[:, -1] = column
            self._tags = self._tags[1:] + [int(tag)]
        else:
            self._F[:, len(self._tags)] = column
            self._tags = self._tags + [int(tag)]

    @property
    def full(self) -> bool:
        return len(self._tags) == self.capacity

    @property
    def matrix(self) -> np.ndarray:
        """Columns oldest to newest (copy)."""
        return self._F[:, : len(self._tags)].copy()

    @property
    def tags(self) -> tuple:
        return tuple(self._tags)


def estimate_column(model: FullModel, V: np.ndarray, q_red: np.ndarray, k: int,
                    sample_union: np.ndarray, ledger: EvalLedger | None = None) -> np.ndarray:
    """State-estimate column: exact at ``sample_union``, interpolated elsewhere.

    Evaluates the model at the index set g = ``sample_union`` from the lifted
    reduced state and fills the complement with V[comp, :] times the
    least-squares coefficients of the sampled values. Records the size of the
    stencil closure of g when a ledger is given.

    Raises DegenerateSampleError when V restricted to g loses column rank;
    callers recover by switching to a full refresh for that step.
    """
    V = as_matrix(V, "V")
    q_red = as_vector(q_red, "q_red")
    g = np.asarray(sample_union, dtype=np.intp)
    n = V.shape[1]
    if g.shape[0] < n:
        raise ValueError(f"need at least n={n} sampled components, got {g.shape[0]}")
    Vg = V[g, :]
    s = np.linalg.svd(Vg, compute_uv=False)
    if s[0] <= 0.0 or s[-1] <= RANK_RTOL * s[0]:
        raise DegenerateSampleError(f"sampling rows rank-deficient at step {k}")
    read_set = model.stencil(g)
    lift = np.zeros(model.dim)
    lift[read_set] = V[read_set, :] @ q_red
    values, _ = model.step_components(lift, k, g)
    if not np.all(np.isfinite(values)):
        raise DivergenceError(f"full-model evaluation produced non-finite values at step {k}")
    if ledger is not None:
        ledger.record(k, "sparse_estimate", read_set.shape[0])
    column = np.empty(model.dim)
    column[g] = values
    rest = np.ones(model.dim, dtype=bool)
    rest[g] = False
    column[rest] = V[rest, :] @ lstsq(Vg, values)
    return column


@dataclass(frozen=True)
class ResidualReport:
    """Row norms of the window residual and their descending ordering."""

    row_norms: np.ndarray  # per row, original order
    order: np.ndarray      # permutation, descending norms, ties by ascending index

    @property
    def sorted_norms(self) -> np.ndarray:
        return self.row_norms[self.order]


def adapt_samples(window_matrix, V, points, m_s: int):
    """Re-rank sampling points from the interpolation residual of the window.

    The residual is F - V * lsq(V[points, :], F[points, :]) over the whole
    window; rows are ordered by descending 2-norm (ties to the ascending
    index) and the first ``m_s`` indices, sorted, become the new sample set.
    Returns ``(samples, ResidualReport)``.
    """
    F = as_matrix(window_matrix, "window")
    V = as_matrix(V, "V")
    points = np.asarray(points, dtype=np.intp)
    if not 1 <= m_s <= F.shape[0]:
        raise ValueError(f"m_s={m_s} out of range [1, {F.shape[0]}]")
    R = F - V @ lstsq(V[points, :], F[points, :])
    norms = np.sqrt(np.einsum("ij,ij->i", R, R))
    order = np.argsort(-norms, kind="stable")
    samples = np.sort(order[:m_s])
    return samples, ResidualReport(norms, order)


@dataclass(frozen=True)
class BasisUpdateResult:
    """Outcome of one rank-one basis correction.

    ``alpha`` (length N) carries the magnitude, ``beta`` (length n) is unit
    norm. ``basis`` is the re-orthonormalized adapted basis. ``degenerate``
    marks the no-op fallback taken when the window carries no usable signal.
    Objectives are squared Frobenius misfits of the (pre-orthonormalization)
    basis against the window, before and after the update.
    """

    alpha: np.ndarray
    beta: np.ndarray
    basis: np.ndarray
    degenerate: bool
    objective_before: float
    objective_after: float


def adeim_update(V, F) -> BasisUpdateResult:
    """Best rank-one basis correction for the window ``F``, in closed form.

    Minimizes ||(V + alpha beta^T) C - F||_F^2 over alpha, beta with
    coefficients C = V^T F fixed. The optimal beta direction is the largest
    generalized eigenvector of (C R^T R C^T, C C^T) with R = V C - F, and
    alpha = -R C^T beta / (beta^T C C^T beta). The updated basis is
    re-orthonormalized before use. The attained objective never exceeds the
    zero-update objective.
    """
    V = as_matrix(V, "V")
    F = as_matrix(F, "F")
    if V.shape[0] != F.shape[0]:
        raise ValueError(f"row mismatch: V is {V.shape[0]}x{V.shape[1]}, F is {F.shape[0]}x{F.shape[1]}")
    C = V.T @ F
    R = V @ C - F
    before = float(np.sum(R * R))
    B = C @ C.T
    A = C @ (R.T @ R) @ C.T
    # Clean up rounding asymmetry before the symmetric eigensolve.
    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    try:
        _, beta = gen_eig_max(A, B)
    except DegenerateUpdateError:
        alpha = np.zeros(V.shape[0])
        beta = np.zeros(V.shape[1])
        beta[0] = 1.0
        return BasisUpdateResult(alpha, beta, V, True, before, before)
    denom = float(beta @ B @ beta)
    alpha = -(R @ (C.T @ beta)) / denom
    updated = V + np.outer(alpha, beta)
    after = float(np.sum((updated @ C - F) ** 2))
    return BasisUpdateResult(alpha, beta, orthonormalize(updated), False, before, after)


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step record of an adaptive run."""

    step: int
    refreshed: bool           # window column came from a full evaluation
    forced_refresh: bool      # refresh was forced by degenerate sampling rows
    basis_adapted: bool
    degenerate_update: bool
    objective_before: float   # nan on steps without a basis update
    objective_after: float
    residual_top_norm: float  # largest residual row norm (refresh steps only)
    sample_churn: int         # sampling points replaced at this step
    union_size: int           # exact-evaluation index count for the window column
    points_count: int


@dataclass(frozen=True)
class AadeimResult:
    trajectory: np.ndarray    # N x (K+1)
    ledger: EvalLedger
    steps: tuple              # StepDiagnostics per reduced step
    basis: np.ndarray         # final basis
    points: np.ndarray        # final interpolation points


def run_aadeim(model: FullModel, config: AadeimConfig,
               layout: VariableLayout | None = None) -> AadeimResult:
    """Adaptive reduced run over the model's full time span.

    Phase 1 runs the full model for ``w_init`` steps and builds the initial
    basis, interpolation points, and window from those snapshots. Phase 2
    advances the reduced state with interpolation steps; each iteration
    appends a window column (full evaluation on refresh steps, sparse
    estimate otherwise), re-ranks sampling points on refresh steps, and
    periodically applies the rank-one basis correction followed by point
    re-selection and re-projection of the reduced state onto the new basis.

    Returns the lifted trajectory (column k = state estimate at step k),
    the evaluation ledger, per-step diagnostics, and the final basis/points.
    """
    if layout is None:
        layout = VariableLayout.from_model(model)
    N = model.dim
    K = model.time.steps
    cfg = config
    if cfg.m_s > N:
        raise ValueError(f"m_s={cfg.m_s} exceeds model dimension {N}")
    if K < cfg.w_init:
        raise ValueError(f"steps={K} must be >= w_init={cfg.w_init}")

    ledger = EvalLedger()
    Q = np.empty((N, K + 1))
    Q[:, : cfg.w_init + 1] = run_full_model(model, cfg.w_init, ledger=ledger, kind="fom_init")
    if K == cfg.w_init:
        return AadeimResult(Q, ledger, (), np.empty((N, 0)), np.empty(0, dtype=np.intp))

    V, _ = pod(Q[:, : cfg.w_init + 1], cfg.n)
    points = select_points(V, layout)
    first = cfg.w_init - cfg.w + 2
    window = WindowBuffer(cfg.w, Q[:, first : cfg.w_init + 1], range(first, cfg.w_init + 1))
    q_red = V.T @ Q[:, cfg.w_init]

    samples = np.empty(0, dtype=np.intp)
    diags = []
    for k in range(cfg.w_init + 1, K + 1):
        q_red = deim_step(model, V, points, q_red, k, ledger)
        if not np.all(np.isfinite(q_red)):
            raise DivergenceError(f"adaptive reduced model diverged at step {k}")
        Q[:, k] = V @ q_red

        refresh = (k % cfg.z == 0) or (k == cfg.w_init + 1)
        forced = False
        column = None
        union_size = N
        if not refresh:
            union = np.union1d(samples, points)
            try:
                column = estimate_column(model, V, q_red, k, union, ledger)
                union_size = union.shape[0]
            except DegenerateSampleError:
                forced = True

        top_norm = np.nan
        churn = 0
        if refresh or forced:
            # The full evaluation doubles as this step's window column.
            column = model.step_full(Q[:, k], k)
            if not np.all(np.isfinite(column)):
                raise DivergenceError(f"full-model evaluation produced non-finite values at step {k}")
            ledger.record(k, "full_refresh", N)
            window.append(column, k)
            new_samples, report = adapt_samples(window.matrix, V, points, cfg.m_s)
            top_norm = float(report.sorted_norms[0])
            churn = int(np.setdiff1d(new_samples, samples).shape[0])
            samples = new_samples
        else:
            window.append(column, k)

        adapt_basis = (k - (cfg.w_init + 1)) % cfg.basis_update_period == 0
        degenerate_update = False
        obj_before = np.nan
        obj_after = np.nan
        if adapt_basis:
            update = adeim_update(V, window.matrix)
            degenerate_update = update.degenerate
            obj_before = update.objective_before
            obj_after = update.objective_after
            if not update.degenerate:
                q_red = update.basis.T @ (V @ q_red)
                V = update.basis
                points = select_points(V, layout)

        diags.append(StepDiagnostics(
            step=k,
            refreshed=refresh or forced,
            forced_refresh=forced,
            basis_adapted=adapt_basis and not degenerate_update,
            degenerate_update=degenerate_update,
            objective_before=obj_before,
            objective_after=obj_after,
            residual_top_norm=top_norm,
            sample_churn=churn,
            union_size=union_size,
            points_count=points.shape[0],
        ))

    return AadeimResult(Q, ledger, tuple(diags), V, points)
