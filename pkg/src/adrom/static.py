"""Static reduced model: offline basis + interpolation points, online stepping.

The offline stage extracts an orthonormal basis from snapshots (``pod``) and
selects interpolation points per variable block with pivoted QR, taking the
union across variables. The online stage advances reduced coordinates by
evaluating the full model only at the interpolation points and solving the
small interpolation system in the least-squares sense.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import EvalLedger
from .exceptions import DivergenceError, NumericalError
from .linalg import as_matrix, as_vector, lstsq, pivoted_qr_pivots
from .models import FullModel

# Interpolation systems with condition number beyond this are refused.
MAX_POINT_COND = 1e12


@dataclass(frozen=True)
class VariableLayout:
    """Contiguous per-variable index ranges partitioning [0, N).

    ``blocks`` is a tuple of (name, start, stop) half-open ranges. Ranges
    must be disjoint, in order, and cover the whole state vector.
    """

    blocks: tuple

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("layout must contain at least one variable block")
        pos = 0
        for name, start, stop in self.blocks:
            if start != pos or stop <= start:
                raise ValueError(f"variable {name!r}: blocks must be contiguous and non-empty")
            pos = stop

    @classmethod
    def from_model(cls, model: FullModel) -> "VariableLayout":
        return cls(tuple(model.variables))

    @property
    def dim(self) -> int:
        return self.blocks[-1][2]

    @property
    def names(self) -> tuple:
        return tuple(name for name, _, _ in self.blocks)

    def block(self, name: str):
        for bname, start, stop in self.blocks:
            if bname == name:
                return start, stop
        raise KeyError(f"unknown variable {name!r}")


def select_points(V, layout: VariableLayout) -> np.ndarray:
    """Interpolation points: per-variable pivoted QR on the basis rows.

    For each variable block, the first n pivots of a column-pivoted QR of
    the transposed block rows are taken (n = number of basis columns) and
    mapped to global indices; the result is their sorted union. With b
    variable blocks this yields m = b*n distinct points.
    """
    V = as_matrix(V, "V")
    n = V.shape[1]
    if layout.dim != V.shape[0]:
        raise ValueError(f"layout covers {layout.dim} rows but basis has {V.shape[0]}")
    parts = []
    for name, start, stop in layout.blocks:
        if stop - start < n:
            raise ValueError(f"variable {name!r}: block has {stop - start} rows, fewer than n={n}")
        pivots = pivoted_qr_pivots(V[start:stop, :].T)[:n]
        parts.append(pivots + start)
    return np.unique(np.concatenate(parts))


def deim_step(model: FullModel, V: np.ndarray, points: np.ndarray, q_red: np.ndarray,
              k: int, ledger: EvalLedger | None = None) -> np.ndarray:
    """One interpolation-based reduced time step.

    Lifts the reduced state only on the stencil closure of ``points``,
    evaluates the model there, and returns the least-squares solution of
    V[points, :] x = f_values. Records ``len(points)`` component
    evaluations when a ledger is given.
    """
    q_red = as_vector(q_red, "q_red")
    if points.shape[0] < V.shape[1]:
        raise ValueError(f"need at least n={V.shape[1]} interpolation points, got {points.shape[0]}")
    PtV = V[points, :]
    s = np.linalg.svd(PtV, compute_uv=False)
    if s[-1] <= 0.0 or s[0] / s[-1] > MAX_POINT_COND:
        cond = np.inf if s[-1] <= 0.0 else s[0] / s[-1]
        raise NumericalError(f"deim_step: interpolation points ill-conditioned at step {k} (cond {cond:.3g})")
    read_set = model.stencil(points)
    lift = np.zeros(model.dim)
    lift[read_set] = V[read_set, :] @ q_red
    values, _ = model.step_components(lift, k, points)
    if not np.all(np.isfinite(values)):
        raise DivergenceError(f"full-model evaluation produced non-finite values at step {k}")
    if ledger is not None:
        ledger.record(k, "rom_step", points.shape[0])
    return lstsq(PtV, values)


def run_static(model: FullModel, V, points, q0_red, K: int,
               ledger: EvalLedger | None = None):
    """Iterate the static reduced model for K steps.

    Returns ``(trajectory, ledger)`` where trajectory is n x (K+1) in
    reduced coordinates with column 0 equal to ``q0_red``.
    """
    V = as_matrix(V, "V")
    points = np.asarray(points, dtype=np.intp)
    q = as_vector(q0_red, "q0_red").copy()
    if ledger is None:
        ledger = EvalLedger()
    if K < 0:
        raise ValueError("K must be >= 0")
    traj = np.empty((V.shape[1], K + 1))
    traj[:, 0] = q
    for k in range(1, K + 1):
        q = deim_step(model, V, points, q, k, ledger)
        if not np.all(np.isfinite(q)):
            raise DivergenceError(f"static reduced model diverged at step {k}")
        traj[:, k] = q
    return traj, ledger
