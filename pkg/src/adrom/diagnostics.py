"""Measurement layer: evaluation accounting, error metrics, spectra, probes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix

RECORD_KINDS = ("fom_init", "full_refresh", "sparse_estimate", "rom_step")


@dataclass(frozen=True)
class EvalRecord:
    """One accounting entry: ``count`` component evaluations of a given kind."""

    step: int
    kind: str
    count: int


class EvalLedger:
    """Exact count of full-model component evaluations, by step and kind."""

    def __init__(self):
        self._records: list[EvalRecord] = []
        self._total = 0

    def record(self, step: int, kind: str, count: int) -> None:
        if kind not in RECORD_KINDS:
            raise ValueError(f"unknown record kind {kind!r}")
        count = int(count)
        if count < 0:
            raise ValueError("count must be >= 0")
        self._records.append(EvalRecord(int(step), kind, count))
        self._total += count

    @property
    def records(self) -> tuple:
        return tuple(self._records)

    @property
    def total(self) -> int:
        return self._total

    def totals_by_kind(self) -> dict:
        out = {kind: 0 for kind in RECORD_KINDS}
        for rec in self._records:
            out[rec.kind] += rec.count
        return out


def ledger_summary(ledger: EvalLedger) -> dict:
    """Totals per record kind plus the grand total under key ``"total"``."""
    out = ledger.totals_by_kind()
    out["total"] = ledger.total
    return out


def relative_error(approx, reference) -> float:
    """Squared-Frobenius error ratio ||approx - reference||_F^2 / ||reference||_F^2.

    Note the squaring: this is the fraction of squared norms, not the norm
    ratio many codes report.
    """
    A = as_matrix(approx, "approx")
    B = as_matrix(reference, "reference")
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: approx {A.shape} vs reference {B.shape}")
    ref = float(np.sum(B * B))
    if ref == 0.0:
        raise ValueError("relative_error: reference is identically zero")
    return float(np.sum((A - B) ** 2)) / ref


def svd_decay_report(Q, windows=()) -> list:
    """Normalized singular values of column windows of ``Q`` plus the global spectrum.

    ``windows`` is an iterable of half-open 0-based column ranges
    ``(start, stop)``. Returns a list of ``(label, sigma/sigma_1)`` rows,
    global first, windows in the given order with labels ``cols[a:b)``.
    """
    Q = as_matrix(Q, "Q")
    rows = [("global", _normalized_sigma(Q, "global"))]
    for start, stop in windows:
        if not 0 <= start < stop <= Q.shape[1]:
            raise ValueError(f"window [{start}:{stop}) is empty or out of range for {Q.shape[1]} columns")
        label = f"cols[{start}:{stop})"
        rows.append((label, _normalized_sigma(Q[:, start:stop], label)))
    return rows


def _normalized_sigma(M: np.ndarray, label: str) -> np.ndarray:
    sigma = np.linalg.svd(M, compute_uv=False)
    if sigma[0] <= 0.0:
        raise ValueError(f"svd_decay_report: window {label} is identically zero")
    return sigma / sigma[0]


@dataclass(frozen=True)
class ProbeSpec:
    """Fixed spatial locations whose values are tracked over time."""

    locations: tuple      # x coordinates (m)
    variables: tuple = ()  # variable names; empty means all

    def __post_init__(self):
        object.__setattr__(self, "locations", tuple(float(x) for x in self.locations))
        object.__setattr__(self, "variables", tuple(self.variables))


@dataclass(frozen=True)
class ProbeSeries:
    variable: str
    location: float
    cell: int              # block-local cell index actually sampled
    times: np.ndarray
    values: np.ndarray


def nearest_cell(x: float, dx: float, ncells: int) -> int:
    """Index of the cell whose center is nearest to ``x``; ties go to the lower index.

    Cell centers sit at (i + 1/2)*dx; ``x`` must lie in [0, ncells*dx].
    """
    if not 0.0 <= x <= ncells * dx:
        raise ValueError(f"probe location {x:g} outside domain [0, {ncells * dx:g}]")
    i = int(np.ceil(x / dx - 1.0))
    return min(max(i, 0), ncells - 1)


def probe_series(Q, layout, dx: float, dt: float, probes: ProbeSpec) -> list:
    """Nearest-cell time series of ``Q`` at the probe locations.

    ``Q`` is the N x (K+1) trajectory; ``layout`` the variable layout of its
    rows. Returns one ProbeSeries per (variable, location) pair, variables
    in layout order.
    """
    Q = as_matrix(Q, "Q")
    if layout.dim != Q.shape[0]:
        raise ValueError(f"layout covers {layout.dim} rows but trajectory has {Q.shape[0]}")
    names = probes.variables or layout.names
    times = np.arange(Q.shape[1]) * dt
    out = []
    for name in names:
        start, stop = layout.block(name)
        for x in probes.locations:
            cell = nearest_cell(x, dx, stop - start)
            out.append(ProbeSeries(name, x, cell, times, Q[start + cell, :].copy()))
    return out
