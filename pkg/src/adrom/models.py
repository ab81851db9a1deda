"""Built-in 1-D full-order models with sparse component evaluation.

Each model is a discrete-time map q_k = f(q_{k-1}, k) over a state vector of
dimension N, evaluable either in full or at an index subset. Sparse
evaluation goes through the exact same vectorized update expressions as the
full step, so the two are bitwise consistent: step_components(q, k, idx)
equals step_full(q, k)[idx] bit for bit. That consistency is what the
interpolation-based reduced models rely on.

Models are immutable after construction and their step functions are pure.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DivergenceError
from .linalg import as_vector


@dataclass(frozen=True)
class TimeSpec:
    """Uniform time grid: step size dt (s) and number of steps."""

    dt: float
    steps: int

    def __post_init__(self):
        if not (self.dt > 0.0 and np.isfinite(self.dt)):
            raise ConfigError("dt must be positive and finite")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")


@dataclass(frozen=True)
class PulseProfile:
    """Initial-condition descriptor: a Gaussian bump or a step."""

    kind: str = "gaussian"  # "gaussian" | "step"
    center: float = 0.25    # m
    width: float = 0.02     # m, gaussian only

    def __post_init__(self):
        if self.kind not in ("gaussian", "step"):
            raise ConfigError(f"profile kind must be 'gaussian' or 'step', got {self.kind!r}")
        if self.kind == "gaussian" and not self.width > 0.0:
            raise ConfigError("profile width must be positive")


@dataclass(frozen=True)
class AdvectionParams:
    """Periodic upwind advection: grid and transport speed."""

    nx: int
    a: float = 1.0          # m/s
    dx: float | None = None  # m, defaults to 1/nx
    profile: PulseProfile = PulseProfile()

    def __post_init__(self):
        if self.nx < 2:
            raise ConfigError("nx must be >= 2")
        if self.a < 0.0:
            raise ConfigError("a must be >= 0")
        if self.dx is None:
            object.__setattr__(self, "dx", 1.0 / self.nx)
        if not self.dx > 0.0:
            raise ConfigError("dx must be positive")


@dataclass(frozen=True)
class FlameParams:
    """Advected reaction-diffusion front with an oscillating inlet.

    Two coupled fields on nx cells: a temperature-like field T and a
    reactant mass-fraction-like field Y. Defaults are the shipped
    calibration (nondimensional units) that produces a sharp front moving
    through the domain with inlet-driven oscillations riding on top.
    """

    nx: int = 512
    dx: float | None = None      # defaults to 1/nx
    a: float = 1.0               # advection speed
    nu_T: float = 1e-3           # T diffusivity
    nu_Y: float = 1e-3           # Y diffusivity
    A_r: float = 50.0            # reaction prefactor (1/s)
    T_a: float = 4.0             # activation temperature
    Q_r: float = 3.0             # heat release per unit reaction
    T_in: float = 1.0            # inlet temperature
    forcing_amp: float = 0.1     # relative inlet oscillation amplitude
    forcing_freq: float = 2.0    # Hz

    def __post_init__(self):
        if self.nx < 3:
            raise ConfigError("nx must be >= 3")
        if self.dx is None:
            object.__setattr__(self, "dx", 1.0 / self.nx)
        if not self.dx > 0.0:
            raise ConfigError("dx must be positive")
        if self.a < 0.0:
            raise ConfigError("a must be >= 0")
        if self.nu_T < 0.0 or self.nu_Y < 0.0:
            raise ConfigError("diffusivities must be >= 0")
        if not 0.0 <= self.forcing_amp < 1.0:
            raise ConfigError("forcing_amp must lie in [0, 1)")
        if self.A_r < 0.0 or self.T_a < 0.0:
            raise ConfigError("A_r and T_a must be >= 0")


class FullModel(ABC):
    """Discrete-time map with full and sparse component evaluation.

    Attributes
    ----------
    dim : int
        State dimension N.
    time : TimeSpec
        Step size and step count of the run this model was built for.
    variables : tuple of (name, start, stop)
        Contiguous per-variable index ranges partitioning [0, N).
    dx : float
        Cell width of the underlying grid (all variables share it).
    """

    dim: int
    time: TimeSpec
    variables: tuple
    dx: float

    @abstractmethod
    def initial_state(self) -> np.ndarray:
        """State vector at step 0."""

    @abstractmethod
    def step_full(self, q: np.ndarray, k: int) -> np.ndarray:
        """Map the state at step k-1 to the state at step k."""

    @abstractmethod
    def stencil(self, idx: np.ndarray) -> np.ndarray:
        """Sorted state indices consulted when evaluating components ``idx``."""

    @abstractmethod
    def step_components(self, q: np.ndarray, k: int, idx: np.ndarray):
        """Evaluate the step at ``idx`` only.

        Returns ``(values, read_set)``: the new values at ``idx`` (bitwise
        equal to the same entries of step_full) and the sorted index set
        actually consulted in ``q``. Entries of ``q`` outside the read set
        are never touched and may hold garbage.
        """

    def _check_idx(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.intp)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("idx must be a non-empty 1-d index array")
        if idx.min() < 0 or idx.max() >= self.dim:
            raise ValueError(f"idx out of range for dimension {self.dim}")
        if np.unique(idx).size != idx.size:
            raise ValueError("idx must be distinct")
        return idx


class AdvectionModel(FullModel):
    """First-order upwind advection on a periodic grid.

    Update: q'[i] = q[i] - lam * (q[i] - q[i-1]) with lam = a*dt/dx and
    index arithmetic modulo nx. Conserves the cell sum exactly up to
    rounding. The CFL number lam must not exceed 1.
    """

    def __init__(self, params: AdvectionParams, time: TimeSpec):
        self.params = params
        self.time = time
        self.dim = params.nx
        self.dx = params.dx
        self.variables = (("q", 0, params.nx),)
        self._lam = params.a * time.dt / params.dx
        if self._lam > 1.0:
            raise ConfigError(f"CFL number a*dt/dx = {self._lam:.6g} exceeds 1")

    def initial_state(self) -> np.ndarray:
        p = self.params.profile
        x = (np.arange(self.params.nx) + 0.5) * self.dx
        if p.kind == "gaussian":
            return np.exp(-0.5 * ((x - p.center) / p.width) ** 2)
        return np.where(x < p.center, 1.0, 0.0)

    def _update(self, qc, ql):
        # Shared by the full and sparse paths so both produce identical bits.
        return qc - self._lam * (qc - ql)

    def step_full(self, q: np.ndarray, k: int) -> np.ndarray:
        q = as_vector(q, "q")
        if q.shape[0] != self.dim:
            raise ValueError(f"state length {q.shape[0]} != {self.dim}")
        return self._update(q, np.roll(q, 1))

    def stencil(self, idx) -> np.ndarray:
        idx = self._check_idx(idx)
        left = (idx - 1) % self.params.nx
        return np.unique(np.concatenate([idx, left]))

    def step_components(self, q: np.ndarray, k: int, idx):
        idx = self._check_idx(idx)
        q = np.asarray(q, dtype=np.float64)
        left = (idx - 1) % self.params.nx
        values = self._update(q[idx], q[left])
        return values, np.unique(np.concatenate([idx, left]))


class FlameModel(FullModel):
    """Reaction front advected past an oscillating inlet.

    State layout is [T(0..nx-1); Y(0..nx-1)], N = 2*nx. Explicit Euler with
    upwind advection and central diffusion:

        T' = T - lam*(T - T_l) + d_T*(T_r - 2T + T_l) + dt*Q_r*omega
        Y' = Y - lam*(Y - Y_l) + d_Y*(Y_r - 2Y + Y_l) - dt*omega
        omega = min(A_r * Y * exp(-T_a / max(T, 1)), Y / dt)

    The rate cap omega <= Y/dt keeps Y nonnegative; the temperature floor
    inside the exponent avoids overflow on nonphysical transients. Inlet
    (cell 0 ghost): T = T_in*(1 + forcing_amp*sin(2*pi*forcing_freq*k*dt)),
    Y = 1. Outlet ghost copies the last cell (zero gradient).

    The initial condition is a fixed tanh front at 0.2 of the domain length
    (width 8 cells): cold reactant upstream, hot products downstream.
    """

    FRONT_POS_FRACTION = 0.2
    FRONT_WIDTH_CELLS = 8.0

    def __init__(self, params: FlameParams, time: TimeSpec):
        self.params = params
        self.time = time
        self.dim = 2 * params.nx
        self.dx = params.dx
        self.variables = (("T", 0, params.nx), ("Y", params.nx, 2 * params.nx))
        dt, dx = time.dt, params.dx
        self._lam = params.a * dt / dx
        self._dT = params.nu_T * dt / dx**2
        self._dY = params.nu_Y * dt / dx**2
        if self._dT > 0.5 or self._dY > 0.5:
            raise ConfigError(
                f"diffusion number nu*dt/dx^2 = {max(self._dT, self._dY):.6g} exceeds 1/2"
            )
        if self._lam > 1.0:
            raise ConfigError(f"CFL number a*dt/dx = {self._lam:.6g} exceeds 1")

    def initial_state(self) -> np.ndarray:
        p = self.params
        x = (np.arange(p.nx) + 0.5) * p.dx
        x0 = self.FRONT_POS_FRACTION * p.nx * p.dx
        width = self.FRONT_WIDTH_CELLS * p.dx
        burned = 0.5 * (1.0 + np.tanh((x - x0) / width))  # 0 upstream, 1 downstream
        T0 = p.T_in + p.Q_r * burned
        Y0 = 1.0 - burned
        return np.concatenate([T0, Y0])

    def _inlet_T(self, k: int) -> float:
        p = self.params
        return p.T_in * (1.0 + p.forcing_amp * np.sin(2.0 * np.pi * p.forcing_freq * k * self.time.dt))

    def _omega(self, T, Y):
        p = self.params
        return np.minimum(p.A_r * Y * np.exp(-p.T_a / np.maximum(T, 1.0)), Y / self.time.dt)

    def _update_T(self, Tc, Tl, Tr, om):
        dt = self.time.dt
        return Tc - self._lam * (Tc - Tl) + self._dT * (Tr - 2.0 * Tc + Tl) + (dt * self.params.Q_r) * om

    def _update_Y(self, Yc, Yl, Yr, om):
        dt = self.time.dt
        return Yc - self._lam * (Yc - Yl) + self._dY * (Yr - 2.0 * Yc + Yl) - dt * om

    def step_full(self, q: np.ndarray, k: int) -> np.ndarray:
        q = as_vector(q, "q")
        if q.shape[0] != self.dim:
            raise ValueError(f"state length {q.shape[0]} != {self.dim}")
        nx = self.params.nx
        T, Y = q[:nx], q[nx:]
        t_bc = self._inlet_T(k)
        Tl = np.concatenate([[t_bc], T[:-1]])
        Tr = np.concatenate([T[1:], T[-1:]])
        Yl = np.concatenate([[1.0], Y[:-1]])
        Yr = np.concatenate([Y[1:], Y[-1:]])
        om = self._omega(T, Y)
        return np.concatenate([self._update_T(T, Tl, Tr, om), self._update_Y(Y, Yl, Yr, om)])

    def stencil(self, idx) -> np.ndarray:
        idx = self._check_idx(idx)
        nx = self.params.nx
        cells = idx % nx
        pieces = [idx]
        # Same-field neighbors, clamped at the boundaries.
        base = idx - cells  # 0 for T entries, nx for Y entries
        pieces.append(base + np.maximum(cells - 1, 0))
        pieces.append(base + np.minimum(cells + 1, nx - 1))
        # Cross-field partner (the reaction couples T and Y at the same cell).
        pieces.append((idx + nx) % (2 * nx))
        return np.unique(np.concatenate(pieces))

    def step_components(self, q: np.ndarray, k: int, idx):
        idx = self._check_idx(idx)
        q = np.asarray(q, dtype=np.float64)
        nx = self.params.nx
        t_bc = self._inlet_T(k)
        values = np.empty(idx.shape[0], dtype=np.float64)

        is_T = idx < nx
        iT = idx[is_T]
        if iT.size:
            Tc = q[iT]
            Tl = np.where(iT > 0, q[iT - 1], t_bc)
            Tr = q[np.minimum(iT + 1, nx - 1)]
            om = self._omega(Tc, q[nx + iT])
            values[is_T] = self._update_T(Tc, Tl, Tr, om)

        iY = idx[~is_T] - nx
        if iY.size:
            Yc = q[nx + iY]
            Yl = np.where(iY > 0, q[nx + iY - 1], 1.0)
            Yr = q[nx + np.minimum(iY + 1, nx - 1)]
            om = self._omega(q[iY], Yc)
            values[~is_T] = self._update_Y(Yc, Yl, Yr, om)

        return values, self.stencil(idx)


def run_full_model(model: FullModel, steps: int, q0: np.ndarray | None = None, ledger=None,
                   kind: str = "fom_init") -> np.ndarray:
    """Run the full model for ``steps`` steps; returns the N x (steps+1) trajectory.

    When a ledger is given, every step records ``model.dim`` component
    evaluations under ``kind``.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    q = model.initial_state() if q0 is None else as_vector(q0, "q0").copy()
    Q = np.empty((model.dim, steps + 1))
    Q[:, 0] = q
    for k in range(1, steps + 1):
        q = model.step_full(q, k)
        if not np.all(np.isfinite(q)):
            raise DivergenceError(f"full model produced non-finite state at step {k}")
        Q[:, k] = q
        if ledger is not None:
            ledger.record(k, kind, model.dim)
    return Q
