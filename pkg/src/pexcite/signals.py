"""Sampled regressor signals and the generators used to build them.

Signals live on a uniform time grid.  Every generator declares a
continuity tag instead of inferring one from the samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

UNIFORMLY_CONTINUOUS = "uniformly-continuous"
UNIFORMLY_PIECEWISE_CONTINUOUS = "uniformly-piecewise-continuous"
UNKNOWN = "unknown"

# weakest last
_CONTINUITY_ORDER = (UNIFORMLY_CONTINUOUS, UNIFORMLY_PIECEWISE_CONTINUOUS, UNKNOWN)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t0 + j*dt`` for ``j = 0, ..., n-1``."""

    t0: float
    dt: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise InputError(f"grid step must be positive, got {self.dt}")
        if not np.isfinite(self.t0):
            raise InputError("grid start must be finite")
        if int(self.n) != self.n or self.n < 2:
            raise InputError(f"grid needs at least 2 samples, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_horizon(cls, horizon, dt, t0=0.0):
        """Grid covering ``[t0, t0 + horizon]`` with step ``dt``."""
        if horizon <= 0:
            raise InputError("horizon must be positive")
        return cls(float(t0), float(dt), int(round(horizon / dt)) + 1)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)

    @property
    def span(self) -> float:
        return self.dt * (self.n - 1)

    def index(self, t) -> int:
        """Nearest grid index to time ``t`` (not range-checked)."""
        return int(round((t - self.t0) / self.dt))


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """A ``q``-dimensional signal sampled on ``grid``.

    ``values`` has shape ``(q, n)``; column ``j`` is ``w(t0 + j*dt)``.
    """

    grid: TimeGrid
    values: np.ndarray
    continuity_tag: str = UNKNOWN

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[np.newaxis, :]
        if values.ndim != 2:
            raise InputError("signal values must be a q x n matrix")
        if values.shape[1] != self.grid.n:
            raise InputError(
                f"signal has {values.shape[1]} samples but the grid has {self.grid.n}")
        if not np.all(np.isfinite(values)):
            raise InputError("signal values must be finite")
        if self.continuity_tag not in _CONTINUITY_ORDER:
            raise InputError(f"unknown continuity tag {self.continuity_tag!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def q(self) -> int:
        return self.values.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def __len__(self):
        return self.grid.n


def weakest_tag(*tags):
    return max(tags, key=_CONTINUITY_ORDER.index)


def sample_sinusoid_mix(freqs, amps, phases, q, mixing, grid):
    """Sample ``mixing @ s(t)`` with ``s_i(t) = amps[i] * sin(freqs[i]*t + phases[i])``.

    Parameters
    ----------
    freqs, amps, phases : sequences of length m
        Angular frequencies (rad/s), amplitudes and phases of the sources.
    q : int
        Output dimension; must match the row count of ``mixing``.
    mixing : array_like, shape (q, m)
    grid : TimeGrid
    """
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    amps = np.atleast_1d(np.asarray(amps, dtype=float))
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    m = freqs.size
    if amps.size != m or phases.size != m:
        raise InputError("freqs, amps and phases must have the same length")
    mixing = np.atleast_2d(np.asarray(mixing, dtype=float))
    if mixing.shape != (q, m):
        raise InputError(f"mixing must be {q} x {m}, got {mixing.shape}")
    if not np.all(np.isfinite(mixing)):
        raise InputError("mixing matrix must be finite")
    t = grid.times
    sources = amps[:, None] * np.sin(freqs[:, None] * t[None, :] + phases[:, None])
    return SampledSignal(grid, mixing @ sources, UNIFORMLY_CONTINUOUS)


def constant(c, grid):
    """Signal equal to the vector ``c`` at every grid point."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return SampledSignal(grid, np.repeat(c[:, None], grid.n, axis=1), UNIFORMLY_CONTINUOUS)


def zeros(q, grid):
    return constant(np.zeros(q), grid)


@dataclass(frozen=True)
class GammaSchedule:
    """The 0/1 switching schedule on intervals of length ``2**k``.

    Interval ``k`` (``k = 1, 2, ...``) is ``[B[k-1], B[k])`` with
    ``B[k] = 2 + 4 + ... + 2**k``; gamma is 1 on intervals whose index has
    the parity ``on_parity`` (1 = odd).
    """

    boundaries: tuple
    on_parity: int = 1

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        if b.size < 2 or b[0] != 0.0 or np.any(np.diff(b) <= 0):
            raise InputError("boundaries must start at 0 and increase strictly")

    @classmethod
    def covering(cls, horizon):
        """Smallest schedule whose last interval ends at or after ``horizon``."""
        bounds = [0.0]
        k = 1
        while bounds[-1] <= horizon:
            bounds.append(bounds[-1] + 2.0 ** k)
            k += 1
        return cls(tuple(bounds))

    @property
    def n_intervals(self) -> int:
        return len(self.boundaries) - 1

    def interval_index(self, t, atol=0.0):
        """1-based interval index containing ``t``.

        Times within ``atol`` below a boundary are snapped onto it, which
        keeps grid evaluation right-continuous despite rounding in ``j*dt``.
        """
        t = np.asarray(t, dtype=float)
        if np.any(t < -atol):
            raise InputError("gamma is only defined for t >= 0")
        b = np.asarray(self.boundaries)
        k = np.searchsorted(b, t + atol, side="right")
        if np.any(k > self.n_intervals):
            raise InputError(f"t beyond the schedule end {b[-1]}")
        return k


def gamma_eval(schedule, t, atol=0.0):
    """Evaluate the switching signal: 1 on odd-indexed intervals, else 0."""
    k = schedule.interval_index(t, atol)
    out = (k % 2 == schedule.on_parity % 2).astype(float)
    return float(out) if out.ndim == 0 else out


def gamma_on_grid(grid, schedule=None):
    if grid.t0 < 0:
        raise InputError("gamma needs a grid starting at t >= 0")
    if schedule is None:
        schedule = GammaSchedule.covering(grid.t_end)
    return gamma_eval(schedule, grid.times, atol=1e-6 * grid.dt)


def pathological_pair(v, schedule=None):
    """Split ``v`` into ``gamma*v`` and ``(1-gamma)*v``.

    Each part is non-PE even when ``v`` is PE.  ``w1 + w2 == v`` holds
    exactly because gamma only takes the values 0 and 1.
    """
    g = gamma_on_grid(v.grid, schedule)
    on = g.astype(bool)
    w1 = np.where(on[None, :], v.values, 0.0)
    w2 = np.where(on[None, :], 0.0, v.values)
    tag = weakest_tag(v.continuity_tag, UNIFORMLY_PIECEWISE_CONTINUOUS)
    return SampledSignal(v.grid, w1, tag), SampledSignal(v.grid, w2, tag)


def apply_linear_map(L, w):
    """Pointwise ``L @ w(t)``."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if L.shape[1] != w.q:
        raise InputError(f"map has {L.shape[1]} columns, signal has dimension {w.q}")
    if not np.all(np.isfinite(L)):
        raise InputError("linear map must be finite")
    return SampledSignal(w.grid, L @ w.values, w.continuity_tag)


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise InputError(f"grid mismatch: {a.grid} vs {b.grid}")


def stack(w1, w2):
    """Concatenate two signals on the same grid into ``(w1, w2)``."""
    _check_same_grid(w1, w2)
    return SampledSignal(w1.grid, np.vstack([w1.values, w2.values]),
                         weakest_tag(w1.continuity_tag, w2.continuity_tag))


def add(w1, w2):
    """Pointwise sum of two signals of equal dimension."""
    _check_same_grid(w1, w2)
    if w1.q != w2.q:
        raise InputError("cannot add signals of different dimension")
    return SampledSignal(w1.grid, w1.values + w2.values,
                         weakest_tag(w1.continuity_tag, w2.continuity_tag))


def envelope_scale(w, rate):
    """Multiply by ``exp(-rate*t)``; produces vanishing signals for ``rate > 0``."""
    if rate < 0:
        raise InputError("envelope rate must be non-negative")
    if rate == 0:
        return w
    env = np.exp(-rate * w.times)
    return SampledSignal(w.grid, w.values * env[None, :], w.continuity_tag)
