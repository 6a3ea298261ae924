"""Sliding-window excitation tests over a sampled regressor.

The windowed Gram matrix ``(1/T) * integral_t^{t+T} w w^T`` is served from
trapezoidal prefix sums, so every window query costs O(q^2) after an O(n q^2)
precomputation.  Window starts and lengths are rounded to the nearest grid
point and the rounded values are what verdicts report.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, RangeError


class GramSweep:
    """Trapezoidal prefix integrals ``S_j ~ integral_{t0}^{t_j} w w^T``.

    Immutable after construction.
    """

    def __init__(self, w):
        self.grid = w.grid
        self.q = w.q
        x = w.values
        outer = np.einsum("in,jn->nij", x, x)
        prefix = np.zeros((self.grid.n, self.q, self.q))
        prefix[1:] = np.cumsum(0.5 * self.grid.dt * (outer[1:] + outer[:-1]), axis=0)
        prefix.setflags(write=False)
        self.prefix = prefix

    def _window_steps(self, T):
        m = int(round(T / self.grid.dt))
        if m < 1:
            raise RangeError(f"window length {T} spans no grid steps (dt={self.grid.dt})")
        if m > self.grid.n - 1:
            raise RangeError(f"window length {T} exceeds the grid span {self.grid.span}")
        return m

    def _start_range(self, T, t_tail):
        """Grid indices of window starts in ``[t_tail, horizon - T]``."""
        m = self._window_steps(T)
        j0 = max(self.grid.index(t_tail), 0)
        j1 = self.grid.n - 1 - m
        if j0 > j1:
            raise RangeError(
                f"no window of length {m * self.grid.dt} starts after t={t_tail} "
                f"on a grid ending at {self.grid.t_end}")
        return m, j0, j1

    def window_gram(self, t, T):
        """Average of ``w w^T`` over ``[t, t+T]`` (both rounded to the grid)."""
        m = self._window_steps(T)
        j = self.grid.index(t)
        if j < 0 or j + m > self.grid.n - 1:
            raise RangeError(f"window [{t}, {t + T}] leaves the grid")
        return (self.prefix[j + m] - self.prefix[j]) / (m * self.grid.dt)

    def window_grams(self, T, t_tail=None):
        """All window Grams of length ``T`` starting at or after ``t_tail``.

        Returns ``(starts, grams)`` with ``grams`` of shape ``(N, q, q)``.
        """
        m, j0, j1 = self._start_range(T, self.grid.t0 if t_tail is None else t_tail)
        grams = (self.prefix[j0 + m:j1 + m + 1] - self.prefix[j0:j1 + 1]) / (m * self.grid.dt)
        return self.grid.t0 + self.grid.dt * np.arange(j0, j1 + 1), grams

    def directional_energy(self, alpha, T, t_tail=None):
        """``alpha^T M(t,T) alpha / |alpha|^2`` for every admissible window start."""
        alpha = _direction(alpha, self.q)
        m, j0, j1 = self._start_range(T, self.grid.t0 if t_tail is None else t_tail)
        s = np.einsum("i,nij,j->n", alpha, self.prefix, alpha)
        energy = (s[j0 + m:j1 + m + 1] - s[j0:j1 + 1]) / (m * self.grid.dt)
        starts = self.grid.t0 + self.grid.dt * np.arange(j0, j1 + 1)
        return starts, energy / (alpha @ alpha)

    def rounded_T(self, T):
        return self._window_steps(T) * self.grid.dt

    def tail_gram(self, t_tail):
        """Average of ``w w^T`` over ``[t_tail, horizon]``."""
        j = max(self.grid.index(t_tail), 0)
        if j >= self.grid.n - 1:
            raise RangeError(f"tail start {t_tail} leaves no samples before {self.grid.t_end}")
        span = (self.grid.n - 1 - j) * self.grid.dt
        return (self.prefix[-1] - self.prefix[j]) / span


def build_gram_sweep(w):
    return GramSweep(w)


def _direction(alpha, q):
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.shape != (q,):
        raise InputError(f"direction must have length {q}, got shape {alpha.shape}")
    if not np.any(alpha) or not np.all(np.isfinite(alpha)):
        raise InputError("direction must be finite and non-zero")
    return alpha


@dataclass(frozen=True)
class PEVerdict:
    """Outcome of a PE test over the windows ``[t_tail, horizon - T]``.

    ``beta_star`` is the worst window's excitation level and
    ``argmin_window`` the start of that window.  ``alpha`` is ``None`` for
    the matrix test.
    """

    passed: bool
    beta_star: float
    beta: float
    T: float
    t_tail: float
    argmin_window: float
    alpha: tuple | None = None

    def to_dict(self):
        return {
            "alpha": None if self.alpha is None else list(self.alpha),
            "T": self.T,
            "t_tail": self.t_tail,
            "beta": self.beta,
            "beta_star": self.beta_star,
            "pass": self.passed,
            "argmin_window": self.argmin_window,
        }

    @classmethod
    def from_dict(cls, d):
        alpha = d.get("alpha")
        return cls(bool(d["pass"]), float(d["beta_star"]), float(d["beta"]), float(d["T"]),
                   float(d["t_tail"]), float(d["argmin_window"]),
                   None if alpha is None else tuple(float(a) for a in alpha))


def _verdict(starts, levels, beta, T, t_tail, alpha=None):
    k = int(np.argmin(levels))
    beta_star = float(levels[k])
    return PEVerdict(bool(beta_star >= beta), beta_star, float(beta), float(T),
                     float(starts[0]), float(starts[k]),
                     None if alpha is None else tuple(float(a) for a in alpha))


def matrix_pe_test(sweep, T, t_tail, beta):
    """Smallest eigenvalue of the window Gram, minimised over window starts."""
    if T <= 0:
        raise InputError("window length must be positive")
    starts, grams = sweep.window_grams(T, t_tail)
    if sweep.q == 0:
        levels = np.full(starts.size, np.inf)
    else:
        levels = np.linalg.eigvalsh(grams)[:, 0]
    return _verdict(starts, levels, beta, sweep.rounded_T(T), t_tail)


def directional_pe_test(sweep, alpha, T, t_tail, beta):
    """PE test of the scalar signal ``alpha^T w``, normalised by ``|alpha|^2``.

    The normalisation makes the verdict invariant under ``alpha -> c*alpha``.
    """
    if T <= 0:
        raise InputError("window length must be positive")
    alpha = _direction(alpha, sweep.q)
    starts, levels = sweep.directional_energy(alpha, T, t_tail)
    return _verdict(starts, levels, beta, sweep.rounded_T(T), t_tail, alpha)


@dataclass(frozen=True)
class ExcitationTimes:
    """Grid-aligned window starts at which ``w`` is excited along ``alpha``.

    ``max_gap`` is the largest spacing between consecutive qualifying
    starts (``inf`` when fewer than two qualify); ``last`` is ``None`` when
    nothing qualifies.
    """

    alpha: tuple
    beta: float
    T: float
    times: np.ndarray
    candidates: np.ndarray = field(repr=False)
    max_gap: float
    last: float | None

    @property
    def gaps(self):
        return np.diff(self.times)

    def inactivity_gaps(self, dt):
        """Gaps that are real breaks in excitation, not consecutive grid points."""
        g = self.gaps
        return g[g > 1.5 * dt]

    def to_rows(self):
        """``(t, qualifies)`` rows over every admissible window start."""
        q = np.isin(self.candidates, self.times)
        return list(zip(self.candidates.tolist(), q.astype(int).tolist()))


def excitation_times(sweep, alpha, beta, T):
    """All window starts ``t`` with ``alpha^T M(t,T) alpha >= beta |alpha|^2``."""
    alpha = _direction(alpha, sweep.q)
    starts, levels = sweep.directional_energy(alpha, T)
    times = starts[levels >= beta]
    if times.size >= 2:
        max_gap = float(np.max(np.diff(times)))
    else:
        max_gap = float("inf")
    last = float(times[-1]) if times.size else None
    return ExcitationTimes(tuple(float(a) for a in alpha), float(beta), sweep.rounded_T(T),
                           times, starts, max_gap, last)


PERSISTENT = "persistent"
TERMINATING = "terminating"
IRREGULAR = "irregular"


@dataclass(frozen=True)
class RecurrenceClass:
    label: str
    evidence: dict

    def to_dict(self):
        return {"label": self.label, "evidence": self.evidence}


def default_beta_grid(sweep, alpha, n=5):
    """Log-spaced levels from 1e-4 to 1 times the mean power of ``alpha^T w``."""
    alpha = _direction(alpha, sweep.q)
    G = sweep.tail_gram(sweep.grid.t0)
    power = float(alpha @ G @ alpha / (alpha @ alpha))
    return (power * np.logspace(-4, 0, n)).tolist()


def default_T_grid(grid, n=5):
    """Log-spaced window lengths spanning ``[10 dt, horizon/8]``."""
    lo, hi = 10 * grid.dt, grid.span / 8
    if hi <= lo:
        raise RangeError("horizon too short for the default window grid")
    return np.geomspace(lo, hi, n).tolist()


def _gaps_grow(gaps):
    if gaps.size < 2:
        return False
    k = max(1, gaps.size // 3)
    return bool(np.max(gaps[-k:]) >= 2 * np.max(gaps[:k]))


def classify_recurrence(sweep, alpha, beta_grid=None, T_grid=None, horizon_split=0.1):
    """Sort the excitation along ``alpha`` into persistent / terminating / irregular.

    With ``T_d = horizon_split * horizon``:

    * persistent: for some probed ``(beta, T)`` the qualifying starts have
      ``max_gap <= T_d`` and the last one lies within ``T_d`` of the final
      admissible start;
    * terminating: for every probed ``(beta, T)`` the last qualifying start
      (if any) precedes ``t0 + T_d``;
    * irregular: otherwise.  ``evidence["probes"]`` keeps the inactivity gap
      sequence of each probe and whether it grows (largest gap in the last
      third at least twice that of the first third).

    This is finite-horizon evidence, not a decision procedure.
    """
    if not 0 < horizon_split < 1:
        raise InputError("horizon_split must lie in (0, 1)")
    alpha = _direction(alpha, sweep.q)
    if beta_grid is None:
        beta_grid = default_beta_grid(sweep, alpha)
    if T_grid is None:
        T_grid = default_T_grid(sweep.grid)
    if not len(beta_grid) or not len(T_grid):
        raise InputError("probing grids must be non-empty")
    grid = sweep.grid
    T_d = horizon_split * grid.span
    cutoff = grid.t0 + T_d

    probes = []
    persistent = None
    all_stop = True
    for T in T_grid:
        T_r = sweep.rounded_T(T)
        last_start = grid.t_end - T_r
        for beta in beta_grid:
            if beta <= 0:
                # zero level qualifies every window and says nothing
                continue
            ex = excitation_times(sweep, alpha, beta, T)
            gaps = ex.inactivity_gaps(grid.dt)
            dense = (ex.last is not None and ex.max_gap <= T_d
                     and ex.last >= last_start - T_d
                     and ex.times[0] <= grid.t0 + T_d)
            stops = ex.last is None or ex.last < cutoff
            all_stop = all_stop and stops
            probe = {
                "beta": float(beta),
                "T": T_r,
                "n_times": int(ex.times.size),
                "last": ex.last,
                "max_gap": ex.max_gap if np.isfinite(ex.max_gap) else None,
                "gaps": gaps.tolist(),
                "gaps_grow": _gaps_grow(gaps),
                "relatively_dense": bool(dense),
            }
            probes.append(probe)
            if dense and persistent is None:
                persistent = probe
    evidence = {"T_d": T_d, "cutoff": cutoff, "probes": probes}
    if persistent is not None:
        evidence["witness"] = {"beta": persistent["beta"], "T": persistent["T"], "T_d": T_d}
        return RecurrenceClass(PERSISTENT, evidence)
    if all_stop:
        return RecurrenceClass(TERMINATING, evidence)
    evidence["gaps_grow"] = any(p["gaps_grow"] for p in probes)
    return RecurrenceClass(IRREGULAR, evidence)
