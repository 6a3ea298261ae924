"""Gradient adaptive law under the static error model.

The estimate follows ``psi_hat' = -Gamma w(t) e`` with
``e = w(t)^T (psi_hat - psi)``.  The law is linear in the parameter error,
so each integration step is a ``q x q`` transition matrix; those matrices
are built for all steps at once and then applied in sequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InputError, RangeError


@dataclass(frozen=True, eq=False)
class AdaptiveProblem:
    """Regressor, true parameter, initial estimate and adaptation gain.

    ``gamma_gain`` may be given as a scalar (meaning ``g * I``).  It must be
    symmetric positive semidefinite; a zero gain freezes the estimate.
    """

    w: object
    psi_true: np.ndarray
    psi_hat0: np.ndarray
    gamma_gain: np.ndarray

    def __post_init__(self):
        q = self.w.q
        psi = np.atleast_1d(np.asarray(self.psi_true, dtype=float))
        psi0 = np.atleast_1d(np.asarray(self.psi_hat0, dtype=float))
        G = np.asarray(self.gamma_gain, dtype=float)
        if G.ndim == 0:
            G = G * np.eye(q)
        if psi.shape != (q,) or psi0.shape != (q,) or G.shape != (q, q):
            raise InputError(f"parameter vectors and gain must match the regressor dimension {q}")
        if not np.allclose(G, G.T, rtol=0, atol=1e-12):
            raise InputError("adaptation gain must be symmetric")
        if np.linalg.eigvalsh(G)[0] < -1e-12:
            raise InputError("adaptation gain must be positive semidefinite")
        object.__setattr__(self, "psi_true", psi)
        object.__setattr__(self, "psi_hat0", psi0)
        object.__setattr__(self, "gamma_gain", G)

    @property
    def is_isotropic(self):
        G = self.gamma_gain
        return np.allclose(G, G[0, 0] * np.eye(G.shape[0]), rtol=0, atol=1e-12)


@dataclass(frozen=True, eq=False)
class RunResult:
    times: np.ndarray
    trajectory: np.ndarray
    error_trace: np.ndarray
    integrator: str
    dt: float

    @property
    def psi_hat_final(self):
        return self.trajectory[-1]

    def to_rows(self):
        """``(t, psi_hat_1..q, e)`` rows."""
        return np.column_stack([self.times, self.trajectory, self.error_trace])


def _interp(w, t):
    """Linear interpolation of ``w`` at times ``t``; returns shape (len(t), q)."""
    grid_t = w.times
    return np.column_stack([np.interp(t, grid_t, row) for row in w.values])


def _step_matrices(G, w0, wm, w1, h, integrator):
    """Per-step transition matrices for ``x' = -G w w^T x``."""
    A0 = -np.einsum("ij,nj,nk->nik", G, w0, w0)
    q = G.shape[0]
    I = np.eye(q)
    if integrator == "euler":
        return I + h * A0
    Am = -np.einsum("ij,nj,nk->nik", G, wm, wm)
    A1 = -np.einsum("ij,nj,nk->nik", G, w1, w1)
    K1 = A0
    K2 = Am + 0.5 * h * Am @ K1
    K3 = Am + 0.5 * h * Am @ K2
    K4 = A1 + h * A1 @ K3
    return I + (h / 6.0) * (K1 + 2 * K2 + 2 * K3 + K4)


def simulate_gradient_law(problem, dt, t_end, integrator="rk4"):
    """Integrate the gradient law from the regressor's first grid time to ``t_end``.

    The regressor is interpolated linearly between its grid points, so the
    integration step does not have to match the sampling step (it must not
    be finer than it).

    Raises
    ------
    RangeError
        ``t_end`` lies beyond the regressor's horizon.
    DivergenceError
        The state became non-finite; ``.step`` is the first bad step.
    """
    if integrator not in ("rk4", "euler"):
        raise InputError(f"unknown integrator {integrator!r}")
    w = problem.w
    if dt <= 0:
        raise InputError("integration step must be positive")
    if w.grid.dt > dt * (1 + 1e-9):
        raise InputError("regressor is sampled more coarsely than the integration step")
    t0 = w.grid.t0
    if t_end > w.grid.t_end + 1e-9 * max(1.0, abs(w.grid.t_end)) or t_end <= t0:
        raise RangeError(f"t_end={t_end} outside the regressor horizon [{t0}, {w.grid.t_end}]")
    n_steps = int(round((t_end - t0) / dt))
    times = t0 + dt * np.arange(n_steps + 1)
    times[-1] = min(times[-1], w.grid.t_end)
    w_nodes = _interp(w, times)
    w_mid = _interp(w, np.minimum(times[:-1] + 0.5 * dt, w.grid.t_end))

    M = _step_matrices(problem.gamma_gain, w_nodes[:-1], w_mid, w_nodes[1:], dt, integrator)
    x = np.empty((n_steps + 1, w.q))
    x[0] = problem.psi_hat0 - problem.psi_true
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            x[k + 1] = M[k] @ x[k]
    bad = ~np.all(np.isfinite(x), axis=1)
    if bad.any():
        step = int(np.argmax(bad))
        raise DivergenceError(f"state became non-finite at step {step} (t={times[step]})", step)
    err = np.einsum("ni,ni->n", w_nodes, x)
    traj = x + problem.psi_true
    return RunResult(times, traj, err, integrator, float(dt))


def lyapunov_trace(result, problem):
    """``V(t) = psi_tilde^T Gamma^{-1} psi_tilde`` along the run (needs an invertible gain)."""
    G = problem.gamma_gain
    if np.linalg.eigvalsh(G)[0] <= 0:
        raise InputError("the Lyapunov function needs a positive definite gain")
    Ginv = np.linalg.inv(G)
    x = result.trajectory - problem.psi_true
    return np.einsum("ni,ij,nj->n", x, Ginv, x)


def check_error_regulation(result, tail_fraction=0.1, tol=1e-2):
    """True iff ``max |e|`` over the last ``tail_fraction`` of the run is at most ``tol``."""
    if not 0 < tail_fraction < 1:
        raise InputError("tail_fraction must lie in (0, 1)")
    t = result.times
    cut = t[-1] - tail_fraction * (t[-1] - t[0])
    return bool(np.max(np.abs(result.error_trace[t >= cut])) <= tol)


def check_affine_set_membership(psi_hat_final, psi_true, W, tol):
    """Is ``psi_hat_final`` in ``psi_true + W^perp``?  Returns ``(member, distance)``.

    The distance is the norm of the orthogonal projection of the
    parameter error onto ``W``.
    """
    diff = np.asarray(psi_hat_final, dtype=float) - np.asarray(psi_true, dtype=float)
    if diff.shape != (W.ambient_dim,):
        raise InputError("parameter vectors do not match the subspace dimension")
    dist = float(np.linalg.norm(W.projector @ diff))
    return dist <= tol, dist


def prior_knowledge_target(psi_o, psi_true, W):
    """Point of ``psi_true + W^perp`` closest to the nominal value ``psi_o``."""
    psi_o = np.asarray(psi_o, dtype=float)
    psi_true = np.asarray(psi_true, dtype=float)
    if psi_o.shape != (W.ambient_dim,) or psi_true.shape != (W.ambient_dim,):
        raise InputError("parameter vectors do not match the subspace dimension")
    return psi_o + W.projector @ (psi_true - psi_o)


@dataclass(frozen=True)
class RetentionReport:
    psi_hat_final: list
    target: list
    gap: float
    tol: float
    passed: bool
    regulated: bool

    def to_dict(self):
        return {
            "psi_hat_final": self.psi_hat_final,
            "target": self.target,
            "gap": self.gap,
            "tol": self.tol,
            "pass": self.passed,
            "error_regulated": self.regulated,
        }


def retention_experiment(problem, W, dt, t_end, tol=1e-2, integrator="rk4"):
    """Start the law at the nominal value and check it ends at the retention target.

    ``problem.psi_hat0`` plays the nominal value.  The gain must be a
    multiple of the identity: with a general gain the untouched component
    of the error is Gamma-orthogonal to ``W`` rather than orthogonal, and
    the limit is a different point of the affine set.
    """
    if not problem.is_isotropic:
        raise InputError("retention needs an isotropic gain g*I")
    result = simulate_gradient_law(problem, dt, t_end, integrator)
    target = prior_knowledge_target(problem.psi_hat0, problem.psi_true, W)
    gap = float(np.linalg.norm(result.psi_hat_final - target))
    report = RetentionReport(result.psi_hat_final.tolist(), target.tolist(), gap, float(tol),
                             gap <= tol, check_error_regulation(result, tol=tol))
    return report, result
