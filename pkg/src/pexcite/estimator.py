"""Estimate the PE subspace of sampled data and look for non-regularity.

The estimate is two-stage: eigenvectors of the tail-averaged Gram matrix
propose directions and a directional PE test accepts or rejects each one.
Averaging alone is not enough: the switching pair ``(gamma, 1-gamma)`` has
a full-rank average Gram matrix but no two-dimensional PE subspace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import InputError
from .excitation import GramSweep, directional_pe_test
from .geometry import Subspace, complement, random_unit_in, span

CONSISTENT = "consistent-with-regular"
NON_REGULAR = "non-regular-evidence"

MIXED_MIN_WEIGHT = 0.5
_MAX_REFINED = 4
_DISTINCT_START = 0.2
_LINE_TOL = 0.05


@dataclass(frozen=True)
class Witness:
    """A probed direction whose verdict contradicts a subspace non-PE set.

    ``kind`` is one of ``complement-passes`` (a direction outside the
    estimated PE subspace is excited), ``pe-subspace-fails`` or
    ``mixed-fails``.
    """

    direction: tuple
    kind: str
    beta_star: float

    def to_dict(self):
        return {"direction": list(self.direction), "kind": self.kind, "beta_star": self.beta_star}


@dataclass(frozen=True)
class RegularityReport:
    flag: str
    witnesses: list
    n_dirs: int
    seed: int
    counts: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "flag": self.flag,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "n_dirs": self.n_dirs,
            "seed": self.seed,
            "counts": self.counts,
        }


@dataclass(frozen=True)
class PEReport:
    W_hat: Subspace
    q_pe: int
    beta_used: float
    T_used: float
    t_tail: float
    eigenvalues: list
    per_direction: list
    regular_evidence: RegularityReport | None
    complement_verdicts: list = field(default_factory=list)

    @property
    def flagged(self):
        """True when a complement direction passed or the diagnostic found witnesses."""
        if any(v.passed for v in self.complement_verdicts):
            return True
        return self.regular_evidence is not None and self.regular_evidence.flag == NON_REGULAR

    def to_dict(self):
        return {
            "W_hat": self.W_hat.to_dict(),
            "q_pe": self.q_pe,
            "beta_used": self.beta_used,
            "T_used": self.T_used,
            "t_tail": self.t_tail,
            "eigenvalues": list(self.eigenvalues),
            "per_direction": [v.to_dict() for v in self.per_direction],
            "complement_verdicts": [v.to_dict() for v in self.complement_verdicts],
            "flagged": self.flagged,
            "regular_evidence": (None if self.regular_evidence is None
                                 else self.regular_evidence.to_dict()),
        }


def _sweep_for(w, sweep):
    return GramSweep(w) if sweep is None else sweep


def estimate_pe_subspace(w, T, t_tail, beta, eig_tol=1e-6, n_dirs=50, seed=0, sweep=None):
    """Estimate the PE subspace and degree of PE of ``w``.

    Parameters
    ----------
    w : SampledSignal
    T, t_tail, beta : float
        Window length, tail start and the excitation level a direction has
        to reach in every window after ``t_tail`` to count as PE.
    eig_tol : float
        Eigenvectors of the tail-averaged Gram matrix with eigenvalue below
        ``eig_tol * lambda_max`` are not proposed.
    n_dirs, seed :
        Passed to :func:`regularity_diagnostic`; ``n_dirs=0`` skips it.

    Returns
    -------
    PEReport
    """
    if beta <= 0:
        raise InputError("beta must be positive")
    sweep = _sweep_for(w, sweep)
    G = sweep.tail_gram(t_tail)
    vals, vecs = np.linalg.eigh(G)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    lam_max = vals[0] if vals.size else 0.0

    kept, verdicts = [], []
    if lam_max > 0:
        for lam, v in zip(vals, vecs.T):
            if lam < eig_tol * lam_max:
                break
            verdict = directional_pe_test(sweep, v, T, t_tail, beta)
            if verdict.passed:
                kept.append(v)
                verdicts.append(verdict)
    W_hat = span(kept, ambient_dim=w.q)

    comp = [directional_pe_test(sweep, c, T, t_tail, beta) for c in complement(W_hat).basis.T]
    evidence = None
    if n_dirs:
        evidence = regularity_diagnostic(w, W_hat, n_dirs, seed, beta, T, t_tail, sweep=sweep)
    return PEReport(W_hat, W_hat.dim, float(beta), sweep.rounded_T(T), float(t_tail),
                    vals.tolist(), verdicts, evidence, comp)


def probe_nonpe_set(w, directions, beta, T, t_tail, sweep=None):
    """Directional verdicts; the failing directions sample the non-PE set."""
    sweep = _sweep_for(w, sweep)
    out = []
    for d in directions:
        d = np.asarray(d, dtype=float)
        if not np.any(d):
            raise InputError("probe directions must be non-zero")
        out.append((d, directional_pe_test(sweep, d, T, t_tail, beta)))
    return out


def _worst_levels(grams, dirs):
    """Worst-window excitation level for each unit row of ``dirs``."""
    if len(dirs) == 0:
        return np.zeros(0)
    flat = grams.reshape(grams.shape[0], -1)
    return np.array([(flat @ np.outer(d, d).ravel()).min() for d in dirs])


def _refine(grams, S, start, maximize):
    """Locally push ``start`` within ``S`` to the most (or least) excited direction."""
    B = S.basis
    if S.dim <= 1:
        return start
    reduced = np.einsum("ia,nij,jb->nab", B, grams, B).reshape(grams.shape[0], -1)

    def level(c):
        n2 = c @ c
        if n2 == 0:
            return 0.0
        v = (reduced @ np.outer(c, c).ravel()).min() / n2
        return -v if maximize else v

    res = minimize(level, B.T @ start, method="Nelder-Mead",
                   options={"xatol": 1e-7, "fatol": 1e-14, "maxiter": 400 * S.dim})
    x = B @ res.x
    return x / np.linalg.norm(x)


def _line_angle(a, b):
    c = abs(float(a @ b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(np.arccos(min(1.0, c)))


def _dedupe(witnesses):
    out = []
    for w in witnesses:
        d = np.asarray(w.direction)
        if all(_line_angle(d, np.asarray(o.direction)) > _LINE_TOL for o in out):
            out.append(w)
    return out


def regularity_diagnostic(w, W_hat, n_dirs, seed, beta, T, t_tail, sweep=None):
    """Look for directions that contradict a subspace-shaped non-PE set.

    Random unit directions are drawn in ``W_hat`` (expected to pass), in its
    orthogonal complement (expected to fail) and mixed directions whose
    ``W_hat`` component has norm at least 0.5 (expected to pass, since
    adding a non-PE part to a PE one keeps it PE for regular regressors).
    Violations are refined locally to the most telling direction and
    reported as witnesses.  The result is evidence, not proof.
    """
    if n_dirs < 1:
        raise InputError("n_dirs must be at least 1")
    sweep = _sweep_for(w, sweep)
    rng = np.random.default_rng(seed)
    C = complement(W_hat)
    _, grams = sweep.window_grams(T, t_tail)

    dirs_W = random_unit_in(W_hat, rng, n_dirs)
    dirs_C = random_unit_in(C, rng, n_dirs)
    if W_hat.dim and C.dim:
        u = random_unit_in(W_hat, rng, n_dirs)
        v = random_unit_in(C, rng, n_dirs)
        a = rng.uniform(MIXED_MIN_WEIGHT, 1.0, size=(n_dirs, 1))
        dirs_M = a * u + np.sqrt(1 - a ** 2) * v
    else:
        dirs_M = np.zeros((0, w.q))

    lev_W = _worst_levels(grams, dirs_W)
    lev_C = _worst_levels(grams, dirs_C)
    lev_M = _worst_levels(grams, dirs_M)

    raw = []
    for d, lev in zip(dirs_C, lev_C):
        if lev >= beta:
            raw.append(("complement-passes", d, lev, C, True))
    for d, lev in zip(dirs_W, lev_W):
        if lev < beta:
            raw.append(("pe-subspace-fails", d, lev, W_hat, False))
    for d, lev in zip(dirs_M, lev_M):
        if lev < beta:
            raw.append(("mixed-fails", d, lev, None, False))

    # most severe first: highest level for passes, lowest for failures
    raw.sort(key=lambda r: -r[2] if r[4] else r[2])
    starts = []
    for r in raw:
        if len(starts) == _MAX_REFINED:
            break
        if all(_line_angle(r[1], s[1]) > _DISTINCT_START for s in starts):
            starts.append(r)
    witnesses = []
    for kind, d, lev, S, maximize in starts:
        if S is not None:
            d = _refine(grams, S, d, maximize)
            lev = _worst_levels(grams, [d])[0]
        witnesses.append(Witness(tuple(float(x) for x in d), kind, float(lev)))
    witnesses = _dedupe(witnesses)

    counts = {
        "pe_subspace": [int(np.sum(lev_W >= beta)), len(lev_W)],
        "complement": [int(np.sum(lev_C >= beta)), len(lev_C)],
        "mixed": [int(np.sum(lev_M >= beta)), len(lev_M)],
        "violations": len(raw),
    }
    flag = NON_REGULAR if witnesses else CONSISTENT
    return RegularityReport(flag, witnesses, int(n_dirs), int(seed), counts)
