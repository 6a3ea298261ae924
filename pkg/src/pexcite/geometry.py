"""Subspace algebra, projection pairs and the PE decomposition.

Subspaces are stored by an orthonormal basis.  A projection pair
``(U, D)`` is an insertion map ``U`` (full column rank, image = the
subspace) together with a natural projection ``D`` (full row rank, kernel =
the complementary subspace) such that ``D @ U = I``; ``U @ D`` is then the
oblique projector onto one subspace along the other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import GeometryError, InputError
from .signals import SampledSignal

RANK_TOL = 1e-10
MAX_CONDITION = 1e8


def _as_basis(rows, q):
    basis = np.array(rows, dtype=float)
    if basis.size == 0:
        return np.zeros((q, 0))
    if basis.ndim == 1:
        basis = basis.reshape(q, -1)
    if basis.shape[0] != q:
        raise InputError(f"basis has {basis.shape[0]} rows, expected {q}")
    return basis


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of R^q given by a ``q x r`` orthonormal basis."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        q = int(self.ambient_dim)
        basis = _as_basis(self.basis, q)
        if basis.shape[1] > q:
            raise InputError("a subspace cannot have more basis vectors than its dimension")
        if basis.shape[1] and not np.allclose(basis.T @ basis, np.eye(basis.shape[1]), atol=1e-10):
            raise InputError("subspace basis must have orthonormal columns")
        basis.setflags(write=False)
        object.__setattr__(self, "ambient_dim", q)
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, q):
        return cls(q, np.zeros((q, 0)))

    @classmethod
    def full(cls, q):
        return cls(q, np.eye(q))

    @property
    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the subspace."""
        return self.basis @ self.basis.T

    def contains(self, x, tol=1e-8):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.projector @ x) <= tol * max(1.0, np.linalg.norm(x))

    def to_dict(self):
        return {"ambient_dim": self.ambient_dim, "basis": self.basis.tolist()}

    @classmethod
    def from_dict(cls, d):
        q = int(d["ambient_dim"])
        basis = _as_basis(d["basis"], q)
        if basis.shape[1]:
            # re-orthonormalise so that hand-written or rounded input is accepted
            return span(basis.T)
        return cls.zero(q)

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, dim={self.dim})"


def span(vectors, rank_tol=RANK_TOL, ambient_dim=None):
    """Orthonormal basis of the span of ``vectors`` (an iterable of q-vectors).

    Singular values below ``rank_tol * sigma_max`` are treated as zero.
    """
    vecs = [np.asarray(v, dtype=float).ravel() for v in vectors]
    if not vecs:
        if ambient_dim is None:
            raise InputError("ambient_dim is required for an empty span")
        return Subspace.zero(ambient_dim)
    A = np.column_stack(vecs)
    if ambient_dim is not None and A.shape[0] != ambient_dim:
        raise InputError("vectors do not live in the requested ambient space")
    return column_space(A, rank_tol)


def column_space(A, rank_tol=RANK_TOL, scale=None):
    """Range of ``A``; singular values below ``rank_tol * scale`` count as zero.

    ``scale`` defaults to the largest singular value of ``A``.
    """
    A = np.asarray(A, dtype=float)
    q = A.shape[0]
    if A.size == 0:
        return Subspace.zero(q)
    if not np.all(np.isfinite(A)):
        raise InputError("vectors must be finite")
    u, s, _ = np.linalg.svd(A, full_matrices=False)
    ref = s[0] if scale is None else max(scale, s[0] if s.size else 0.0)
    if s.size == 0 or ref == 0:
        return Subspace.zero(q)
    r = int(np.sum(s > rank_tol * ref))
    return Subspace(q, u[:, :r])


def complement(S):
    """Orthogonal complement."""
    q = S.ambient_dim
    if S.dim == 0:
        return Subspace.full(q)
    if S.dim == q:
        return Subspace.zero(q)
    u, _, _ = np.linalg.svd(S.basis, full_matrices=True)
    return Subspace(q, u[:, S.dim:])


def _same_ambient(S1, S2):
    if S1.ambient_dim != S2.ambient_dim:
        raise InputError(f"ambient dimensions differ: {S1.ambient_dim} vs {S2.ambient_dim}")


def subspace_sum(S1, S2, rank_tol=RANK_TOL):
    _same_ambient(S1, S2)
    return column_space(np.hstack([S1.basis, S2.basis]), rank_tol)


def subspace_intersect(S1, S2, rank_tol=RANK_TOL):
    """Intersection computed as the complement of the sum of complements."""
    _same_ambient(S1, S2)
    return complement(subspace_sum(complement(S1), complement(S2), rank_tol))


def principal_angles(S1, S2):
    """Principal angles (radians, descending) between equal-dimension subspaces."""
    _same_ambient(S1, S2)
    if S1.dim != S2.dim:
        raise InputError("principal angles need subspaces of equal dimension")
    if S1.dim == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(S1.basis, S2.basis)


def max_angle(S1, S2):
    """Largest principal angle; ``pi/2`` when the dimensions differ."""
    _same_ambient(S1, S2)
    if S1.dim != S2.dim:
        return np.pi / 2
    a = principal_angles(S1, S2)
    return float(a.max()) if a.size else 0.0


def subspaces_equal(S1, S2, tol=1e-8):
    return max_angle(S1, S2) <= tol


@dataclass(frozen=True, eq=False)
class ProjectionPair:
    """Insertion map ``U`` (q x r) and natural projection ``D`` (r x q), ``D U = I``."""

    U: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        U = np.atleast_2d(np.asarray(self.U, dtype=float))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        if U.shape[::-1] != D.shape:
            raise InputError(f"U {U.shape} and D {D.shape} are not compatible")
        # loose sanity bound: pairs near the conditioning limit lose digits
        if U.shape[1] and not np.allclose(D @ U, np.eye(U.shape[1]), rtol=0, atol=1e-6):
            raise InputError("D @ U must be the identity")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "D", D)

    @property
    def rank(self) -> int:
        return self.U.shape[1]


def projection_pair(W, V):
    """Projection pairs ``(U_W, D_V)`` and ``(U_V, D_W)`` for ``W (+) V = R^q``.

    ``U_W`` and ``U_V`` are the stored orthonormal bases; the natural
    projections are the row blocks of ``[U_W U_V]^{-1}``.
    """
    _same_ambient(W, V)
    q = W.ambient_dim
    if W.dim + V.dim != q:
        raise GeometryError(
            f"dim W + dim V = {W.dim} + {V.dim} does not equal the ambient dimension {q}")
    M = np.hstack([W.basis, V.basis])
    cond = np.linalg.cond(M) if q else 1.0
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise GeometryError(
            f"subspaces are not complementary (condition number {cond:.3g})", cond)
    Minv = np.linalg.inv(M) if q else np.zeros((0, 0))
    D_V = Minv[:W.dim]
    D_W = Minv[W.dim:]
    return ProjectionPair(W.basis, D_V), ProjectionPair(V.basis, D_W)


@dataclass(frozen=True, eq=False)
class ObliqueProjector:
    """Projector ``P`` onto ``onto`` along ``along``."""

    P: np.ndarray
    onto: Subspace
    along: Subspace

    @property
    def complementary(self) -> np.ndarray:
        """``I - P``, the projector onto ``along`` along ``onto``."""
        return np.eye(self.P.shape[0]) - self.P


def _null_space(A, q):
    if A.size == 0:
        return Subspace.full(q)
    ns = scipy.linalg.null_space(A, rcond=RANK_TOL)
    return Subspace(q, ns) if ns.size else Subspace.zero(q)


def oblique_projector(pair):
    P = pair.U @ pair.D
    q = P.shape[0]
    return ObliqueProjector(P, column_space(pair.U), _null_space(pair.D, q))


@dataclass(frozen=True, eq=False)
class PEDecomposition:
    """``w = U_W w_pe + U_V w_perp`` for a complementary pair ``W (+) V``."""

    W: Subspace
    V: Subspace
    U_W: np.ndarray
    U_V: np.ndarray
    w_pe: SampledSignal
    w_perp: SampledSignal

    def reconstruct(self):
        return self.U_W @ self.w_pe.values + self.U_V @ self.w_perp.values

    def residual(self, w):
        """Largest per-sample reconstruction error relative to ``max |w(t)|``."""
        err = np.linalg.norm(self.reconstruct() - w.values, axis=0).max()
        scale = np.linalg.norm(w.values, axis=0).max()
        return float(err / scale) if scale > 0 else float(err)


def pe_decompose(w, W, V):
    """Split ``w`` into coordinates ``D_V w`` on ``W`` and ``D_W w`` on ``V``.

    This only performs the algebra; whether the parts are PE is for the
    excitation tests to say.
    """
    if W.ambient_dim != w.q:
        raise InputError(f"subspaces live in R^{W.ambient_dim}, signal in R^{w.q}")
    pair_W, pair_V = projection_pair(W, V)
    w_pe = SampledSignal(w.grid, pair_W.D @ w.values, w.continuity_tag)
    w_perp = SampledSignal(w.grid, pair_V.D @ w.values, w.continuity_tag)
    return PEDecomposition(W, V, pair_W.U, pair_V.U, w_pe, w_perp)


def map_subspace(L, W, rank_tol=RANK_TOL):
    """Image ``L W``."""
    L = np.atleast_2d(np.asarray(L, dtype=float))
    if L.shape[1] != W.ambient_dim:
        raise InputError(f"map has {L.shape[1]} columns, subspace lives in R^{W.ambient_dim}")
    if W.dim == 0:
        return Subspace.zero(L.shape[0])
    # judge rank against |L|, so that L annihilating W gives {0}
    return column_space(L @ W.basis, rank_tol, scale=np.linalg.norm(L, 2))


def random_subspace(q, r, rng):
    """Uniformly distributed ``r``-dimensional subspace of R^q."""
    if r == 0:
        return Subspace.zero(q)
    Q, _ = np.linalg.qr(rng.standard_normal((q, r)))
    return Subspace(q, Q)


def random_unit_in(S, rng, n=1):
    """``n`` uniformly distributed unit vectors in ``S`` as rows."""
    if S.dim == 0:
        return np.zeros((0, S.ambient_dim))
    c = rng.standard_normal((n, S.dim))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return c @ S.basis.T
