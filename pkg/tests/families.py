"""Constructed regular regressors with a known PE subspace.

``w = U_W M s(t) + U_V c exp(-t)``: distinct-frequency sinusoids inside a
random subspace W plus a vanishing part inside a random complement V.
"""

from dataclasses import dataclass

import numpy as np

from pexcite.excitation import GramSweep, matrix_pe_test
from pexcite.geometry import Subspace, pe_decompose, random_subspace
from pexcite.signals import (SampledSignal, TimeGrid, add, constant, envelope_scale,
                             sample_sinusoid_mix)

FREQS = np.array([1.0, 1.6, 2.2, 2.8, 3.4])
HORIZON = 80.0
WINDOW = 20.0
DT = 1e-3


@dataclass
class Instance:
    w: SampledSignal
    W: Subspace
    V: Subspace
    T: float
    t_tail: float
    beta: float
    rng: np.random.Generator


def _well_conditioned(rng, shape, limit):
    while True:
        A = rng.standard_normal(shape)
        if np.linalg.cond(A) < limit:
            return A


def regular_instance(seed, dt=DT):
    rng = np.random.default_rng(seed)
    q = int(rng.integers(2, 7))
    r = int(rng.integers(1, q))
    W = random_subspace(q, r, rng)
    while True:
        V = random_subspace(q, q - r, rng)
        if np.linalg.cond(np.hstack([W.basis, V.basis])) < 20:
            break
    grid = TimeGrid.from_horizon(HORIZON, dt)
    freqs = rng.choice(FREQS, size=r, replace=False)
    phases = rng.uniform(0, 2 * np.pi, size=r)
    M = _well_conditioned(rng, (r, r), 5.0)
    M /= np.linalg.svd(M, compute_uv=False).min()
    pe_part = sample_sinusoid_mix(freqs, np.ones(r), phases, q, W.basis @ M, grid)
    c = rng.uniform(1.0, 3.0, size=q - r) * rng.choice([-1, 1], size=q - r)
    vanishing = envelope_scale(constant(V.basis @ c, grid), 1.0)
    w = add(pe_part, vanishing)
    t_tail = HORIZON / 2
    dec = pe_decompose(w, W, V)
    beta = matrix_pe_test(GramSweep(dec.w_pe), WINDOW, t_tail, 0.0).beta_star
    return Instance(w, W, V, WINDOW, t_tail, beta, rng)
