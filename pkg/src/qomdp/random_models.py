"""Random model generators for tests, benchmarks and property checks."""
from __future__ import annotations

import numpy as np

from .channels import ConditionalChannel, Instrument, KrausMap
from .classical import ClassicalMoore, ClassicalPomdp, make_mdp
from .qmath import random_density_matrix, random_hermitian, random_unitary
from .solver import Qomdp
from .transducers import QuantumMealyMachine, QuantumMooreMachine


def random_isometry_kraus(dim: int, n_kraus: int, rng=None) -> list:
    """``n_kraus`` blocks of a random isometry ``C^d -> C^(k d)``; they form a channel."""
    rng = np.random.default_rng(rng)
    G = rng.normal(size=(n_kraus * dim, dim)) + 1j * rng.normal(size=(n_kraus * dim, dim))
    Q, _ = np.linalg.qr(G)
    return [Q[k * dim:(k + 1) * dim] for k in range(n_kraus)]


def random_channel(dim: int, rng=None, rank=None) -> KrausMap:
    """Random channel with ``rank`` Kraus operators (default ``dim**2``, generic full rank)."""
    return KrausMap(random_isometry_kraus(dim, rank or dim * dim, rng))


def random_instrument(dim: int, outcomes, rng=None, kraus_per_outcome=1) -> Instrument:
    outcomes = tuple(outcomes)
    ops = random_isometry_kraus(dim, len(outcomes) * kraus_per_outcome, rng)
    k = kraus_per_outcome
    return Instrument({b: KrausMap(ops[i * k:(i + 1) * k]) for i, b in enumerate(outcomes)},
                      outcomes=outcomes)


def random_projection(dim: int, rng=None) -> np.ndarray:
    """Projection onto a random subspace of random rank (0 to ``dim``)."""
    rng = np.random.default_rng(rng)
    r = int(rng.integers(0, dim + 1))
    U = random_unitary(dim, rng)[:, :r]
    return U @ U.conj().T


def _labels(prefix, n):
    return tuple(f"{prefix}{i}" for i in range(n))


def random_moore(dim: int, n_in=2, n_out=2, rng=None, channel_rank=None) -> QuantumMooreMachine:
    rng = np.random.default_rng(rng)
    ins, outs = _labels("a", n_in), _labels("b", n_out)
    transition = ConditionalChannel(
        {a: random_channel(dim, rng, rank=channel_rank or int(rng.integers(1, dim * dim + 1)))
         for a in ins}, actions=ins)
    output = random_instrument(dim, outs, rng, kraus_per_outcome=int(rng.integers(1, 3)))
    return QuantumMooreMachine(transition, output, random_density_matrix(dim, rng),
                               random_projection(dim, rng))


def random_mealy(dim: int, n_in=2, n_out=2, rng=None) -> QuantumMealyMachine:
    rng = np.random.default_rng(rng)
    ins, outs = _labels("a", n_in), _labels("b", n_out)
    insts = {a: random_instrument(dim, outs, rng, kraus_per_outcome=int(rng.integers(1, 3))) for a in ins}
    return QuantumMealyMachine(insts, random_density_matrix(dim, rng), random_projection(dim, rng),
                               inputs=ins)


def random_qomdp(dim=2, n_actions=2, n_obs=2, gamma=0.9, rng=None) -> Qomdp:
    """Generic QOMDP: full-Kraus-rank channels, one Kraus operator per outcome,
    a random Hermitian state reward."""
    rng = np.random.default_rng(rng)
    acts, obs = _labels("a", n_actions), _labels("b", n_obs)
    transition = ConditionalChannel({a: random_channel(dim, rng) for a in acts}, actions=acts)
    output = random_instrument(dim, obs, rng)
    return Qomdp(transition, output, gamma, random_density_matrix(dim, rng),
                 reward=random_hermitian(dim, rng))


def random_stochastic(n_rows: int, n_cols: int, rng=None, sparsity=0.0) -> np.ndarray:
    """Column-stochastic matrix; each entry is zeroed with probability ``sparsity``
    (a column keeps at least one nonzero entry)."""
    rng = np.random.default_rng(rng)
    M = rng.random((n_rows, n_cols))
    M[rng.random((n_rows, n_cols)) < sparsity] = 0.0
    for j in range(n_cols):
        if M[:, j].sum() == 0:
            M[rng.integers(n_rows), j] = 1.0
    return M / M.sum(axis=0)


def random_classical_moore(n_states: int, n_in=2, n_out=2, rng=None, goal=False,
                           sparsity=0.3) -> ClassicalMoore:
    """Random classical Moore machine; with ``goal`` the last state is an absorbing goal."""
    rng = np.random.default_rng(rng)
    states, ins, outs = _labels("s", n_states), _labels("a", n_in), _labels("b", n_out)
    trans = {}
    for a in ins:
        P = random_stochastic(n_states, n_states, rng, sparsity)
        if goal:
            P[:, -1] = 0.0
            P[-1, -1] = 1.0
        trans[a] = P
    Q = random_stochastic(n_out, n_states, rng, sparsity)
    p0 = random_stochastic(n_states, 1, rng, sparsity)[:, 0]
    return ClassicalMoore(states, ins, outs, trans, Q, p0, goal=states[-1] if goal else None)


def random_mdp(n_states=2, n_actions=2, gamma=0.9, rng=None) -> ClassicalPomdp:
    """Fully observed random MDP with rewards in [-1, 1]."""
    rng = np.random.default_rng(rng)
    trans = {a: random_stochastic(n_states, n_states, rng) for a in _labels("a", n_actions)}
    return make_mdp(trans, rng.uniform(-1, 1, n_states), gamma)
