"""Classical Moore machines and POMDPs, and their quantum embedding.

Transition matrices are column-stochastic: ``P[a][i, j]`` is the probability
of moving from state ``j`` to state ``i`` under action ``a``. The emission
matrix ``Q[b, i]`` is the probability of emitting ``b`` from state ``i``.
A step applies the transition and then emits from the new state, which is
the Moore convention used by the quantum machines.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .channels import ZERO_PROB, ConditionalChannel, Instrument, KrausMap
from .exceptions import ValidationError
from .qmath import DENSITY_TOL, basis_projector, outer
from .transducers import QuantumMooreMachine

STOCHASTIC_TOL = 1e-10


def _check_column_stochastic(M, name, tol=STOCHASTIC_TOL, labels=None):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} must be a finite 2-d array")
    for j in range(M.shape[1]):
        col = M[:, j]
        where = f"{name} column {j}" + (f" (state {labels[j]!r})" if labels is not None else "")
        if np.any(col < -tol):
            raise ValidationError(f"{where} has a negative entry {col.min():.3g}")
        s = col.sum()
        if abs(s - 1.0) > tol:
            raise ValidationError(f"{where} sums to {s:.12g}, expected 1", residual=abs(s - 1.0))
    return M


def check_belief(b, n=None, tol=STOCHASTIC_TOL) -> np.ndarray:
    """Validate a probability vector."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or (n is not None and b.shape[0] != n):
        raise ValidationError(f"belief must be a vector of length {n}")
    if np.any(b < -tol) or abs(b.sum() - 1.0) > tol:
        raise ValidationError("belief is not a probability vector")
    return b


@dataclass(frozen=True, eq=False)
class ClassicalMoore:
    """Classical Moore machine with an optional absorbing goal state."""

    states: tuple
    actions: tuple
    outputs: tuple
    transitions: Mapping[str, np.ndarray]
    emission: np.ndarray
    p0: np.ndarray
    goal: str | None = None

    def __post_init__(self):
        for name in ("states", "actions", "outputs"):
            vals = tuple(getattr(self, name))
            if not vals or len(set(vals)) != len(vals):
                raise ValidationError(f"{name} must be a nonempty list of distinct labels")
            object.__setattr__(self, name, vals)
        n = len(self.states)
        if set(self.transitions) != set(self.actions):
            raise ValidationError("transition matrices must be given for exactly the declared actions")
        trans = {}
        for a in self.actions:
            P = _check_column_stochastic(self.transitions[a], f"transitions[{a}]", labels=self.states)
            if P.shape != (n, n):
                raise ValidationError(f"transitions[{a}] must be {n}x{n}, got {P.shape}")
            P.flags.writeable = False
            trans[a] = P
        object.__setattr__(self, "transitions", trans)
        Q = _check_column_stochastic(self.emission, "emission", labels=self.states)
        if Q.shape != (len(self.outputs), n):
            raise ValidationError(f"emission must be {len(self.outputs)}x{n}, got {Q.shape}")
        Q.flags.writeable = False
        object.__setattr__(self, "emission", Q)
        p0 = check_belief(self.p0, n)
        p0.flags.writeable = False
        object.__setattr__(self, "p0", p0)
        if self.goal is not None:
            if self.goal not in self.states:
                raise ValidationError(f"goal {self.goal!r} is not a state")
            g = self.states.index(self.goal)
            for a, P in trans.items():
                if abs(P[g, g] - 1.0) > STOCHASTIC_TOL:
                    raise ValidationError(f"goal state {self.goal!r} is not absorbing under action {a!r}")

    @property
    def n_states(self) -> int:
        return len(self.states)

    def index(self, kind, label) -> int:
        labels = {"state": self.states, "action": self.actions, "output": self.outputs}[kind]
        try:
            return labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown {kind} {label!r}") from None


@dataclass(frozen=True, eq=False)
class ClassicalPomdp(ClassicalMoore):
    """Classical Moore machine with a state reward vector and discount."""

    rewards: np.ndarray = field(default=None)
    gamma: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        R = np.asarray(self.rewards, dtype=float)
        if R.shape != (self.n_states,) or not np.all(np.isfinite(R)):
            raise ValidationError("rewards must be a finite vector over states")
        if not 0.0 <= self.gamma < 1.0:
            raise ValidationError(f"discount must lie in [0, 1), got {self.gamma}")
        R.flags.writeable = False
        object.__setattr__(self, "rewards", R)


def _labels(prefix, n):
    return tuple(f"{prefix}{i}" for i in range(n))


def make_mdp(transitions: Mapping | Sequence, rewards, gamma, p0=None, states=None) -> ClassicalPomdp:
    """Fully observed POMDP: outputs are the states and emission is the identity."""
    if not isinstance(transitions, Mapping):
        transitions = dict(zip(_labels("a", len(transitions)), transitions))
    n = np.asarray(next(iter(transitions.values()))).shape[0]
    states = tuple(states) if states is not None else _labels("s", n)
    p0 = np.full(n, 1.0 / n) if p0 is None else p0
    return ClassicalPomdp(states, tuple(transitions), states, transitions, np.eye(n), p0,
                          rewards=rewards, gamma=gamma)


def make_hmm(P, Q, p0, states=None, outputs=None) -> ClassicalMoore:
    """Hidden Markov model: a single action and trivial rewards."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    states = tuple(states) if states is not None else _labels("s", P.shape[0])
    outputs = tuple(outputs) if outputs is not None else _labels("o", Q.shape[0])
    return ClassicalMoore(states, ("step",), outputs, {"step": P}, Q, p0)


def make_markov_chain(P, p0, observed=True, states=None) -> ClassicalMoore:
    """Markov chain, either observed (outputs are states) or unobserved (one output)."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    states = tuple(states) if states is not None else _labels("s", n)
    if observed:
        return ClassicalMoore(states, ("step",), states, {"step": P}, np.eye(n), p0)
    return ClassicalMoore(states, ("step",), ("*",), {"step": P}, np.ones((1, n)), p0)


def belief_update(m: ClassicalMoore, b, a, y):
    """Filter one step: returns ``(Pr[y | b, a], posterior)``.

    The posterior is ``None`` when the observation has probability at most
    ``1e-14``.
    """
    b = check_belief(b, m.n_states)
    P = m.transitions[m.actions[m.index("action", a)]]
    joint = m.emission[m.index("output", y)] * (P @ b)
    p = float(joint.sum())
    if p <= ZERO_PROB:
        return p, None
    return p, joint / p


def forward(m: ClassicalMoore, alpha: Sequence, beta: Sequence):
    """Forward algorithm: ``(Pr[beta | alpha], filtered belief)``."""
    if len(alpha) != len(beta):
        raise ValidationError("input and output strings differ in length")
    f = np.array(m.p0)
    for a, y in zip(alpha, beta):
        f = m.emission[m.index("output", y)] * (m.transitions[m.actions[m.index("action", a)]] @ f)
    p = float(f.sum())
    return p, (f / p if p > ZERO_PROB else None)


def embed_as_quantum(m: ClassicalMoore, accept=None) -> QuantumMooreMachine:
    """Quantum Moore machine reproducing ``m`` on diagonal states.

    Transitions use Kraus operators ``sqrt(P(i|j)) |i><j|`` and emission
    branches ``sqrt(Q(b|i)) |i><i|``, so coherences are never created. The
    accepting projection is the goal projector when ``m`` has a goal,
    ``accept`` when given, and the identity otherwise.
    """
    n = m.n_states

    def kraus(weights_and_units):
        ops = [np.sqrt(w) * E for w, E in weights_and_units if w > 0]
        return KrausMap(ops or [np.zeros((n, n), dtype=complex)])

    transition = ConditionalChannel(
        {a: kraus((m.transitions[a][i, j], outer(i, j, n)) for i in range(n) for j in range(n))
         for a in m.actions},
        actions=m.actions,
    )
    output = Instrument(
        {b: kraus((m.emission[k, i], outer(i, i, n)) for i in range(n))
         for k, b in enumerate(m.outputs)},
        outcomes=m.outputs,
    )
    if m.goal is not None:
        accept = basis_projector(m.states.index(m.goal), n)
    elif accept is None:
        accept = np.eye(n)
    return QuantumMooreMachine(transition, output, np.diag(m.p0).astype(complex), accept)


def embed_pomdp(m: ClassicalPomdp):
    """:class:`Qomdp` on diagonal states with reward ``diag(rewards)``."""
    from .solver import Qomdp
    M = embed_as_quantum(m)
    return Qomdp(M.transition, M.output, m.gamma, M.rho0, reward=np.diag(m.rewards).astype(complex))


def _fresh(label, taken):
    while label in taken:
        label = label + "'"
    return label


def reachability_to_nonoccurrence(m: ClassicalMoore, tau: float, sink_state="s_hat",
                                  sink_output="b_hat"):
    """Turn a goal machine into one whose goal visits show up as a fresh output.

    Adds an absorbing sink state that the goal moves to under every action and
    that alone emits a fresh output symbol. The goal is reached with
    probability at least ``tau`` iff the new machine emits a string free of
    the fresh symbol with probability at most ``1 - tau``. Returns the new
    machine, whose goal is the sink, and ``1 - tau``.
    """
    if m.goal is None:
        raise ValidationError("reachability transform needs a goal state")
    if not 0.0 < tau < 1.0:
        raise ValidationError(f"threshold must lie in (0, 1), got {tau}")
    sink_state = _fresh(sink_state, m.states)
    sink_output = _fresh(sink_output, m.outputs)
    n = m.n_states
    g = m.states.index(m.goal)
    transitions = {}
    for a, P in m.transitions.items():
        Pt = np.zeros((n + 1, n + 1))
        for j in range(n):
            if j != g:
                Pt[:n, j] = P[:, j]
        Pt[n, g] = 1.0
        Pt[n, n] = 1.0
        transitions[a] = Pt
    Q = np.zeros((len(m.outputs) + 1, n + 1))
    Q[:-1, :n] = m.emission
    Q[-1, n] = 1.0
    m2 = ClassicalMoore(m.states + (sink_state,), m.actions, m.outputs + (sink_output,),
                        transitions, Q, np.append(m.p0, 0.0), goal=sink_state)
    return m2, 1.0 - tau
