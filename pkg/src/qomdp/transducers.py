"""Quantum Moore and Mealy transducers.

A Moore machine steps by applying the action's channel and then the shared
output instrument; a Mealy machine applies one action-indexed instrument.
Run probabilities and conditional states follow from composing the
unnormalized branch maps along the input/output strings.
"""
from __future__ import annotations

from itertools import product
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .channels import (ZERO_PROB, Channel, ConditionalChannel, Instrument, KrausMap,
                       compose_cp, validate_channel)
from .exceptions import CapExceededError, ValidationError
from .qmath import DENSITY_TOL, as_matrix, check_density_matrix, is_projection, outer

ENUMERATION_CAP = 10**6


class RunResult(NamedTuple):
    probability: float
    state: np.ndarray | None


class _Machine:
    inputs: tuple
    outputs: tuple
    rho0: np.ndarray
    accept: np.ndarray

    def _check_common(self, rho0, accept, dim):
        rho0 = check_density_matrix(rho0, "initial state")
        accept = as_matrix(accept, "accepting projection")
        if rho0.shape != (dim, dim) or accept.shape != (dim, dim):
            raise ValidationError(f"initial state / projection must be {dim}x{dim}")
        if not is_projection(accept, DENSITY_TOL):
            raise ValidationError("accepting operator is not an orthogonal projection")
        rho0.flags.writeable = False
        accept.flags.writeable = False
        return rho0, accept

    @property
    def dim(self) -> int:
        return self.rho0.shape[0]

    def step(self, a, b, sigma) -> np.ndarray:
        """Unnormalized image of ``sigma`` on reading ``a`` and emitting ``b``."""
        raise NotImplementedError

    def step_all(self, a, sigma) -> np.ndarray:
        """Image of ``sigma`` under action ``a`` with the output discarded."""
        raise NotImplementedError

    def branch_map(self, a, b) -> KrausMap:
        raise NotImplementedError

    def _check_strings(self, alpha, beta=None):
        alpha = tuple(alpha)
        for a in alpha:
            if a not in self.inputs:
                raise ValidationError(f"unknown input symbol {a!r}")
        if beta is None:
            return alpha
        beta = tuple(beta)
        if len(alpha) != len(beta):
            raise ValidationError(f"input and output strings differ in length ({len(alpha)} vs {len(beta)})")
        for b in beta:
            if b not in self.outputs:
                raise ValidationError(f"unknown output symbol {b!r}")
        return alpha, beta


class QuantumMooreMachine(_Machine):
    """Conditional channel on the input side, one shared instrument on the output side."""

    def __init__(self, transition: ConditionalChannel, output: Instrument, rho0, accept=None):
        if not isinstance(transition, ConditionalChannel):
            transition = ConditionalChannel(transition)
        if not isinstance(output, Instrument):
            output = Instrument(output)
        if transition.dim != output.dim:
            raise ValidationError("transition and output maps disagree on dimension")
        dim = transition.dim
        if accept is None:
            accept = np.eye(dim)
        self.transition = transition
        self.output = output
        self.rho0, self.accept = self._check_common(rho0, accept, dim)

    @property
    def inputs(self):
        return self.transition.actions

    @property
    def outputs(self):
        return self.output.outcomes

    def __repr__(self):
        return (f"QuantumMooreMachine(dim={self.dim}, inputs={list(self.inputs)}, "
                f"outputs={list(self.outputs)})")

    def step(self, a, b, sigma):
        return self.output[b].apply(self.transition[a].apply(sigma))

    def step_all(self, a, sigma):
        return self.output.total().apply(self.transition[a].apply(sigma))

    def branch_map(self, a, b):
        return compose_cp(self.output[b], self.transition[a])


class QuantumMealyMachine(_Machine):
    """One instrument per input symbol, all over a common output alphabet."""

    def __init__(self, instruments: Mapping[str, Instrument], rho0, accept=None, inputs=None):
        inputs = tuple(inputs) if inputs is not None else tuple(instruments)
        if not inputs or set(inputs) != set(instruments):
            raise ValidationError("Mealy machine inputs and instrument keys disagree")
        insts = {a: i if isinstance(i, Instrument) else Instrument(i) for a, i in instruments.items()}
        outs = {tuple(insts[a].outcomes) for a in inputs}
        if len({frozenset(o) for o in outs}) != 1:
            raise ValidationError("Mealy instruments must share one output alphabet")
        if len({i.dim for i in insts.values()}) != 1:
            raise ValidationError("Mealy instruments disagree on dimension")
        self.instruments = {a: insts[a] for a in inputs}
        self._inputs = inputs
        self._outputs = insts[inputs[0]].outcomes
        dim = insts[inputs[0]].dim
        if accept is None:
            accept = np.eye(dim)
        self.rho0, self.accept = self._check_common(rho0, accept, dim)

    @property
    def inputs(self):
        return self._inputs

    @property
    def outputs(self):
        return self._outputs

    def __repr__(self):
        return (f"QuantumMealyMachine(dim={self.dim}, inputs={list(self.inputs)}, "
                f"outputs={list(self.outputs)})")

    def step(self, a, b, sigma):
        return self.instruments[a][b].apply(sigma)

    def step_all(self, a, sigma):
        return self.instruments[a].total().apply(sigma)

    def branch_map(self, a, b):
        return self.instruments[a][b]


def _normalized(sigma) -> RunResult:
    p = float(np.trace(sigma).real)
    if p <= ZERO_PROB:
        return RunResult(max(p, 0.0), None)
    return RunResult(p, sigma / p)


def run(M: _Machine, alpha: Sequence, beta: Sequence) -> RunResult:
    """Probability of emitting ``beta`` on input ``alpha`` and the resulting state."""
    alpha, beta = M._check_strings(alpha, beta)
    sigma = np.array(M.rho0)
    for a, b in zip(alpha, beta):
        sigma = M.step(a, b, sigma)
    return _normalized(sigma)


def moore_run(M: QuantumMooreMachine, alpha, beta) -> RunResult:
    if not isinstance(M, QuantumMooreMachine):
        raise TypeError("expected a QuantumMooreMachine")
    return run(M, alpha, beta)


def mealy_run(M: QuantumMealyMachine, alpha, beta) -> RunResult:
    if not isinstance(M, QuantumMealyMachine):
        raise TypeError("expected a QuantumMealyMachine")
    return run(M, alpha, beta)


def _accept_prob(M, state) -> float:
    return float(np.clip(np.trace(M.accept @ state).real, 0.0, 1.0))


def acceptance(M: _Machine, alpha, beta) -> float:
    """``Tr(Pi rho(alpha, beta))``; zero for runs of negligible probability."""
    res = run(M, alpha, beta)
    if res.state is None:
        return 0.0
    return _accept_prob(M, res.state)


def output_mixture(M: _Machine, alpha) -> np.ndarray:
    """State after reading ``alpha`` with all outputs averaged out."""
    alpha = M._check_strings(alpha)
    sigma = np.array(M.rho0)
    for a in alpha:
        sigma = M.step_all(a, sigma)
    return sigma


def acceptance_marginal(M: _Machine, alpha, method="mixture", cap=ENUMERATION_CAP) -> float:
    """Acceptance on input ``alpha`` averaged over every output string.

    ``method='mixture'`` evaluates ``Tr(Pi rho(alpha))`` on the unmeasured
    state; ``method='enumerate'`` sums ``p(beta; alpha) Acc(alpha, beta)`` over
    all ``beta`` and refuses when there are more than ``cap`` of them.
    """
    alpha = M._check_strings(alpha)
    if method == "mixture":
        return float(np.clip(np.trace(M.accept @ output_mixture(M, alpha)).real, 0.0, 1.0))
    if method != "enumerate":
        raise ValueError(f"unknown method {method!r}")
    n_branches = len(M.outputs) ** len(alpha)
    if n_branches > cap:
        raise CapExceededError(f"{n_branches} output strings exceed the enumeration cap {cap}",
                               size=n_branches, cap=cap)
    total = 0.0
    for beta in product(M.outputs, repeat=len(alpha)):
        res = run(M, alpha, beta)
        if res.state is not None:
            total += res.probability * _accept_prob(M, res.state)
    return total


def iter_runs(M: _Machine, max_len: int, cap=ENUMERATION_CAP):
    """Yield ``(alpha, beta, unnormalized_state)`` for all pairs up to ``max_len``.

    Pairs come out by length, then in alphabet order, starting with the
    empty pair.
    """
    n_pairs = sum((len(M.inputs) * len(M.outputs)) ** n for n in range(max_len + 1))
    if n_pairs > cap:
        raise CapExceededError(f"{n_pairs} run pairs exceed the enumeration cap {cap}",
                               size=n_pairs, cap=cap)
    level = [((), (), np.array(M.rho0))]
    for n in range(max_len + 1):
        yield from level
        if n == max_len:
            break
        level = [(alpha + (a,), beta + (b,), M.step(a, b, sigma))
                 for alpha, beta, sigma in level
                 for a in M.inputs for b in M.outputs]


def moore_to_mealy(M: QuantumMooreMachine) -> QuantumMealyMachine:
    """Mealy machine with branch maps ``Lambda_{a,b} = Omega_b o Phi_a``."""
    instruments = {
        a: Instrument({b: compose_cp(M.output[b], M.transition[a]) for b in M.outputs},
                      outcomes=M.outputs)
        for a in M.inputs
    }
    return QuantumMealyMachine(instruments, M.rho0, M.accept, inputs=M.inputs)


def mealy_to_moore(M: QuantumMealyMachine) -> QuantumMooreMachine:
    """Moore machine on ``C^Delta (x) H`` that writes the output into a register.

    The output register comes first in the tensor product and starts in the
    first output symbol. ``Phi_a`` resets the register to that symbol and then
    writes ``b`` while applying ``Lambda_{a,b}`` to the system; the instrument
    reads the register with projectors ``|b><b| (x) I``.
    """
    outs = M.outputs
    n_out, d = len(outs), M.dim
    eye_d = np.eye(d, dtype=complex)
    reset = Channel([np.kron(outer(0, c, n_out), eye_d) for c in range(n_out)])
    transition = {}
    for a in M.inputs:
        write_ops = [np.kron(outer(ib, 0, n_out), K)
                     for ib, b in enumerate(outs) for K in M.instruments[a][b].kraus]
        write_ops += [np.kron(outer(c, c, n_out), eye_d) for c in range(1, n_out)]
        write = KrausMap(write_ops)
        report = validate_channel(write)
        if not report.ok:
            raise ValidationError(f"register write for action {a!r} is not trace preserving "
                                  f"(residual {report.residual:.3g})", residual=report.residual)
        transition[a] = Channel(compose_cp(write, reset).drop_zeros())
    output = Instrument({b: KrausMap(np.kron(outer(ib, ib, n_out), eye_d)) for ib, b in enumerate(outs)},
                        outcomes=outs)
    rho0 = np.kron(outer(0, 0, n_out), M.rho0)
    accept = np.kron(np.eye(n_out), M.accept)
    return QuantumMooreMachine(ConditionalChannel(transition, actions=M.inputs), output, rho0, accept)


class EquivalenceResult(NamedTuple):
    equivalent: bool
    counterexample: tuple | None = None

    def __bool__(self):
        return self.equivalent


def machines_equivalent(M1: _Machine, M2: _Machine, max_len: int, tol=1e-9,
                        cap=ENUMERATION_CAP) -> EquivalenceResult:
    """Compare run probabilities and acceptance on all pairs up to ``max_len``.

    The counterexample, when found, is ``(alpha, beta, (p1, acc1), (p2, acc2))``.
    """
    if set(M1.inputs) != set(M2.inputs) or set(M1.outputs) != set(M2.outputs):
        raise ValidationError("machines do not share input and output alphabets")
    level = [((), (), np.array(M1.rho0), np.array(M2.rho0))]
    n_pairs = sum((len(M1.inputs) * len(M1.outputs)) ** n for n in range(max_len + 1))
    if n_pairs > cap:
        raise CapExceededError(f"{n_pairs} run pairs exceed the enumeration cap {cap}",
                               size=n_pairs, cap=cap)
    for n in range(max_len + 1):
        for alpha, beta, s1, s2 in level:
            r1, r2 = _normalized(s1), _normalized(s2)
            acc1 = 0.0 if r1.state is None else _accept_prob(M1, r1.state)
            acc2 = 0.0 if r2.state is None else _accept_prob(M2, r2.state)
            if abs(r1.probability - r2.probability) > tol or abs(acc1 - acc2) > tol:
                return EquivalenceResult(False, (alpha, beta, (r1.probability, acc1),
                                                 (r2.probability, acc2)))
        if n < max_len:
            level = [(alpha + (a,), beta + (b,), M1.step(a, b, s1), M2.step(a, b, s2))
                     for alpha, beta, s1, s2 in level
                     for a in M1.inputs for b in M1.outputs]
    return EquivalenceResult(True, None)
