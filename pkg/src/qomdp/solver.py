"""Discounted QOMDP models and alpha-operator value iteration.

A value function is stored as a finite set of Hermitian operators ``R_c``
with ``V(rho) = max_c <R_c, rho>``. One Bellman backup maps each operator
back through every (action, outcome) branch in the Heisenberg picture and
forms the cross-sum over outcomes.
"""
from __future__ import annotations

import math
from typing import Mapping, NamedTuple

import numpy as np

from .channels import ConditionalChannel, Instrument, KrausMap, compose_cp
from .exceptions import CapExceededError, ValidationError
from .qmath import check_density_matrix, check_hermitian, outer
from .transducers import QuantumMealyMachine, mealy_to_moore

CROSS_SUM_CAP = 10**5
PRUNE_TOL = 1e-10
_CHUNK = 2**20


class Qomdp:
    """Quantum observable MDP in decoupled (channel, instrument) form.

    Exactly one of ``reward`` (a Hermitian observable paid in the current
    state) or ``action_rewards`` (one observable per action) is given.
    """

    def __init__(self, transition: ConditionalChannel, output: Instrument, gamma: float, rho0,
                 reward=None, action_rewards: Mapping | None = None):
        if not isinstance(transition, ConditionalChannel):
            transition = ConditionalChannel(transition)
        if not isinstance(output, Instrument):
            output = Instrument(output)
        if transition.dim != output.dim:
            raise ValidationError("transition and output maps disagree on dimension")
        if not 0.0 <= gamma < 1.0:
            raise ValidationError(f"discount must lie in [0, 1), got {gamma}")
        if (reward is None) == (action_rewards is None):
            raise ValidationError("give exactly one of reward or action_rewards")
        d = transition.dim
        self.transition = transition
        self.output = output
        self.gamma = float(gamma)
        self.rho0 = check_density_matrix(rho0, "initial state")
        if self.rho0.shape != (d, d):
            raise ValidationError(f"initial state must be {d}x{d}")
        if reward is not None:
            self.reward = self._check_reward(reward, "reward", d)
            self.action_rewards = None
        else:
            if set(action_rewards) != set(transition.actions):
                raise ValidationError("action rewards must be given for exactly the declared actions")
            self.reward = None
            self.action_rewards = {a: self._check_reward(action_rewards[a], f"reward[{a}]", d)
                                   for a in transition.actions}
        self._branch_cache = {}

    @staticmethod
    def _check_reward(R, name, d):
        R = check_hermitian(R, name)
        if R.shape != (d, d):
            raise ValidationError(f"{name} must be {d}x{d}")
        R = (R + R.conj().T) / 2
        R.flags.writeable = False
        return R

    @classmethod
    def from_superoperators(cls, kraus: Mapping[str, Mapping[str, np.ndarray]], gamma, rho0,
                            reward=None, action_rewards=None):
        """Build from per-action Kraus sets ``{a: {b: K_ab}}``.

        The action-indexed instruments are decoupled into a conditional
        channel and a shared instrument on ``C^Delta (x) H``; rewards are
        lifted to ``I (x) R``.
        """
        instruments = {a: Instrument({b: KrausMap(K) for b, K in ks.items()}) for a, ks in kraus.items()}
        d = next(iter(instruments.values())).dim
        mealy = QuantumMealyMachine(instruments, rho0, np.eye(d))
        moore = mealy_to_moore(mealy)
        n_out = len(mealy.outputs)

        def lift(R):
            return np.kron(np.eye(n_out), np.asarray(R, dtype=complex))

        return cls(moore.transition, moore.output, gamma, moore.rho0,
                   reward=None if reward is None else lift(reward),
                   action_rewards=None if action_rewards is None
                   else {a: lift(R) for a, R in action_rewards.items()})

    @property
    def dim(self) -> int:
        return self.transition.dim

    @property
    def actions(self) -> tuple:
        return self.transition.actions

    @property
    def observations(self) -> tuple:
        return self.output.outcomes

    def reward_for(self, a) -> np.ndarray:
        return self.reward if self.reward is not None else self.action_rewards[a]

    def reward_norm(self) -> float:
        """Largest absolute eigenvalue over all reward operators."""
        ops = [self.reward] if self.reward is not None else list(self.action_rewards.values())
        return max(float(np.max(np.abs(np.linalg.eigvalsh(R)))) for R in ops)

    def branch_map(self, a, b) -> KrausMap:
        """``Omega_b o Phi_a``."""
        key = (a, b)
        if key not in self._branch_cache:
            self._branch_cache[key] = compose_cp(self.output[b], self.transition[a])
        return self._branch_cache[key]

    def __repr__(self):
        kind = "state" if self.reward is not None else "action"
        return (f"Qomdp(dim={self.dim}, actions={list(self.actions)}, "
                f"observations={list(self.observations)}, gamma={self.gamma}, rewards={kind})")


def reduce_to_state_reward(m: Qomdp) -> Qomdp:
    """Equivalent state-reward model on ``H (x) C^Sigma``.

    The second register records the last action: each action applies its
    channel to the system and replaces the register by ``|a><a|``. The reward
    is ``sum_a R_a (x) |a><a|`` and the register starts in the first action.
    """
    if m.action_rewards is None:
        raise ValidationError("model already has a state reward")
    acts = m.actions
    k = len(acts)
    transition = {}
    for ia, a in enumerate(acts):
        ops = [np.kron(K, outer(ia, c, k)) for K in m.transition[a].kraus for c in range(k)]
        transition[a] = KrausMap(ops)
    eye_k = np.eye(k, dtype=complex)
    output = Instrument({b: KrausMap([np.kron(L, eye_k) for L in m.output[b].kraus])
                         for b in m.observations}, outcomes=m.observations)
    R = sum(np.kron(m.action_rewards[a], outer(ia, ia, k)) for ia, a in enumerate(acts))
    rho0 = np.kron(m.rho0, outer(0, 0, k))
    return Qomdp(ConditionalChannel(transition, actions=acts), output, m.gamma, rho0, reward=R)


class AlphaSet:
    """Hermitian operators with the action each one is greedy for."""

    def __init__(self, operators, actions):
        ops = np.asarray(operators, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0 or ops.shape[1] != ops.shape[2]:
            raise ValidationError(f"alpha operators must have shape (n, d, d), got {ops.shape}")
        actions = tuple(actions)
        if len(actions) != ops.shape[0]:
            raise ValidationError("need one action tag per alpha operator")
        herm = np.max(np.abs(ops - ops.conj().transpose(0, 2, 1)))
        if herm > 1e-9 * max(1.0, float(np.max(np.abs(ops)))):
            raise ValidationError(f"alpha operators are not Hermitian (residual {herm:.3g})")
        ops = (ops + ops.conj().transpose(0, 2, 1)) / 2
        ops.flags.writeable = False
        self.operators = ops
        self.actions = actions
        flat = ops.reshape(ops.shape[0], -1)
        self._real_flat = np.ascontiguousarray(np.concatenate([flat.real, flat.imag], axis=1).T)

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    def __len__(self):
        return self.operators.shape[0]

    def __repr__(self):
        return f"AlphaSet(n={len(self)}, dim={self.dim})"

    def values(self, rhos) -> np.ndarray:
        """``<R_c, rho>`` for a batch of states, shape ``(n_states, n_ops)``."""
        rhos = np.asarray(rhos, dtype=complex)
        single = rhos.ndim == 2
        if single:
            rhos = rhos[None]
        if rhos.shape[1:] != (self.dim, self.dim):
            raise ValidationError(f"dimension mismatch: alpha set is {self.dim}-dim, states are {rhos.shape[1:]}")
        # Re Tr(R^dagger rho) as one real product over stacked real and imaginary parts
        flat = rhos.reshape(rhos.shape[0], -1)
        vals = np.concatenate([flat.real, flat.imag], axis=1) @ self._real_flat
        return vals[0] if single else vals


def value_at(V: AlphaSet, rho):
    """``(max_c <R_c, rho>, argmax)`` with ties going to the lowest index."""
    vals = V.values(rho)
    idx = int(np.argmax(vals))
    return float(vals[idx]), idx


def _window_scan(ops, tol):
    """Indices of operators not PSD-dominated by another one.

    Candidates are visited in order of decreasing trace, since a dominating
    operator has trace at least as large, and compared only against the
    survivors found so far. Among operators equal within ``tol`` the lowest
    index survives.
    """
    n, d = ops.shape[0], ops.shape[1]
    traces = np.einsum("nii->n", ops).real
    order = np.lexsort((np.arange(n), -traces))
    window = []
    win_ops = np.empty((0, d, d), dtype=complex)
    for c in order:
        if window:
            eig = np.linalg.eigvalsh(win_ops - ops[c])
            dominated_by = eig[:, 0] >= -tol
            if dominated_by.any():
                equal = dominated_by & (eig[:, -1] <= tol)
                w = np.nonzero(dominated_by)[0]
                if not equal[w].all() or any(window[i] < c for i in w):
                    continue
                # c ties only with later-indexed survivors; it replaces them
                keep = ~equal
                window = [window[i] for i in range(len(window)) if keep[i]]
                win_ops = win_ops[keep]
            else:
                beaten = eig[:, -1] <= tol
                if beaten.any():
                    window = [window[i] for i in range(len(window)) if not beaten[i]]
                    win_ops = win_ops[~beaten]
        window.append(c)
        win_ops = np.concatenate([win_ops, ops[c][None]])
    return np.sort(np.array(window, dtype=int))


def prune_dominated(V: AlphaSet, tol=PRUNE_TOL) -> AlphaSet:
    """Drop operators that another operator dominates in the PSD order.

    Operator ``c`` goes when some surviving ``d`` has ``R_d - R_c >= -tol``;
    among operators that are equal within ``tol`` the lowest index survives.
    Survivors keep their original relative order.
    """
    if len(V) == 1:
        return V
    keep = _window_scan(V.operators, tol)
    return AlphaSet(V.operators[keep], [V.actions[i] for i in keep])


def value_distance(V: AlphaSet, W: AlphaSet) -> float:
    """Upper bound on ``sup_rho |V(rho) - W(rho)|``.

    Uses ``max_c min_d lambda_max(R_c - S_d)`` in both directions, which
    bounds the sup norm because ``lambda_max(A) = max_rho <A, rho>``.
    """
    if V.dim != W.dim:
        raise ValidationError(f"dimension mismatch: {V.dim} vs {W.dim}")

    def one_side(A, B):
        nb, dim = B.shape[0], B.shape[1]
        rows = max(1, _CHUNK // max(1, nb * dim * dim))
        best = -np.inf
        for s in range(0, A.shape[0], rows):
            lmax = np.linalg.eigvalsh(A[s:s + rows, None] - B[None, :])[..., -1]
            best = max(best, float(lmax.min(axis=1).max()))
        return best

    return max(0.0, one_side(V.operators, W.operators), one_side(W.operators, V.operators))


def _heisenberg(m: Qomdp, a, b, ops):
    """``(Omega_b o Phi_a)^dagger`` applied to each operator in ``ops``."""
    K = m.branch_map(a, b).kraus
    return np.einsum("kji,cjl,klm->cim", K.conj(), ops, K)


def bellman_backup(m: Qomdp, V: AlphaSet, cap=CROSS_SUM_CAP, prune=True, tol=PRUNE_TOL) -> AlphaSet:
    """One application of the Bellman operator on an alpha set.

    For each action the candidates are ``R_a + gamma * sum_b G_ab(R_{c(b)})``
    over all maps ``c`` from outcomes to operators of ``V``, with ``G_ab`` the
    adjoint of the branch map. The cross-sum is built one outcome at a time
    and pruned after each outcome, which only discards PSD-dominated
    partial sums. The call refuses when the cross-sum of the (pruned)
    projected sets would exceed ``cap`` candidates.
    """
    if V.dim != m.dim:
        raise ValidationError(f"dimension mismatch: model is {m.dim}-dim, alpha set is {V.dim}-dim")
    projections = {}
    nominal = 0
    for a in m.actions:
        count = 1
        for b in m.observations:
            proj = m.gamma * _heisenberg(m, a, b, V.operators)
            if prune and len(proj) > 1:
                proj = prune_dominated(AlphaSet(proj, [a] * len(proj)), tol).operators
            projections[a, b] = proj
            count *= len(proj)
        nominal += count
    if nominal > cap:
        raise CapExceededError(
            f"cross-sum would have {nominal} candidate operators, above the cap {cap}; "
            "raise the cap or use a model with fewer outcomes",
            size=nominal, cap=cap)
    ops, tags = [], []
    for a in m.actions:
        partial = m.reward_for(a)[None].copy()
        for b in m.observations:
            proj = projections[a, b]
            partial = (partial[:, None] + proj[None, :]).reshape(-1, m.dim, m.dim)
            if prune and len(partial) > 1:
                partial = prune_dominated(AlphaSet(partial, [a] * len(partial)), tol).operators
        ops.append(partial)
        tags += [a] * len(partial)
    out = AlphaSet(np.concatenate(ops), tags)
    return prune_dominated(out, tol) if prune else out


class ValueIterationResult(NamedTuple):
    alpha_set: AlphaSet
    iterations: int
    bound: float
    distances: tuple


def iteration_bound(epsilon, gamma, first_distance) -> int:
    """Backups needed before the stopping rule fires, assuming geometric decay."""
    if first_distance <= 0:
        return 1
    thr = (1 - gamma) * epsilon / gamma
    return max(1, math.ceil(math.log(thr / first_distance) / math.log(gamma)) + 1)


def value_iteration(m: Qomdp, epsilon: float, max_iter=10_000, cap=CROSS_SUM_CAP,
                    tol=PRUNE_TOL, callback=None) -> ValueIterationResult:
    """Iterate backups from the zero operator until successive sets are close.

    Stops once ``value_distance(V_{n+1}, V_n) <= (1 - gamma) epsilon / gamma``;
    the returned ``bound`` is ``gamma / (1 - gamma)`` times that distance and
    certifies ``sup |V - V*| <= bound <= epsilon``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    V = AlphaSet(np.zeros((1, m.dim, m.dim)), [m.actions[0]])
    if m.gamma == 0.0:
        V = bellman_backup(m, V, cap=cap, tol=tol)
        return ValueIterationResult(V, 1, 0.0, ())
    threshold = (1 - m.gamma) * epsilon / m.gamma
    distances = []
    for n in range(1, max_iter + 1):
        V_next = bellman_backup(m, V, cap=cap, tol=tol)
        dist = value_distance(V_next, V)
        distances.append(dist)
        V = V_next
        if callback is not None:
            callback(n, V, dist)
        if dist <= threshold:
            return ValueIterationResult(V, n, m.gamma * dist / (1 - m.gamma), tuple(distances))
    raise RuntimeError(f"value iteration did not converge in {max_iter} backups "
                       f"(last distance {distances[-1]:.3g})")


class StationaryPolicy:
    """Greedy policy with respect to an alpha set."""

    def __init__(self, alpha_set: AlphaSet):
        self.alpha_set = alpha_set

    def action(self, rho):
        return self.alpha_set.actions[value_at(self.alpha_set, rho)[1]]

    def actions(self, rhos) -> list:
        idx = np.argmax(self.alpha_set.values(rhos), axis=-1)
        return [self.alpha_set.actions[i] for i in np.atleast_1d(idx)]


def greedy_action(policy: StationaryPolicy, rho):
    return policy.action(rho)


def mc_horizon(gamma, reward_norm, tol=1e-8) -> int:
    """Truncation horizon making the discounted tail at most ``tol``."""
    if gamma == 0.0 or reward_norm == 0.0:
        return 1
    return max(1, math.ceil(math.log(tol * (1 - gamma) / reward_norm) / math.log(gamma)))


def mc_policy_value(m: Qomdp, policy: StationaryPolicy, n_traj: int, seed=None, horizon=None):
    """Monte-Carlo estimate of the policy's discounted return from ``rho0``.

    Returns ``(mean, stderr)``. Trajectories are simulated in one batch:
    at every step each trajectory takes its greedy action, accrues
    ``gamma^t <R, rho_t>``, and samples an outcome from the instrument.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    norm = m.reward_norm()
    if norm == 0.0:
        return 0.0, 0.0
    H = mc_horizon(m.gamma, norm) if horizon is None else horizon
    rng = np.random.default_rng(seed)
    d = m.dim
    acts = m.actions
    a_index = {a: i for i, a in enumerate(acts)}
    tag_index = np.array([a_index[a] for a in policy.alpha_set.actions])
    rewards = np.stack([m.reward_for(a) for a in acts])
    # row-major vec(K rho K^dagger) = (K kron conj K) vec(rho), so each branch is one matrix
    superops = [np.stack([sum(np.kron(K, K.conj()) for K in m.branch_map(a, b).kraus).T
                          for b in m.observations]) for a in acts]
    rho = np.broadcast_to(m.rho0, (n_traj, d, d)).copy()
    total = np.zeros(n_traj)
    disc = 1.0
    for _ in range(H):
        choice = tag_index[np.argmax(policy.alpha_set.values(rho), axis=1)]
        r = np.einsum("nij,nij->n", rewards[choice].conj(), rho).real
        total += disc * r
        disc *= m.gamma
        new_rho = np.empty_like(rho)
        u = rng.random(n_traj)
        for ia in range(len(acts)):
            sel = np.nonzero(choice == ia)[0]
            if sel.size == 0:
                continue
            flat = rho[sel].reshape(sel.size, d * d)
            posts = np.stack([flat @ S for S in superops[ia]], axis=1)
            probs = np.clip(posts[:, :, ::d + 1].sum(axis=2).real, 0.0, None)
            cdf = np.cumsum(probs, axis=1)
            cdf /= cdf[:, -1:]
            pick = np.minimum((u[sel, None] > cdf).sum(axis=1), probs.shape[1] - 1)
            rows = np.arange(sel.size)
            new_rho[sel] = (posts[rows, pick] / probs[rows, pick][:, None]).reshape(sel.size, d, d)
        rho = new_rho
    mean = float(total.mean())
    stderr = float(total.std(ddof=1) / np.sqrt(n_traj)) if n_traj > 1 else 0.0
    return mean, stderr
