"""Completely positive maps in Kraus form.

A :class:`KrausMap` is any CP map ``rho -> sum_k K_k rho K_k^dagger``.
:class:`Channel` adds the trace-preservation check, :class:`Instrument`
groups CP branches keyed by an output symbol whose sum is a channel, and
:class:`ConditionalChannel` selects one channel per input action.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .exceptions import ValidationError
from .qmath import DENSITY_TOL, as_matrix, check_density_matrix

ZERO_PROB = 1e-14


class ChannelReport(NamedTuple):
    ok: bool
    residual: float

    def __bool__(self):
        return self.ok


class Branch(NamedTuple):
    outcome: str
    probability: float
    state: np.ndarray | None


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class KrausMap:
    """CP map given by a nonempty stack of square Kraus operators."""

    def __init__(self, kraus):
        if isinstance(kraus, np.ndarray) and kraus.ndim == 2:
            kraus = [kraus]
        ops = [as_matrix(K, "Kraus operator") for K in kraus]
        if not ops:
            raise ValidationError("a Kraus map needs at least one operator")
        dim = ops[0].shape[0]
        for K in ops:
            if K.shape != (dim, dim):
                raise ValidationError(f"Kraus operators disagree on dimension: {K.shape} vs {(dim, dim)}")
        self.kraus = _freeze(np.stack(ops))

    @property
    def dim(self) -> int:
        return self.kraus.shape[1]

    def __len__(self):
        return self.kraus.shape[0]

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim}, n_kraus={len(self)})"

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise ValidationError(f"dimension mismatch: map is {self.dim}-dim, state is {rho.shape}")
        K = self.kraus
        return np.einsum("kij,jl,kml->im", K, rho, K.conj())

    def adjoint_apply(self, A) -> np.ndarray:
        """Heisenberg-picture action ``sum_k K_k^dagger A K_k``."""
        K = self.kraus
        return np.einsum("kji,jl,klm->im", K.conj(), A, K)

    def gram(self) -> np.ndarray:
        """``sum_k K_k^dagger K_k``."""
        K = self.kraus
        return np.einsum("kji,kjl->il", K.conj(), K)

    def tp_residual(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.dim))))

    def compose(self, inner: "KrausMap") -> "KrausMap":
        """``self`` after ``inner``: Kraus set ``{F_i G_j}``."""
        return compose_cp(self, inner)

    def drop_zeros(self, tol=0.0) -> "KrausMap":
        keep = [K for K in self.kraus if np.max(np.abs(K)) > tol]
        return KrausMap(keep or [np.zeros((self.dim, self.dim), dtype=complex)])


class Channel(KrausMap):
    """Trace-preserving Kraus map; construction fails otherwise."""

    def __init__(self, kraus, tol=DENSITY_TOL):
        super().__init__(kraus.kraus if isinstance(kraus, KrausMap) else kraus)
        res = self.tp_residual()
        if res > tol:
            raise ValidationError(f"Kraus operators are not trace preserving (residual {res:.3g})",
                                  residual=res)


def apply_cp(m: KrausMap, rho) -> np.ndarray:
    """Unnormalized image ``sum_k K_k rho K_k^dagger``."""
    return m.apply(rho)


def validate_channel(m: KrausMap, tol=DENSITY_TOL) -> ChannelReport:
    """Check ``sum_k K_k^dagger K_k = I`` entrywise within ``tol``."""
    res = m.tp_residual()
    return ChannelReport(res <= tol, res)


def compose_cp(f: KrausMap, g: KrausMap) -> KrausMap:
    """Composition ``f o g`` (apply ``g`` first)."""
    if f.dim != g.dim:
        raise ValidationError(f"dimension mismatch: {f.dim} vs {g.dim}")
    prods = np.einsum("iab,jbc->ijac", f.kraus, g.kraus).reshape(-1, f.dim, f.dim)
    return KrausMap(prods)


@dataclass(frozen=True, eq=False)
class Instrument:
    """CP branches keyed by output symbol; their sum must be a channel."""

    outcomes: tuple
    branches: Mapping[str, KrausMap]

    def __init__(self, branches: Mapping[str, KrausMap] | Sequence, outcomes=None, tol=DENSITY_TOL):
        if not isinstance(branches, Mapping):
            branches = dict(branches)
        outcomes = tuple(outcomes) if outcomes is not None else tuple(branches)
        if not outcomes:
            raise ValidationError("an instrument needs at least one outcome")
        if set(outcomes) != set(branches) or len(set(outcomes)) != len(outcomes):
            raise ValidationError("instrument outcomes and branch keys disagree")
        maps = {b: m if isinstance(m, KrausMap) else KrausMap(m) for b, m in branches.items()}
        dims = {m.dim for m in maps.values()}
        if len(dims) != 1:
            raise ValidationError(f"instrument branches disagree on dimension: {sorted(dims)}")
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "branches", {b: maps[b] for b in outcomes})
        res = self.total().tp_residual()
        if res > tol:
            raise ValidationError(f"instrument branches do not sum to a channel (residual {res:.3g})",
                                  residual=res)

    @property
    def dim(self) -> int:
        return next(iter(self.branches.values())).dim

    def __getitem__(self, b) -> KrausMap:
        return self.branches[b]

    def total(self) -> KrausMap:
        """The channel obtained by ignoring the outcome."""
        return KrausMap(np.concatenate([self.branches[b].kraus for b in self.outcomes]))

    def outcomes_for(self, rho) -> list[Branch]:
        return instrument_outcomes(self, rho)


def instrument_outcomes(inst: Instrument, rho, check=True) -> list[Branch]:
    """Outcome probabilities ``Tr Omega_b(rho)`` and normalized post-states.

    Branches with probability at most ``1e-14`` are reported with
    probability 0 and no state.
    """
    if check:
        rho = check_density_matrix(rho)
    out = []
    for b in inst.outcomes:
        sigma = inst.branches[b].apply(rho)
        p = float(np.trace(sigma).real)
        if p <= ZERO_PROB:
            out.append(Branch(b, 0.0, None))
        else:
            out.append(Branch(b, p, sigma / p))
    return out


@dataclass(frozen=True, eq=False)
class ConditionalChannel:
    """One channel per input action; applying action ``a`` applies ``Phi_a``."""

    actions: tuple
    channels: Mapping[str, Channel]

    def __init__(self, channels: Mapping[str, KrausMap], actions=None, tol=DENSITY_TOL):
        if not isinstance(channels, Mapping):
            channels = dict(channels)
        actions = tuple(actions) if actions is not None else tuple(channels)
        if not actions:
            raise ValidationError("a conditional channel needs at least one action")
        if set(actions) != set(channels) or len(set(actions)) != len(actions):
            raise ValidationError("conditional channel actions and keys disagree")
        chans = {}
        for a in actions:
            m = channels[a]
            try:
                chans[a] = m if isinstance(m, Channel) else Channel(m, tol=tol)
            except ValidationError as exc:
                raise ValidationError(f"channel for action {a!r}: {exc}", residual=exc.residual) from None
        if len({c.dim for c in chans.values()}) != 1:
            raise ValidationError("conditional channel members disagree on dimension")
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "channels", chans)

    @property
    def dim(self) -> int:
        return next(iter(self.channels.values())).dim

    def __getitem__(self, a) -> Channel:
        return self.channels[a]

    def apply(self, a, rho) -> np.ndarray:
        if a not in self.channels:
            raise ValidationError(f"unknown action {a!r}")
        return self.channels[a].apply(rho)
