"""Bounded-depth witness search for reachability and non-occurrence.

Both searches are breadth-first, so a returned witness is shortest and,
within its length, first in alphabet order. They only ever report a
witness or that the bound was exhausted; they never claim that no witness
exists beyond the bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .channels import ZERO_PROB
from .exceptions import ValidationError
from .transducers import _accept_prob, _Machine

MATCH_SLACK = 1e-12


@dataclass(frozen=True)
class SearchConfig:
    max_len: int
    tau: float
    branch_prob_floor: float = 1e-12
    node_cap: int = 10**7

    def __post_init__(self):
        if self.max_len < 0:
            raise ValidationError("max_len must be nonnegative")
        if not 0.0 <= self.tau <= 1.0:
            raise ValidationError(f"threshold must lie in [0, 1], got {self.tau}")
        if self.node_cap <= 0 or self.branch_prob_floor < 0:
            raise ValidationError("caps must be positive")


@dataclass(frozen=True)
class Witness:
    alpha: tuple
    beta: tuple | None
    achieved: float

    def __post_init__(self):
        if self.beta is not None and len(self.beta) != len(self.alpha):
            raise ValidationError("witness strings differ in length")


@dataclass(frozen=True)
class SearchResult:
    """Outcome of a bounded search.

    ``status`` is ``'witness'``, ``'exhausted'`` (every string up to
    ``max_len_searched`` checked) or ``'node_cap'`` (stopped early with
    ``frontier_size`` nodes left unexpanded).
    """

    status: str
    witness: Witness | None
    max_len_searched: int
    nodes_expanded: int
    frontier_size: int = 0
    notes: tuple = field(default=())

    @property
    def found(self) -> bool:
        return self.status == "witness"

    def to_json(self) -> dict:
        w = self.witness
        return {
            "status": self.status,
            "alpha": list(w.alpha) if w else None,
            "beta": list(w.beta) if w and w.beta is not None else None,
            "achieved": w.achieved if w else None,
            "maxLenSearched": self.max_len_searched,
            "nodesExpanded": self.nodes_expanded,
            "frontierSize": self.frontier_size,
            "notes": list(self.notes),
        }


def search_reachability(M: _Machine, cfg: SearchConfig) -> SearchResult:
    """Shortest ``alpha`` with output-averaged acceptance at least ``tau``."""
    level = [((), np.array(M.rho0))]
    nodes = 0
    for n in range(cfg.max_len + 1):
        for alpha, sigma in level:
            nodes += 1
            acc = float(np.clip(np.trace(M.accept @ sigma).real, 0.0, 1.0))
            if acc >= cfg.tau - MATCH_SLACK:
                return SearchResult("witness", Witness(alpha, None, acc), n, nodes)
            if nodes >= cfg.node_cap:
                return SearchResult("node_cap", None, n, nodes, frontier_size=len(level))
        if n == cfg.max_len:
            break
        level = [(alpha + (a,), M.step_all(a, sigma)) for alpha, sigma in level for a in M.inputs]
    return SearchResult("exhausted", None, cfg.max_len, nodes)


def search_nonoccurrence(M: _Machine, cfg: SearchConfig) -> SearchResult:
    """Shortest realizable ``(alpha, beta)`` with acceptance at most ``tau``.

    Pairs whose run probability is at most ``branch_prob_floor`` are skipped
    and not expanded, since their conditional state is undefined.
    """
    level = [((), (), np.array(M.rho0))]
    nodes = 0
    note = (f"only pairs with run probability above {cfg.branch_prob_floor:g} are considered",)
    for n in range(cfg.max_len + 1):
        survivors = []
        for alpha, beta, sigma in level:
            p = float(np.trace(sigma).real)
            if p <= max(cfg.branch_prob_floor, ZERO_PROB):
                continue
            nodes += 1
            acc = _accept_prob(M, sigma / p)
            if acc <= cfg.tau + MATCH_SLACK:
                return SearchResult("witness", Witness(alpha, beta, acc), n, nodes, notes=note)
            if nodes >= cfg.node_cap:
                return SearchResult("node_cap", None, n, nodes, frontier_size=len(level), notes=note)
            survivors.append((alpha, beta, sigma))
        if n == cfg.max_len:
            break
        level = [(alpha + (a,), beta + (b,), M.step(a, b, sigma))
                 for alpha, beta, sigma in survivors
                 for a, b in product(M.inputs, M.outputs)]
    return SearchResult("exhausted", None, cfg.max_len, nodes, notes=note)
