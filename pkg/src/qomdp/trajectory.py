"""Sampled machine trajectories and their CSV / JSON-lines serialization."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channels import ZERO_PROB
from .exceptions import ValidationError
from .qmath import bloch_vector
from .transducers import _Machine


@dataclass(frozen=True)
class TrajectoryRecord:
    """One step of a sampled run.

    ``probability`` is the probability of the sampled output given the
    history; ``branch_probabilities`` lists every output's probability at
    that step. Step 0 (when recorded) is the initial state with no action.
    """

    step: int
    action: str | None
    output: str | None
    probability: float
    branch_probabilities: dict
    state: np.ndarray

    @property
    def bloch(self):
        return bloch_vector(self.state) if self.state.shape == (2, 2) else None

    def to_json(self) -> dict:
        out = {
            "step": self.step, "action": self.action, "output": self.output,
            "probability": self.probability,
            "branchProbabilities": dict(self.branch_probabilities),
            "state": [[[float(z.real), float(z.imag)] for z in row] for row in self.state],
        }
        if self.bloch is not None:
            out["bloch"] = [float(v) for v in self.bloch]
        return out


def simulate_trajectory(M: _Machine, actions: Sequence, seed=None, include_initial=False):
    """Drive ``M`` with ``actions`` and sample one output per step.

    Each step computes ``sigma_b`` for every output ``b``, draws ``b`` with
    probability ``Tr sigma_b`` and continues from ``sigma_b / Tr sigma_b``.
    """
    actions = M._check_strings(actions)
    rng = np.random.default_rng(seed)
    rho = np.array(M.rho0)
    records = []
    if include_initial:
        records.append(TrajectoryRecord(0, None, None, 1.0, {}, rho))
    for t, a in enumerate(actions, start=1):
        sigmas = [M.step(a, b, rho) for b in M.outputs]
        probs = np.array([max(float(np.trace(s).real), 0.0) for s in sigmas])
        total = probs.sum()
        if total <= ZERO_PROB:
            raise ValidationError(f"step {t}: all outputs have probability zero")
        k = int(rng.choice(len(probs), p=probs / total))
        rho = sigmas[k] / probs[k]
        records.append(TrajectoryRecord(t, a, M.outputs[k], float(probs[k]),
                                        dict(zip(M.outputs, probs.tolist())), rho))
    return records


def write_csv(records, fh, outputs):
    """One row per record: step, action, output, probability, one column per
    output probability, the flattened state and (for qubits) the Bloch vector."""
    d = records[0].state.shape[0]
    qubit = d == 2
    header = ["step", "action", "output", "probability"] + [f"p[{b}]" for b in outputs]
    header += [f"rho{i}{j}_{part}" for i in range(d) for j in range(d) for part in ("re", "im")]
    if qubit:
        header += ["x", "y", "z"]
    w = csv.writer(fh)
    w.writerow(header)
    for r in records:
        row = [r.step, r.action or "", r.output or "", repr(r.probability)]
        row += [repr(r.branch_probabilities[b]) if b in r.branch_probabilities else "" for b in outputs]
        for z in r.state.ravel():
            row += [repr(float(z.real)), repr(float(z.imag))]
        if qubit:
            row += [repr(float(v)) for v in r.bloch]
        w.writerow(row)


def write_jsonl(records, fh):
    for r in records:
        fh.write(json.dumps(r.to_json()) + "\n")
