"""JSON model files.

Every file is an object with a ``kind`` key. Complex matrices are nested
row lists whose entries are ``[re, im]`` pairs (plain numbers are accepted
on input as real entries); real vectors and stochastic matrices are plain
numbers. Kinds and their keys:

``quantum_moore``
    ``inputs``, ``outputs``, ``transition`` (input -> list of Kraus
    matrices), ``output`` (output -> list of Kraus matrices), ``rho0``,
    optional ``accept``.
``quantum_mealy``
    ``inputs``, ``outputs``, ``instruments`` (input -> output -> list of
    Kraus matrices), ``rho0``, optional ``accept``.
``qomdp``
    as ``quantum_moore`` without ``accept``, plus ``gamma`` and either
    ``reward`` (matrix) or ``action_rewards`` (input -> matrix).
``classical_moore``
    ``states``, ``inputs``, ``outputs``, ``transitions`` (input ->
    column-stochastic matrix), ``emission``, ``p0``, optional ``goal``.
``classical_pomdp``
    as ``classical_moore`` plus ``rewards`` and ``gamma``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channels import ConditionalChannel, Instrument, KrausMap
from .classical import ClassicalMoore, ClassicalPomdp
from .exceptions import ValidationError
from .qmath import DENSITY_TOL
from .solver import AlphaSet, Qomdp
from .transducers import QuantumMealyMachine, QuantumMooreMachine

KINDS = ("classical_moore", "classical_pomdp", "quantum_moore", "quantum_mealy", "qomdp")


class ModelParseError(ValueError):
    """Malformed JSON or a missing/mistyped field; ``path`` locates it."""

    def __init__(self, message, path="$"):
        self.path = path
        super().__init__(f"{path}: {message}")


def _get(obj, key, path):
    if not isinstance(obj, dict):
        raise ModelParseError("expected an object", path)
    if key not in obj:
        raise ModelParseError(f"missing key {key!r}", path)
    return obj[key]


def _labels(obj, key, path):
    vals = _get(obj, key, path)
    if not isinstance(vals, list) or not all(isinstance(v, str) for v in vals):
        raise ModelParseError("expected a list of strings", f"{path}.{key}")
    return vals


def _number(x, path):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ModelParseError("expected a number", path)
    return float(x)


def parse_complex_matrix(data, path) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ModelParseError("expected a nonempty list of rows", path)
    n = len(data)
    out = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(data):
        if len(row) != n:
            raise ModelParseError(f"row has {len(row)} entries, expected {n}", f"{path}[{i}]")
        for j, x in enumerate(row):
            where = f"{path}[{i}][{j}]"
            if isinstance(x, list):
                if len(x) != 2:
                    raise ModelParseError("complex entries must be [re, im]", where)
                out[i, j] = complex(_number(x[0], where), _number(x[1], where))
            else:
                out[i, j] = _number(x, where)
    return out


def parse_real_matrix(data, path) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ModelParseError("expected a nonempty list of rows", path)
    width = len(data[0])
    rows = []
    for i, row in enumerate(data):
        if len(row) != width:
            raise ModelParseError("ragged matrix", f"{path}[{i}]")
        rows.append([_number(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)])
    return np.array(rows)


def parse_vector(data, path) -> np.ndarray:
    if not isinstance(data, list):
        raise ModelParseError("expected a list of numbers", path)
    return np.array([_number(x, f"{path}[{i}]") for i, x in enumerate(data)])


def _kraus_list(data, path) -> KrausMap:
    if not isinstance(data, list) or not data:
        raise ModelParseError("expected a nonempty list of Kraus matrices", path)
    mats = [parse_complex_matrix(K, f"{path}[{k}]") for k, K in enumerate(data)]
    return _validated(lambda: KrausMap(mats), path)


def _keyed(obj, key, labels, path, parse):
    table = _get(obj, key, path)
    where = f"{path}.{key}"
    if not isinstance(table, dict):
        raise ModelParseError("expected an object", where)
    if set(table) != set(labels):
        raise ModelParseError(f"keys {sorted(table)} do not match declared symbols {sorted(labels)}", where)
    return {lab: parse(table[lab], f"{where}.{lab}") for lab in labels}


def _validated(build, path):
    try:
        return build()
    except ValidationError as exc:
        if exc.path:
            raise
        raise ValidationError(str(exc), path=path, residual=exc.residual) from None


def model_from_dict(data, tol=DENSITY_TOL):
    """Build and validate the model described by ``data``."""
    kind = _get(data, "kind", "$")
    if kind not in KINDS:
        raise ModelParseError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}", "$.kind")
    if kind in ("classical_moore", "classical_pomdp"):
        states = _labels(data, "states", "$")
        inputs = _labels(data, "inputs", "$")
        outputs = _labels(data, "outputs", "$")
        trans = _keyed(data, "transitions", inputs, "$", parse_real_matrix)
        for a, P in trans.items():
            _validated(lambda P=P, a=a: _stochastic_check(P, f"transitions[{a}]", states),
                       f"$.transitions.{a}")
        emission = parse_real_matrix(_get(data, "emission", "$"), "$.emission")
        _validated(lambda: _stochastic_check(emission, "emission", states), "$.emission")
        p0 = parse_vector(_get(data, "p0", "$"), "$.p0")
        goal = data.get("goal")
        if kind == "classical_moore":
            return _validated(lambda: ClassicalMoore(states, inputs, outputs, trans, emission, p0, goal), "$")
        rewards = parse_vector(_get(data, "rewards", "$"), "$.rewards")
        gamma = _number(_get(data, "gamma", "$"), "$.gamma")
        return _validated(lambda: ClassicalPomdp(states, inputs, outputs, trans, emission, p0, goal,
                                                 rewards=rewards, gamma=gamma), "$")

    inputs = _labels(data, "inputs", "$")
    outputs = _labels(data, "outputs", "$")
    rho0 = parse_complex_matrix(_get(data, "rho0", "$"), "$.rho0")
    accept = parse_complex_matrix(data["accept"], "$.accept") if "accept" in data else None
    if kind == "quantum_mealy":
        insts = _get(data, "instruments", "$")
        if not isinstance(insts, dict) or set(insts) != set(inputs):
            raise ModelParseError("instrument keys must match the declared inputs", "$.instruments")
        instruments = {}
        for a in inputs:
            branches = _keyed(insts, a, outputs, "$.instruments", _kraus_list)
            instruments[a] = _validated(lambda b=branches: Instrument(b, outcomes=outputs, tol=tol),
                                        f"$.instruments.{a}")
        return _validated(lambda: QuantumMealyMachine(instruments, rho0, accept, inputs=inputs), "$")

    trans = _keyed(data, "transition", inputs, "$", _kraus_list)
    transition = _validated(lambda: ConditionalChannel(trans, actions=inputs, tol=tol), "$.transition")
    branches = _keyed(data, "output", outputs, "$", _kraus_list)
    output = _validated(lambda: Instrument(branches, outcomes=outputs, tol=tol), "$.output")
    if kind == "quantum_moore":
        return _validated(lambda: QuantumMooreMachine(transition, output, rho0, accept), "$")
    gamma = _number(_get(data, "gamma", "$"), "$.gamma")
    if "reward" in data:
        reward = parse_complex_matrix(data["reward"], "$.reward")
        return _validated(lambda: Qomdp(transition, output, gamma, rho0, reward=reward), "$")
    rewards = _keyed(data, "action_rewards", inputs, "$", parse_complex_matrix)
    return _validated(lambda: Qomdp(transition, output, gamma, rho0, action_rewards=rewards), "$")


def _stochastic_check(M, name, states):
    from .classical import _check_column_stochastic
    return _check_column_stochastic(M, name, labels=states)


def load_model(path, tol=DENSITY_TOL):
    """Read and validate a model file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"invalid JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})") from None
    return model_from_dict(data, tol=tol)


def complex_to_json(A) -> list:
    A = np.asarray(A, dtype=complex)
    if A.ndim == 2:
        return [[[float(z.real), float(z.imag)] for z in row] for row in A]
    return [complex_to_json(a) for a in A]


def _real(A) -> list:
    return np.asarray(A, dtype=float).tolist()


def _kraus_json(m: KrausMap) -> list:
    return [complex_to_json(K) for K in m.kraus]


def model_to_dict(model) -> dict:
    """Inverse of :func:`model_from_dict`."""
    if isinstance(model, ClassicalMoore):
        out = {
            "kind": "classical_pomdp" if isinstance(model, ClassicalPomdp) else "classical_moore",
            "states": list(model.states), "inputs": list(model.actions), "outputs": list(model.outputs),
            "transitions": {a: _real(model.transitions[a]) for a in model.actions},
            "emission": _real(model.emission), "p0": _real(model.p0),
        }
        if model.goal is not None:
            out["goal"] = model.goal
        if isinstance(model, ClassicalPomdp):
            out["rewards"] = _real(model.rewards)
            out["gamma"] = model.gamma
        return out
    if isinstance(model, QuantumMealyMachine):
        return {
            "kind": "quantum_mealy", "inputs": list(model.inputs), "outputs": list(model.outputs),
            "instruments": {a: {b: _kraus_json(model.instruments[a][b]) for b in model.outputs}
                            for a in model.inputs},
            "rho0": complex_to_json(model.rho0), "accept": complex_to_json(model.accept),
        }
    if isinstance(model, (QuantumMooreMachine, Qomdp)):
        out = {
            "kind": "quantum_moore" if isinstance(model, QuantumMooreMachine) else "qomdp",
            "inputs": list(model.transition.actions), "outputs": list(model.output.outcomes),
            "transition": {a: _kraus_json(model.transition[a]) for a in model.transition.actions},
            "output": {b: _kraus_json(model.output[b]) for b in model.output.outcomes},
            "rho0": complex_to_json(model.rho0),
        }
        if isinstance(model, QuantumMooreMachine):
            out["accept"] = complex_to_json(model.accept)
        else:
            out["gamma"] = model.gamma
            if model.reward is not None:
                out["reward"] = complex_to_json(model.reward)
            else:
                out["action_rewards"] = {a: complex_to_json(R) for a, R in model.action_rewards.items()}
        return out
    raise TypeError(f"cannot serialize {type(model).__name__}")


def pretty_json(obj, indent=0) -> str:
    # objects one key per line, arrays on a single line
    if not isinstance(obj, dict) or not obj:
        return json.dumps(obj)
    pad = " " * (indent + 2)
    items = [f"{pad}{json.dumps(k)}: {pretty_json(obj[k], indent + 2)}" for k in sorted(obj)]
    return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"


def dumps_model(model) -> str:
    return pretty_json(model_to_dict(model))


def save_model(model, path):
    Path(path).write_text(dumps_model(model) + "\n")


def solution_to_dict(alpha_set: AlphaSet, iterations, bound, gamma, epsilon) -> dict:
    return {
        "kind": "qomdp_solution",
        "gamma": gamma, "epsilon": epsilon, "iterations": iterations, "bound": bound,
        "actions": list(alpha_set.actions),
        "operators": complex_to_json(alpha_set.operators),
    }


def solution_from_dict(data) -> AlphaSet:
    if _get(data, "kind", "$") != "qomdp_solution":
        raise ModelParseError("not a solution file", "$.kind")
    ops = [parse_complex_matrix(A, f"$.operators[{i}]") for i, A in enumerate(_get(data, "operators", "$"))]
    return AlphaSet(np.stack(ops), _labels(data, "actions", "$"))
