"""The qubit "Bloch transducer": two mixed-rotation channels read actions,
a pair of z-rotations emits outputs ``b-1`` and ``b1``."""
from __future__ import annotations

import numpy as np

from .channels import ConditionalChannel, Instrument, KrausMap
from .transducers import QuantumMooreMachine

ANGLE = np.pi / 3
INPUTS = ("a1", "a2")
OUTPUTS = ("b-1", "b1")


def rx(theta) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def ry(theta) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def bloch_machine() -> QuantumMooreMachine:
    """Moore machine on a qubit started in ``|+><+|``.

    ``a1`` applies ``rho -> rho/2 + R_x rho R_x^dagger / 2`` and ``a2`` the
    same with ``R_y``; output ``b+-1`` has the single Kraus operator
    ``R_z(+-pi/3) / sqrt 2``. The accepting projection is the identity.
    """
    h = 1 / np.sqrt(2)
    transition = ConditionalChannel({
        "a1": KrausMap([h * np.eye(2), h * rx(ANGLE)]),
        "a2": KrausMap([h * np.eye(2), h * ry(ANGLE)]),
    }, actions=INPUTS)
    output = Instrument({
        "b-1": KrausMap([h * rz(-ANGLE)]),
        "b1": KrausMap([h * rz(ANGLE)]),
    }, outcomes=OUTPUTS)
    plus = np.full((2, 2), 0.5, dtype=complex)
    return QuantumMooreMachine(transition, output, plus)


def alternating_actions(steps: int) -> list:
    return [INPUTS[t % 2] for t in range(steps)]
