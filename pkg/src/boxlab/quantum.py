"""Boxes from small pure-state qubit models via the Born rule.

Only rank-1 binary projective measurements of the form
``cos(theta) sigma_z + sin(theta) sigma_x`` are supported; their projectors
are computed analytically (eigenvectors ``(cos(theta/2), sin(theta/2))`` and
``(-sin(theta/2), cos(theta/2))`` for outcomes +1 and -1).  Outcome +1 maps
to index 0, -1 to index 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import FLOAT, Box, BoxError, Scenario

_ATOL = 1e-12
MAX_QUBITS = 12


@dataclass(frozen=True)
class PureState:
    """Normalized qubit-register state vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size == 0 or amps.size & (amps.size - 1):
            raise BoxError("amplitude vector length must be a power of two")
        if abs(np.vdot(amps, amps).real - 1.0) > _ATOL:
            raise BoxError("state vector is not normalized")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return int(math.log2(self.amplitudes.size))


@dataclass(frozen=True)
class BinaryMeasurement:
    """A +/-1 valued qubit observable with its two rank-1 projectors."""

    observable: np.ndarray
    projectors: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        obs = np.asarray(self.observable, dtype=np.complex128)
        projs = tuple(np.asarray(p, dtype=np.complex128) for p in self.projectors)
        if obs.shape != (2, 2) or any(p.shape != (2, 2) for p in projs):
            raise BoxError("observable and projectors must be 2x2")
        if not np.allclose(obs, obs.conj().T, atol=_ATOL):
            raise BoxError("observable must be Hermitian")
        if not np.allclose(projs[0] + projs[1], np.eye(2), atol=_ATOL):
            raise BoxError("projectors must sum to identity")
        for p in projs:
            if not np.allclose(p @ p, p, atol=_ATOL) or not np.allclose(
                p, p.conj().T, atol=_ATOL
            ):
                raise BoxError("projectors must be idempotent and Hermitian")
        obs.flags.writeable = False
        for p in projs:
            p.flags.writeable = False
        object.__setattr__(self, "observable", obs)
        object.__setattr__(self, "projectors", projs)

    @classmethod
    def from_angle(cls, theta: float) -> "BinaryMeasurement":
        """Observable cos(theta) sigma_z + sin(theta) sigma_x."""
        sz = np.array([[1, 0], [0, -1]], dtype=np.complex128)
        sx = np.array([[0, 1], [1, 0]], dtype=np.complex128)
        obs = math.cos(theta) * sz + math.sin(theta) * sx
        v_plus = np.array([math.cos(theta / 2), math.sin(theta / 2)], dtype=np.complex128)
        v_minus = np.array([-math.sin(theta / 2), math.cos(theta / 2)], dtype=np.complex128)
        return cls(obs, (np.outer(v_plus, v_plus.conj()), np.outer(v_minus, v_minus.conj())))


SIGMA_Z = BinaryMeasurement.from_angle(0.0)
SIGMA_X = BinaryMeasurement.from_angle(math.pi / 2)


def ghz_state(n: int) -> PureState:
    """(|0...0> + |1...1>)/sqrt(2) on n qubits."""
    if n < 2:
        raise BoxError("GHZ state needs at least 2 qubits")
    if n > MAX_QUBITS:
        raise BoxError(f"qubit cap {MAX_QUBITS} exceeded")
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[0] = amps[-1] = 1 / math.sqrt(2)
    return PureState(amps)


def _apply_single_qubit(op: np.ndarray, psi: np.ndarray, qubit: int, n: int) -> np.ndarray:
    tensor = psi.reshape((2,) * n)
    moved = np.moveaxis(tensor, qubit, 0)
    out = np.tensordot(op, moved, axes=([1], [0]))
    return np.moveaxis(out, 0, qubit).reshape(-1)


def born_box(state: PureState, settings: Sequence[Sequence[BinaryMeasurement]]) -> Box:
    """P(a|x) = || (prod_i proj^{x_i}_{a_i}) |psi> ||^2, one qubit per party."""
    n = state.n_qubits
    if len(settings) != n:
        raise BoxError(
            f"got measurement settings for {len(settings)} parties "
            f"but the state has {n} qubits"
        )
    scenario = Scenario(tuple(len(s) for s in settings), (2,) * n)
    tab = np.zeros(scenario.table_shape)
    for x in scenario.joint_inputs():
        for a in scenario.joint_outputs():
            psi = state.amplitudes
            for i in range(n):
                psi = _apply_single_qubit(settings[i][x[i]].projectors[a[i]], psi, i, n)
            tab[x + a] = np.vdot(psi, psi).real
    return Box(scenario, tab, FLOAT)


def paper_ghz_box() -> Box:
    """The tripartite GHZ box with sigma_z/sigma_x for the first two parties
    and (sigma_z +/- sigma_x)/sqrt(2) for the third."""
    settings = [
        [SIGMA_Z, SIGMA_X],
        [SIGMA_Z, SIGMA_X],
        [BinaryMeasurement.from_angle(math.pi / 4), BinaryMeasurement.from_angle(-math.pi / 4)],
    ]
    return born_box(ghz_state(3), settings)


def parse_angle(text: str) -> BinaryMeasurement:
    """Parse a ``"theta:<radians>"`` observable spec."""
    if not text.startswith("theta:"):
        raise BoxError(f"cannot parse observable spec {text!r}")
    return BinaryMeasurement.from_angle(float(text.split(":", 1)[1]))
