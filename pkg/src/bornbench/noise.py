"""Configurable noise channels emulating hardware degradation.

A noise model places a single-qubit depolarizing channel (probability ``p1``)
after every rotation, a two-qubit depolarizing channel (``p2``) after every
CNOT, optional per-qubit amplitude damping of strength ``t_damp`` after each
entangler sub-covering (one unit of two-qubit gate time), and a per-qubit
readout confusion matrix on the final outcome probabilities.

Depolarizing probability convention: ``p`` is the probability of replacing
the state on the channel support with the maximally mixed state, so the Kraus
set is sqrt(1 - p*(d^2-1)/d^2) * I plus sqrt(p/d^2) * P over the nontrivial
Pauli products P.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kv import parse_kv_file

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULIS = (_I, _X, _Y, _Z)


def depolarizing_kraus(p: float, n_targets: int) -> list[np.ndarray]:
    """Kraus set of the depolarizing channel on 1 or 2 qubits."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarizing probability {p} outside [0, 1]")
    if n_targets not in (1, 2):
        raise ValueError("depolarizing channel supports 1 or 2 targets")
    d = 2**n_targets
    if n_targets == 1:
        paulis = list(_PAULIS)
    else:
        paulis = [np.kron(a, b) for a in _PAULIS for b in _PAULIS]
    ops = [np.sqrt(1.0 - p * (d * d - 1) / (d * d)) * paulis[0]]
    ops.extend(np.sqrt(p / (d * d)) * pauli for pauli in paulis[1:])
    return ops


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    """Kraus set relaxing |1> toward |0> with probability ``gamma``."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"damping probability {gamma} outside [0, 1]")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return [k0, k1]


def apply_readout(probs: np.ndarray, confusion) -> np.ndarray:
    """Apply per-qubit confusion matrices to an outcome distribution.

    ``confusion[k][true_bit, reported_bit]`` must be row-stochastic.  Qubit 0
    is the most significant bit of the outcome index.
    """
    probs = np.asarray(probs, dtype=float)
    n = len(confusion)
    if probs.shape != (2**n,):
        raise ValueError(f"expected {2**n} probabilities for {n} confusion matrices")
    mats = []
    for k, matrix in enumerate(confusion):
        m = np.asarray(matrix, dtype=float)
        if m.shape != (2, 2) or np.any(m < 0.0):
            raise ValueError(f"confusion matrix for qubit {k} must be 2x2 nonnegative")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError(f"confusion matrix rows for qubit {k} must sum to 1")
        mats.append(m)
    out = probs.reshape((2,) * n)
    for k, m in enumerate(mats):
        out = np.moveaxis(np.tensordot(m.T, out, axes=([1], [k])), 0, k)
    return out.reshape(-1)


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} = {value} outside [0, 1]")
    return value


@dataclass(frozen=True)
class NoiseModel:
    """Channel strengths; all default to zero (noiseless)."""

    p1: float = 0.0
    p2: float = 0.0
    readout_flip_all: float = 0.0
    readout_flip: dict[int, float] = field(default_factory=dict)
    t_damp: float = 0.0

    def __post_init__(self) -> None:
        _check_probability("p1", self.p1)
        _check_probability("p2", self.p2)
        _check_probability("readout_flip_all", self.readout_flip_all)
        _check_probability("t_damp", self.t_damp)
        for qubit, flip in self.readout_flip.items():
            if qubit < 0:
                raise ValueError(f"readout_flip_q{qubit}: negative qubit index")
            _check_probability(f"readout_flip_q{qubit}", flip)

    def is_noiseless(self) -> bool:
        return (
            self.p1 == 0.0
            and self.p2 == 0.0
            and self.t_damp == 0.0
            and self.readout_flip_all == 0.0
            and all(f == 0.0 for f in self.readout_flip.values())
        )

    def has_readout_error(self) -> bool:
        return self.readout_flip_all > 0.0 or any(
            f > 0.0 for f in self.readout_flip.values()
        )

    def confusion_matrices(self, n_qubits: int) -> list[np.ndarray] | None:
        """Per-qubit confusion matrices, or None when readout is ideal."""
        if not self.has_readout_error():
            return None
        mats = []
        for q in range(n_qubits):
            f = self.readout_flip.get(q, self.readout_flip_all)
            mats.append(np.array([[1.0 - f, f], [f, 1.0 - f]]))
        return mats

    def kv_items(self) -> list[tuple[str, str]]:
        """Canonical key/value form (used for profiles, echoes and digests)."""
        items = [
            ("p1", repr(self.p1)),
            ("p2", repr(self.p2)),
            ("readout_flip_all", repr(self.readout_flip_all)),
            ("t_damp", repr(self.t_damp)),
        ]
        for qubit in sorted(self.readout_flip):
            items.append((f"readout_flip_q{qubit}", repr(self.readout_flip[qubit])))
        return items


def noise_from_items(items) -> NoiseModel:
    """Build a NoiseModel from string key/value pairs; unknown keys are errors."""
    p1 = p2 = flip_all = t_damp = 0.0
    per_qubit: dict[int, float] = {}
    for key, value in dict(items).items():
        try:
            number = float(value)
        except ValueError as exc:
            raise ValueError(f"{key}: not a number: {value!r}") from exc
        if key == "p1":
            p1 = number
        elif key == "p2":
            p2 = number
        elif key == "readout_flip_all":
            flip_all = number
        elif key == "t_damp":
            t_damp = number
        elif key.startswith("readout_flip_q"):
            per_qubit[int(key[len("readout_flip_q"):])] = number
        else:
            raise ValueError(f"unknown noise key {key!r}")
    return NoiseModel(p1, p2, flip_all, per_qubit, t_damp)


def load_noise(path) -> NoiseModel:
    """Read a noise profile file; an empty profile is noiseless."""
    return noise_from_items(parse_kv_file(path))
