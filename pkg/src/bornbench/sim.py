"""Exact statevector and density-matrix simulation of Rx/Rz/CNOT circuits.

Conventions: qubit 0 is the most significant bit of a basis index,
Rx(t) = exp(-i t X / 2) and Rz(t) = exp(-i t Z / 2), so shifting any angle by
pi/2 gives the exact parameter-shift derivative of outcome probabilities.
All operations are pure; randomness enters only through explicit generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ansatz import CircuitSpec
from .noise import (
    NoiseModel,
    amplitude_damping_kraus,
    apply_readout,
    depolarizing_kraus,
)

MAX_STATEVECTOR_QUBITS = 24
MAX_DENSITY_QUBITS = 10


@dataclass(eq=False)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got {amps.shape}")
        self.amplitudes = amps

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)


@dataclass(eq=False)
class DensityMatrix:
    n_qubits: int
    entries: np.ndarray

    def __post_init__(self) -> None:
        dim = 2**self.n_qubits
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {entries.shape}")
        self.entries = entries

    @classmethod
    def zero(cls, n_qubits: int) -> "DensityMatrix":
        dim = 2**n_qubits
        entries = np.zeros((dim, dim), dtype=complex)
        entries[0, 0] = 1.0
        return cls(n_qubits, entries)

    @classmethod
    def from_statevector(cls, state: StateVector) -> "DensityMatrix":
        return cls(state.n_qubits, np.outer(state.amplitudes, state.amplitudes.conj()))


@dataclass(eq=False)
class Histogram:
    """Counts of measured basis states from a fixed number of shots."""

    counts: np.ndarray
    n_shots: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 1 or np.any(counts < 0):
            raise ValueError("counts must be a 1-d nonnegative array")
        if int(counts.sum()) != self.n_shots:
            raise ValueError("counts must sum to n_shots")
        self.counts = counts

    def empirical(self) -> np.ndarray:
        return self.counts / self.n_shots


_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _rx_matrix(angle: float) -> np.ndarray:
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def _rz_matrix(angle: float) -> np.ndarray:
    phase = np.exp(-0.5j * angle)
    return np.array([[phase, 0.0], [0.0, phase.conjugate()]], dtype=complex)


def _check_qubit(n_qubits: int, qubit: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {n_qubits}-qubit register")


def _apply_single(amps: np.ndarray, n: int, qubit: int, u: np.ndarray) -> np.ndarray:
    psi = amps.reshape((2,) * n)
    psi = np.moveaxis(psi, qubit, 0).reshape(2, -1)
    psi = u @ psi
    return np.moveaxis(psi.reshape((2,) * n), 0, qubit).reshape(-1)


def _apply_cnot(amps: np.ndarray, n: int, control: int, target: int) -> np.ndarray:
    psi = amps.reshape((2,) * n)
    psi = np.moveaxis(psi, (control, target), (0, 1)).copy()
    psi[1] = psi[1, ::-1]
    return np.moveaxis(psi, (0, 1), (control, target)).reshape(-1)


def apply_rx(state: StateVector, qubit: int, angle: float) -> StateVector:
    """Rotate one qubit about X by ``angle``."""
    _check_qubit(state.n_qubits, qubit)
    return StateVector(
        state.n_qubits,
        _apply_single(state.amplitudes, state.n_qubits, qubit, _rx_matrix(angle)),
    )


def apply_rz(state: StateVector, qubit: int, angle: float) -> StateVector:
    """Rotate one qubit about Z by ``angle``; outcome probabilities unchanged."""
    _check_qubit(state.n_qubits, qubit)
    return StateVector(
        state.n_qubits,
        _apply_single(state.amplitudes, state.n_qubits, qubit, _rz_matrix(angle)),
    )


def apply_cnot(state: StateVector, control: int, target: int) -> StateVector:
    """Flip ``target`` wherever ``control`` is set."""
    _check_qubit(state.n_qubits, control)
    _check_qubit(state.n_qubits, target)
    if control == target:
        raise ValueError("CNOT control and target must differ")
    return StateVector(
        state.n_qubits,
        _apply_cnot(state.amplitudes, state.n_qubits, control, target),
    )


def _check_theta(circuit: CircuitSpec, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (circuit.parameter_count,):
        raise ValueError(
            f"circuit has {circuit.parameter_count} parameters, got {theta.shape}"
        )
    return theta


def run_statevector(circuit: CircuitSpec, theta) -> StateVector:
    """Evolve |0...0> through the circuit at rotation angles ``theta``."""
    theta = _check_theta(circuit, theta)
    n = circuit.n_qubits
    if n > MAX_STATEVECTOR_QUBITS:
        raise ValueError(f"statevector simulation capped at {MAX_STATEVECTOR_QUBITS} qubits")
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1.0
    for instr in circuit.instructions():
        op = instr[0]
        if op == "rx":
            amps = _apply_single(amps, n, instr[1], _rx_matrix(theta[instr[2]]))
        elif op == "rz":
            amps = _apply_single(amps, n, instr[1], _rz_matrix(theta[instr[2]]))
        elif op == "cnot":
            amps = _apply_cnot(amps, n, instr[1], instr[2])
        # ticks mark gate time only
    return StateVector(n, amps)


def exact_probabilities(state: StateVector | DensityMatrix) -> np.ndarray:
    """Outcome distribution over the 2^n basis states."""
    if isinstance(state, StateVector):
        probs = np.abs(state.amplitudes) ** 2
    else:
        probs = np.real(np.diag(state.entries)).copy()
        if probs.min() < -1e-8:
            raise ValueError("density matrix has significantly negative populations")
        np.clip(probs, 0.0, None, out=probs)
    return probs / probs.sum()


def sample_histogram(probs, n_shots: int, rng: np.random.Generator) -> Histogram:
    """Draw ``n_shots`` i.i.d. basis-state samples; deterministic given ``rng``."""
    if n_shots <= 0:
        raise ValueError("n_shots must be positive")
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0.0) or p.sum() <= 0.0:
        raise ValueError("probabilities must be nonnegative with positive sum")
    counts = rng.multinomial(n_shots, p / p.sum())
    return Histogram(counts.astype(np.int64), n_shots)


# ---------------------------------------------------------------------------
# Density-matrix evolution under noise


def _tensor_apply(t: np.ndarray, axes, m: np.ndarray) -> np.ndarray:
    """Contract matrix ``m`` (2^k x 2^k) over the given k axes of ``t``."""
    k = len(axes)
    t = np.moveaxis(t, axes, range(k))
    shape = t.shape
    t = (m @ t.reshape(2**k, -1)).reshape((2,) * k + shape[k:])
    return np.moveaxis(t, range(k), axes)


def _dm_unitary(rho: np.ndarray, n: int, qubits, u: np.ndarray) -> np.ndarray:
    ket = list(qubits)
    bra = [n + q for q in qubits]
    rho = _tensor_apply(rho, ket, u)
    return _tensor_apply(rho, bra, u.conj())


def _dm_kraus(rho: np.ndarray, n: int, qubits, kraus) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in kraus:
        out += _dm_unitary(rho, n, qubits, k)
    return out


def evolve_density(
    circuit: CircuitSpec, theta, noise: NoiseModel | None = None
) -> DensityMatrix:
    """Density-matrix evolution; each gate is followed by its noise channel
    and every entangler sub-covering by per-qubit amplitude damping."""
    theta = _check_theta(circuit, theta)
    n = circuit.n_qubits
    if n > MAX_DENSITY_QUBITS:
        raise ValueError(f"density-matrix simulation capped at {MAX_DENSITY_QUBITS} qubits")

    kraus_1q = None
    kraus_2q = None
    kraus_damp = None
    if noise is not None:
        if noise.p1 > 0.0:
            kraus_1q = depolarizing_kraus(noise.p1, 1)
        if noise.p2 > 0.0:
            kraus_2q = depolarizing_kraus(noise.p2, 2)
        if noise.t_damp > 0.0:
            kraus_damp = amplitude_damping_kraus(noise.t_damp)

    rho = np.zeros((2,) * (2 * n), dtype=complex)
    rho[(0,) * (2 * n)] = 1.0
    for instr in circuit.instructions():
        op = instr[0]
        if op in ("rx", "rz"):
            qubit = instr[1]
            u = _rx_matrix(theta[instr[2]]) if op == "rx" else _rz_matrix(theta[instr[2]])
            rho = _dm_unitary(rho, n, [qubit], u)
            if kraus_1q is not None:
                rho = _dm_kraus(rho, n, [qubit], kraus_1q)
        elif op == "cnot":
            control, target = instr[1], instr[2]
            rho = _tensor_apply(rho, [control, target], _CNOT)
            rho = _tensor_apply(rho, [n + control, n + target], _CNOT)
            if kraus_2q is not None:
                rho = _dm_kraus(rho, n, [control, target], kraus_2q)
        elif op == "tick" and kraus_damp is not None:
            for qubit in range(n):
                rho = _dm_kraus(rho, n, [qubit], kraus_damp)
    return DensityMatrix(n, rho.reshape(2**n, 2**n))


def evolve_noisy(circuit: CircuitSpec, theta, noise: NoiseModel) -> np.ndarray:
    """Outcome distribution of the circuit under the noise model, readout
    confusion included."""
    rho = evolve_density(circuit, theta, noise)
    probs = exact_probabilities(rho)
    confusion = noise.confusion_matrices(circuit.n_qubits)
    if confusion is not None:
        probs = apply_readout(probs, confusion)
    return probs


def circuit_probabilities(
    circuit: CircuitSpec, theta, noise: NoiseModel | None = None
) -> np.ndarray:
    """Outcome distribution, picking the statevector path when noiseless."""
    if noise is None or noise.is_noiseless():
        return exact_probabilities(run_statevector(circuit, theta))
    return evolve_noisy(circuit, theta, noise)
