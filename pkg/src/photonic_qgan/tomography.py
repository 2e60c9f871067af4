"""Pauli-basis state tomography for one qubit, with an optional two-qubit variant."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from . import qcore
from .errors import InvalidArgument


@dataclass(frozen=True)
class PauliExpectations:
    x: float
    y: float
    z: float

    @property
    def bloch(self):
        return np.array([self.x, self.y, self.z], dtype=float)


def measure_expectation(rho, basis, shots=None, seed=None):
    """``tr(P rho)`` for Pauli ``basis``; with ``shots`` it is estimated from samples."""
    if basis not in qcore.PAULI:
        raise InvalidArgument(f"basis must be one of X, Y, Z; got {basis!r}")
    rho = np.asarray(rho, dtype=complex)
    exact = float(np.trace(qcore.PAULI[basis] @ rho).real)
    if shots is None:
        return exact
    p_plus = min(max((1 + exact) / 2, 0.0), 1.0)
    n_plus, n_minus = qcore.sample_counts([p_plus, 1 - p_plus], shots, seed)
    return (n_plus - n_minus) / shots if shots else 0.0


def measure_all(rho, shots=None, seed=None):
    rng = qcore.make_rng(seed) if shots is not None else None
    return PauliExpectations(*(measure_expectation(rho, b, shots, rng) for b in "XYZ"))


def project_bloch(r):
    """Closest point of the unit ball to ``r``."""
    r = np.asarray(r, dtype=float)
    return r / max(1.0, np.linalg.norm(r))


def bloch_density(r):
    x, y, z = r
    return (qcore.I2 + x * qcore.X + y * qcore.Y + z * qcore.Z) / 2


def reconstruct(expectations):
    """Linear inversion followed by projection of the Bloch vector onto the unit ball."""
    r = expectations.bloch if isinstance(expectations, PauliExpectations) else np.asarray(expectations, float)
    if r.shape != (3,) or not np.all(np.isfinite(r)):
        raise InvalidArgument("expectations must be three finite numbers")
    return bloch_density(project_bloch(r))


def tomography_roundtrip(rho, shots=None, seed=None):
    return qcore.fidelity(rho, reconstruct(measure_all(rho, shots, seed)))


# -- two qubits -------------------------------------------------------------

PAULI_LABELS = "IXYZ"
_P = {"I": qcore.I2, **qcore.PAULI}


def measure_two_qubit(rho, shots=None, seed=None):
    """Expectations of all 16 Pauli products (``"II"`` is 1)."""
    rho = np.asarray(rho, dtype=complex)
    rng = qcore.make_rng(seed) if shots is not None else None
    out = {}
    for a, b in itertools.product(PAULI_LABELS, repeat=2):
        op = np.kron(_P[a], _P[b])
        val = float(np.trace(op @ rho).real)
        if shots is not None and (a, b) != ("I", "I"):
            p_plus = min(max((1 + val) / 2, 0.0), 1.0)
            n_plus = rng.binomial(shots, p_plus)
            val = (2 * n_plus - shots) / shots
        out[a + b] = val
    return out


def project_psd(rho):
    """Clip negative eigenvalues and renormalise the trace."""
    rho = (rho + rho.conj().T) / 2
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        return np.eye(rho.shape[0], dtype=complex) / rho.shape[0]
    w = w / w.sum()
    return (v * w) @ v.conj().T


def reconstruct_two_qubit(expectations):
    rho = sum(expectations[a + b] * np.kron(_P[a], _P[b])
              for a, b in itertools.product(PAULI_LABELS, repeat=2)) / 4
    return project_psd(rho)


def to_json(rho, **extra):
    """Real and imaginary parts of ``rho`` as nested lists."""
    rho = np.asarray(rho, dtype=complex)
    return json.dumps({"real": rho.real.tolist(), "imag": rho.imag.tolist(), **extra}, indent=2)


def from_json(text):
    d = json.loads(text)
    return np.array(d["real"]) + 1j * np.array(d["imag"])
