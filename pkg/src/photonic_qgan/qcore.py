"""Dense linear algebra for one- and two-qubit systems.

States are plain complex numpy arrays: a pure state is a length-2 or length-4
amplitude vector, a density matrix a 2x2 or 4x4 array. For two qubits the
signal (control) qubit is the most significant bit, so basis index ``2*s + i``
labels ``|s, i>`` and the ordering is ``|00>, |01>, |10>, |11>``.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgument

DEFAULT_SEED = 20240901

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"X": X, "Y": Y, "Z": Z}


def make_rng(seed=None):
    """Return a numpy ``Generator`` backed by PCG64.

    A ``Generator`` passed in is returned unchanged so that call sites can
    accept either a seed or an existing stream.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(DEFAULT_SEED if seed is None else seed))


def _angle(theta):
    theta = float(theta)
    if not np.isfinite(theta):
        raise InvalidArgument(f"rotation angle must be finite, got {theta}")
    return theta


def ry(theta):
    t = _angle(theta) / 2
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta):
    t = _angle(theta) / 2
    return np.array([[np.exp(-1j * t), 0], [0, np.exp(1j * t)]], dtype=complex)


def hadamard():
    return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def su2(theta_z1, theta_y, theta_z2):
    """``rz(theta_z2) @ ry(theta_y) @ rz(theta_z1)``; the first angle acts first."""
    return rz(theta_z2) @ ry(theta_y) @ rz(theta_z1)


def is_unitary(u, atol=1e-12):
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.abs(u @ u.conj().T - np.eye(u.shape[0])).max() <= atol)


def zyz_decompose(u, atol=1e-9):
    """Split a 2x2 unitary into ``(theta_z1, theta_y, theta_z2, phase)``.

    ``u == exp(1j*phase) * su2(theta_z1, theta_y, theta_z2)``. ``theta_y`` lies in
    ``[0, pi]`` and the z angles in ``[-pi, pi)``. At ``theta_y`` in {0, pi}
    only one combination of the z angles is defined; ``theta_z2`` is set to 0.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u, atol=atol):
        raise InvalidArgument("zyz_decompose expects a 2x2 unitary")
    det = np.linalg.det(u)
    phase = np.angle(det) / 2
    w = u * np.exp(-1j * phase)
    theta_y = 2 * np.arctan2(abs(w[1, 0]), abs(w[0, 0]))
    # w = [[e^{-i(a+c)/2} cos, -e^{-i(a-c)/2} sin], [e^{i(a-c)/2} sin, e^{i(a+c)/2} cos]]
    # with a = theta_z2 (left), c = theta_z1 (right).
    eps = 1e-12
    if abs(w[1, 0]) < eps:
        a, c = 0.0, 2 * np.angle(w[1, 1])
    elif abs(w[0, 0]) < eps:
        a, c = 0.0, -2 * np.angle(w[1, 0])
    else:
        s = 2 * np.angle(w[1, 1])
        d = 2 * np.angle(w[1, 0])
        a, c = (s + d) / 2, (s - d) / 2
    theta_z2, theta_z1 = wrap_angle(a), wrap_angle(c)
    # each 2*pi wrap of a z angle flips the sign of su2; absorb it into the phase
    rebuilt = su2(theta_z1, theta_y, theta_z2)
    k = np.vdot(rebuilt, w)
    phase = phase + np.angle(k)
    return float(theta_z1), float(theta_y), float(theta_z2), float(wrap_angle(phase))


def wrap_angle(theta):
    """Map an angle into ``[-pi, pi)``."""
    return (theta + np.pi) % (2 * np.pi) - np.pi


# -- states ---------------------------------------------------------------

def basis_state(index, qubit_count=2):
    psi = np.zeros(2**qubit_count, dtype=complex)
    psi[index] = 1.0
    return psi


def as_state(amplitudes, atol=1e-12):
    psi = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if psi.size not in (2, 4):
        raise InvalidArgument(f"state must have 2 or 4 amplitudes, got {psi.size}")
    norm = np.vdot(psi, psi).real
    if abs(norm - 1) > atol:
        raise InvalidArgument(f"state is not normalized (norm^2 = {norm})")
    return psi


def qubit_count(psi_or_rho):
    return int(np.log2(np.asarray(psi_or_rho).shape[0]))


def density(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def canonical_phase(psi, atol=1e-12):
    """Remove the global phase so the first nonzero amplitude is real and positive."""
    psi = np.asarray(psi, dtype=complex)
    nz = np.flatnonzero(np.abs(psi) > atol)
    if nz.size == 0:
        return psi.copy()
    a = psi[nz[0]]
    return psi * (abs(a) / a)


def equal_up_to_phase(a, b, atol=1e-9):
    return np.allclose(canonical_phase(a), canonical_phase(b), rtol=0, atol=atol)


def apply_single(psi, gate, qubit):
    """Apply a 2x2 gate to one qubit; qubit 0 is the most significant."""
    psi = np.asarray(psi, dtype=complex)
    gate = np.asarray(gate, dtype=complex)
    if gate.shape != (2, 2):
        raise InvalidArgument(f"single-qubit gate must be 2x2, got {gate.shape}")
    n = qubit_count(psi)
    if not 0 <= qubit < n:
        raise InvalidArgument(f"qubit index {qubit} out of range for {n} qubit(s)")
    if n == 1:
        return gate @ psi
    m = psi.reshape(2, 2)  # [control, target]
    return (gate @ m if qubit == 0 else m @ gate.T).reshape(4)


def controlled_pair(psi, v, u):
    """Apply ``v`` to the target when the control is |0> and ``u`` when it is |1>."""
    psi = np.asarray(psi, dtype=complex)
    v = np.asarray(v, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if psi.shape != (4,) or v.shape != (2, 2) or u.shape != (2, 2):
        raise InvalidArgument("controlled_pair needs a 2-qubit state and two 2x2 gates")
    out = np.empty(4, dtype=complex)
    out[:2] = v @ psi[:2]
    out[2:] = u @ psi[2:]
    return out


def born_probabilities(psi):
    p = np.abs(np.asarray(psi)) ** 2
    return p / p.sum()


def partial_trace(rho, keep):
    """Reduced density matrix of qubit ``keep`` (0 = signal, 1 = idler)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidArgument(f"partial_trace expects a 4x4 density matrix, got {rho.shape}")
    t = rho.reshape(2, 2, 2, 2)  # [s, i, s', i']
    if keep == 0:
        return np.einsum("ajbj->ab", t)
    if keep == 1:
        return np.einsum("jajb->ab", t)
    raise InvalidArgument(f"qubit index {keep} out of range for 2 qubits")


def check_density(rho, atol=1e-12, eig_tol=1e-10):
    """Raise ``InvalidArgument`` unless ``rho`` is Hermitian, unit trace and PSD."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4):
        raise InvalidArgument(f"density matrix must be 2x2 or 4x4, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, rtol=0, atol=atol):
        raise InvalidArgument("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > atol:
        raise InvalidArgument(f"density matrix trace is {np.trace(rho).real}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -eig_tol:
        raise InvalidArgument("density matrix has a negative eigenvalue")
    return rho


def _psd_sqrt(rho, eig_tol=1e-10):
    w, v = np.linalg.eigh(rho)
    w = np.where((w < 0) & (w >= -eig_tol), 0.0, w)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma):
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    rho = check_density(rho, atol=1e-10)
    sigma = check_density(sigma, atol=1e-10)
    if rho.shape != sigma.shape:
        raise InvalidArgument("fidelity needs density matrices of equal dimension")
    r = _psd_sqrt(rho)
    inner = r @ sigma @ r
    inner = (inner + inner.conj().T) / 2
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(min(np.sum(np.sqrt(w)) ** 2, 1.0))


def sample_counts(p, shots, seed=None):
    """Multinomial draw of ``shots`` outcomes from the distribution ``p``."""
    if shots < 0:
        raise InvalidArgument("shots must be non-negative")
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    p = p / p.sum()
    return make_rng(seed).multinomial(int(shots), p)


def haar_unitary(seed=None, dim=2):
    """Haar-random unitary from the QR decomposition of a complex Ginibre matrix."""
    rng = make_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(seed=None, dim=2, rank=None):
    """Random density matrix ``G G^dagger / Tr`` with ``G`` of shape ``dim x rank``."""
    rng = make_rng(seed)
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(seed=None, dim=2):
    rng = make_rng(seed)
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)
