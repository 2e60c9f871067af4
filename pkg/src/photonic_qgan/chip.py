"""Model of the two-qubit silicon photonic chip.

The chip pumps two spiral photon-pair sources, splits each pair with an
asymmetric Mach-Zehnder interferometer (AMZI) and post-selects on
signal/idler coincidences. The AMZI phases set the amplitudes of the
path-entangled state ``alpha|00> + beta|11>``; a controlled-unitary stage then
applies ``V`` or ``U`` to the idler depending on the signal qubit, and a final
set of single-qubit gates acts on each photon.

Fourteen thermo-optic phase shifters are modelled. Their assignment to logical
gates is the table :data:`SHIFTER_MAP`; it is a modelling assumption, since
only shifters 8-11 are named individually. Shifter 11 is broken and behaves
as a fixed unknown unitary, which is compensated by shifters 8-10.
"""

from __future__ import annotations

import csv
import functools
import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from . import qcore
from .errors import FitError, InvalidArgument

N_SHIFTERS = 14
BROKEN_INDEX = 11
BROKEN_SEED = 11
DEFAULT_C_MAX = 3000.0

# 1-based shifter index -> (gate, role)
SHIFTER_MAP = {
    1: ("V", "rz_in"),
    2: ("V", "ry"),
    3: ("V", "rz_out"),
    4: ("U", "rz_in"),
    5: ("U", "ry"),
    6: ("U", "rz_out"),
    7: ("source", "pump_phase"),
    8: ("signal", "rz_in"),
    9: ("signal", "ry"),
    10: ("signal", "rz_out"),
    11: ("signal", "broken"),
    12: ("idler", "rz_in"),
    13: ("idler", "ry"),
    14: ("idler", "rz_out"),
}


@functools.lru_cache(maxsize=None)
def default_broken_unitary():
    """Seeded Haar-random stand-in for the broken shifter's unknown transform."""
    u = qcore.haar_unitary(BROKEN_SEED)
    u.setflags(write=False)
    return u


# -- AMZI and coincidences ------------------------------------------------

def amzi_matrix(total_phase):
    """AMZI transfer matrix for a given total arm phase.

    Built as coupler . phase . coupler with balanced ``[[1, i], [i, 1]]/sqrt(2)``
    couplers, which gives
    ``exp(i(x+pi)/2) [[sin(x/2), cos(x/2)], [cos(x/2), -sin(x/2)]]``.
    """
    coupler = np.array([[1, 1j], [1j, 1]], dtype=complex) / np.sqrt(2)
    arm = np.diag([np.exp(1j * total_phase), 1.0])
    return coupler @ arm @ coupler


def amzi_transfer(phi, photon="signal"):
    """Signal or idler transfer matrix at heater phase ``phi``.

    The free spectral range is twice the pair's wavelength separation, so the
    idler picks up an extra pi of arm phase relative to the signal.
    """
    if photon == "signal":
        return amzi_matrix(phi)
    if photon == "idler":
        return amzi_matrix(phi + np.pi)
    raise InvalidArgument(f"photon must be 'signal' or 'idler', got {photon!r}")


def coincidence_rate(phi, c_max):
    if c_max < 0:
        raise InvalidArgument(f"c_max must be non-negative, got {c_max}")
    return c_max * np.sin(np.asarray(phi) / 2) ** 4


def derive_coincidence_from_state(phi, entry_port="a"):
    """Post-selected probability of signal at port c and idler at port d.

    Both photons enter the AMZI through ``entry_port``; the pair amplitude is
    the product of the single-photon amplitudes.
    """
    col = {"a": 0, "b": 1}.get(entry_port)
    if col is None:
        raise InvalidArgument(f"entry_port must be 'a' or 'b', got {entry_port!r}")
    us = amzi_transfer(phi, "signal")
    ui = amzi_transfer(phi, "idler")
    amp = us[0, col] * ui[1, col]
    return float(abs(amp) ** 2)


# -- heater calibration ---------------------------------------------------

@dataclass(frozen=True)
class HeaterCalibration:
    """Fit of ``counts = a * sin(alpha * I**2 + beta)**4 + b`` (I in mA)."""

    a: float
    alpha: float
    beta: float
    b: float
    rms: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidArgument("calibration amplitude a must be positive")
        if self.b < 0:
            raise InvalidArgument("calibration background b must be non-negative")

    def predict(self, current):
        current = np.asarray(current, dtype=float)
        return self.a * np.sin(self.alpha * current**2 + self.beta) ** 4 + self.b

    def to_json(self):
        return json.dumps({"a": self.a, "alpha": self.alpha, "beta": self.beta,
                           "b": self.b, "rms": self.rms}, indent=2)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["a"], d["alpha"], d["beta"], d["b"], d.get("rms", 0.0))


def _fringe_design(s, alpha, beta):
    return np.sin(alpha * s + beta) ** 4


def fit_calibration(samples, n_alpha=400, n_beta=64):
    """Least-squares fit of the heater fringe to ``(current_mA, counts)`` samples.

    A grid over ``(alpha, beta)`` with ``a, b`` solved linearly at each node
    seeds a Levenberg-Marquardt refinement of all four coefficients. The
    result is canonicalised to ``alpha > 0`` and ``beta`` in ``[0, pi)``
    (``sin**4`` has period pi).
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 8:
        raise FitError("calibration needs at least 8 (current, counts) samples")
    current, y = data[:, 0], data[:, 1]
    s = current**2
    if np.ptp(y) <= 1e-12 * max(1.0, np.abs(y).max()):
        raise FitError("counts are constant; no fringe to fit")
    span = np.ptp(s)
    if span <= 0:
        raise FitError("currents do not vary")

    # one full sin^4 period over the sampled range needs alpha*span >= pi
    ds = np.diff(np.sort(np.unique(s)))
    alpha_max = np.pi / (2 * ds.min()) if ds.size else np.pi / span
    alphas = np.linspace(np.pi / (4 * span), min(alpha_max, 40 * np.pi / span), n_alpha)
    betas = np.linspace(0, np.pi, n_beta, endpoint=False)
    # closed-form (a, b) for every grid node at once
    f = np.sin(alphas[:, None, None] * s + betas[None, :, None]) ** 4
    fc = f - f.mean(axis=2, keepdims=True)
    yc = y - y.mean()
    var = np.einsum("abn,abn->ab", fc, fc)
    cov = fc @ yc
    a_grid = np.where(var > 0, cov / np.where(var > 0, var, 1.0), 0.0)
    cost = yc @ yc - a_grid * cov
    i, j = np.unravel_index(np.argmin(cost), cost.shape)
    a0, alpha0, beta0 = a_grid[i, j], alphas[i], betas[j]
    b0 = y.mean() - a0 * f[i, j].mean()

    scale = max(np.abs(y).max(), 1.0)

    def residual(p):
        a, alpha, beta, b = p
        return (a * _fringe_design(s, alpha, beta) + b - y) / scale

    res = least_squares(residual, [a0, alpha0, beta0, b0], method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=20000)
    a, alpha, beta, b = res.x
    if not np.all(np.isfinite(res.x)) or a <= 0:
        raise FitError("calibration fit did not converge to a positive amplitude")
    if alpha < 0:
        alpha, beta = -alpha, -beta
    beta = float(beta % np.pi)
    rms = float(np.sqrt(np.mean((a * _fringe_design(s, alpha, beta) + b - y) ** 2)))
    return HeaterCalibration(float(a), float(alpha), beta, float(max(b, 0.0)), rms)


def current_for_phase(cal, phi_target):
    """Smallest non-negative current with ``alpha*I**2 + beta == phi_target (mod 2 pi)``.

    ``phi_target`` is the argument of the fitted fringe, not the AMZI phase
    (the AMZI phase is twice that argument).
    """
    if cal.alpha <= 0:
        raise InvalidArgument("calibration alpha must be positive")
    delta = (phi_target - cal.beta) % (2 * np.pi)
    if np.isclose(delta, 2 * np.pi, rtol=0, atol=1e-12):
        delta = 0.0
    return float(np.sqrt(delta / cal.alpha))


def read_calibration_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"current_mA", "counts_per_s"} <= set(reader.fieldnames):
            raise InvalidArgument(f"{path}: expected header current_mA,counts_per_s")
        return [(float(r["current_mA"]), float(r["counts_per_s"])) for r in reader]


def write_calibration_csv(path, samples):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["current_mA", "counts_per_s"])
        for i, c in samples:
            w.writerow([repr(float(i)), repr(float(c))])


def synthetic_fringe(a=3000.0, alpha=0.05, beta=0.3, b=20.0, n=120, i_max=12.0,
                     noise=0.0, seed=None):
    """Sampled fringe with optional relative Gaussian noise on the counts."""
    current = np.linspace(0.0, i_max, n)
    counts = a * np.sin(alpha * current**2 + beta) ** 4 + b
    if noise:
        counts = counts + noise * a * qcore.make_rng(seed).standard_normal(n)
    return list(zip(current.tolist(), counts.tolist()))


# -- entangled source and state preparation -------------------------------

@dataclass(frozen=True)
class SourceAmplitudes:
    alpha: complex
    beta: complex

    def vector(self):
        """Two-qubit amplitudes of ``alpha|00> + beta|11>``."""
        return np.array([self.alpha, 0, 0, self.beta], dtype=complex)


def source_state(phi1, phi2, theta8=0.0, c_max1=DEFAULT_C_MAX, c_max2=DEFAULT_C_MAX):
    c1 = float(coincidence_rate(phi1, c_max1))
    c2 = float(coincidence_rate(phi2, c_max2))
    if c1 <= 0 and c2 <= 0:
        raise InvalidArgument("both sources are dark; no coincidences to post-select")
    angle = np.arctan2(np.sqrt(c2), np.sqrt(c1))
    return SourceAmplitudes(np.exp(1j * theta8) * np.cos(angle), complex(np.sin(angle)))


def amzi_phases_for_angle(angle, c_max1=DEFAULT_C_MAX, c_max2=DEFAULT_C_MAX):
    """AMZI phases giving source amplitudes ``|cos(angle)|, |sin(angle)|``."""
    c, s = np.cos(angle) ** 2, np.sin(angle) ** 2
    # relative rates only matter; keep the brighter source at its maximum
    r1, r2 = c / c_max1, s / c_max2
    m = max(r1, r2)
    phi1 = 2 * np.arcsin((r1 / m) ** 0.25)
    phi2 = 2 * np.arcsin((r2 / m) ** 0.25)
    return float(phi1), float(phi2)


@dataclass(frozen=True)
class ChipConfiguration:
    """Phases programmed on the chip.

    ``shifter_phases[k-1]`` is phase shifter ``k`` in :data:`SHIFTER_MAP`. The
    broken shifter keeps whatever value it was constructed with; its action is
    always ``broken_unitary``.
    """

    amzi_phases: tuple = (np.pi, 0.0)
    shifter_phases: tuple = (0.0,) * N_SHIFTERS
    c_max: tuple = (DEFAULT_C_MAX, DEFAULT_C_MAX)
    broken_unitary: np.ndarray = field(default_factory=default_broken_unitary, compare=False)
    broken_index: int = BROKEN_INDEX

    def __post_init__(self):
        phases = tuple(float(p) for p in self.shifter_phases)
        amzi = tuple(float(p) for p in self.amzi_phases)
        if len(phases) != N_SHIFTERS or len(amzi) != 2:
            raise InvalidArgument(f"need {N_SHIFTERS} shifter phases and 2 AMZI phases")
        if not (np.all(np.isfinite(phases)) and np.all(np.isfinite(amzi))):
            raise InvalidArgument("chip phases must be finite")
        u = self.broken_unitary
        if u is not default_broken_unitary():
            u = np.array(u, dtype=complex)
            if not qcore.is_unitary(u, atol=1e-10):
                raise InvalidArgument("broken_unitary must be unitary")
            u.setflags(write=False)
        object.__setattr__(self, "shifter_phases", phases)
        object.__setattr__(self, "amzi_phases", amzi)
        object.__setattr__(self, "broken_unitary", u)

    def shifter(self, k):
        return self.shifter_phases[k - 1]

    def with_shifters(self, **updates):
        """Copy with shifters replaced, e.g. ``cfg.with_shifters(theta9=0.3)``.

        The broken shifter cannot be changed.
        """
        phases = list(self.shifter_phases)
        for key, value in updates.items():
            k = int(key.removeprefix("theta"))
            if k == self.broken_index:
                raise InvalidArgument(f"shifter {k} is broken and read-only")
            phases[k - 1] = float(value)
        return replace(self, shifter_phases=tuple(phases))

    def gate(self, name):
        """su2 gate assembled from the three shifters mapped to ``name``."""
        ks = {role: k for k, (g, role) in SHIFTER_MAP.items() if g == name}
        return qcore.su2(self.shifter(ks["rz_in"]), self.shifter(ks["ry"]),
                         self.shifter(ks["rz_out"]))

    def signal_gate(self):
        """Physical signal-qubit chain ``U_brok Rz(t10) Ry(t9) Rz(t8)``."""
        return self.broken_unitary @ qcore.su2(self.shifter(8), self.shifter(9), self.shifter(10))


def prepare_state(config):
    """Post-selected two-qubit state produced by ``config``.

    source -> controlled pair diag(V, U) -> signal chain and idler gate.
    """
    src = source_state(config.amzi_phases[0], config.amzi_phases[1], 0.0, *config.c_max)
    psi = src.vector()
    psi[3] *= np.exp(1j * config.shifter(7))
    psi = qcore.controlled_pair(psi, config.gate("V"), config.gate("U"))
    psi = qcore.apply_single(psi, config.signal_gate(), 0)
    psi = qcore.apply_single(psi, config.gate("idler"), 1)
    return psi


def compensate_broken_shifter(u_brok):
    """Angles ``(theta8_0, theta9_0, theta10_0)`` undoing the broken shifter.

    ``Rz(theta10_0) Ry(theta9_0) Rz(theta8_0)`` equals ``u_brok^dagger`` up to a
    global phase.
    """
    if u_brok is default_broken_unitary():
        return _compensation(u_brok.tobytes())
    u_brok = np.asarray(u_brok, dtype=complex)
    if u_brok.shape != (2, 2) or not qcore.is_unitary(u_brok, atol=1e-10):
        raise InvalidArgument("broken-shifter transform must be a 2x2 unitary")
    return _compensation(u_brok.tobytes())


@functools.lru_cache(maxsize=256)
def _compensation(key):
    u_brok = np.frombuffer(key, dtype=complex).reshape(2, 2)
    z1, y, z2, _ = qcore.zyz_decompose(u_brok.conj().T)
    return z1, y, z2


def _gate_angles(gate):
    """su2 angles and global phase of a gate.

    ``gate`` is a 2x2 unitary, an angle triple, or ``(z1, y, z2, phase)``
    meaning ``exp(1j*phase) * su2(z1, y, z2)``.
    """
    g = np.asarray(gate)
    if g.shape == (3,):
        return tuple(float(t) for t in g), 0.0
    if g.shape == (4,):
        return tuple(float(t) for t in g[:3]), float(g[3])
    z1, y, z2, phase = qcore.zyz_decompose(g)
    return (z1, y, z2), phase


IDENTITY_ANGLES = (0.0, 0.0, 0.0)


def configure(source_angle=0.0, v=IDENTITY_ANGLES, u=IDENTITY_ANGLES, signal=(0.0, 0.0),
              idler=IDENTITY_ANGLES, broken_unitary=None, c_max=(DEFAULT_C_MAX, DEFAULT_C_MAX)):
    """Build a :class:`ChipConfiguration` from logical gates.

    The resulting state is ``(I x idler)(S x I) diag(v, u) (Ry(source_angle) x I) CNOT``
    applied to ``|00>``, i.e. the source emits
    ``cos(a/2)|00> + sin(a/2)|11>``. ``S`` is the compensated signal gate
    ``Ry(signal[1]) Rz(signal[0])``, realised up to an extra ``Rz`` on the left
    that no Z-basis measurement can see. ``v``, ``u`` and ``idler`` may be 2x2
    unitaries, su2 angle triples ``(rz_in, ry, rz_out)`` or triples extended by
    a global phase.
    """
    u_brok = default_broken_unitary() if broken_unitary is None else np.asarray(broken_unitary)
    half = source_angle / 2
    phi1, phi2 = amzi_phases_for_angle(half, *c_max)
    c, s = np.cos(half), np.sin(half)

    v_angles, v_phase = _gate_angles(v)
    u_angles, u_phase = _gate_angles(u)
    i_angles, _ = _gate_angles(idler)
    # relative phase between the two source branches restores signs and the
    # global phases that su2 triples cannot carry
    pump = (np.pi if c * s < 0 else 0.0) + u_phase - v_phase

    t8_0, t9_0, t10_0 = compensate_broken_shifter(u_brok)
    rz_sig, ry_sig = signal
    phases = [0.0] * N_SHIFTERS
    phases[0:3] = v_angles
    phases[3:6] = u_angles
    phases[6] = float(qcore.wrap_angle(pump))
    phases[7] = float(rz_sig)
    phases[8] = float(t9_0 + ry_sig)
    phases[9] = float(t10_0)
    phases[10] = 0.0
    phases[11:14] = i_angles
    return ChipConfiguration((phi1, phi2), tuple(phases), tuple(c_max), u_brok)


def logical_state(source_angle=0.0, v=qcore.I2, u=qcore.I2, signal=(0.0, 0.0), idler=qcore.I2):
    """Ideal circuit that :func:`configure` realises, without the chip model."""
    def as_gate(g):
        g = np.asarray(g)
        return qcore.su2(*g) if g.shape == (3,) else g.astype(complex)

    half = source_angle / 2
    psi = np.array([np.cos(half), 0, 0, np.sin(half)], dtype=complex)
    psi = qcore.controlled_pair(psi, as_gate(v), as_gate(u))
    psi = qcore.apply_single(psi, qcore.ry(signal[1]) @ qcore.rz(signal[0]), 0)
    return qcore.apply_single(psi, as_gate(idler), 1)


def angles_for_probabilities(p):
    """Constructive inversion: (source, V ry, U ry) angles reaching ``p``.

    The source angle splits ``p0+p1`` from ``p2+p3``; ``V`` (control |0>)
    sets ``p0:p1`` and ``U`` (control |1>) sets ``p2:p3``. ``U`` acts on the
    idler arriving in |1>, so it is ``Ry(t) X``.
    """
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    p = p / p.sum()
    t_src = 2 * np.arctan2(np.sqrt(p[2] + p[3]), np.sqrt(p[0] + p[1]))
    t_v = 2 * np.arctan2(np.sqrt(p[1]), np.sqrt(p[0]))
    t_u = 2 * np.arctan2(np.sqrt(p[3]), np.sqrt(p[2]))
    return float(t_src), float(t_v), float(t_u)


def configuration_for_probabilities(p, broken_unitary=None):
    t_src, t_v, t_u = angles_for_probabilities(p)
    return configure(t_src, v=qcore.ry(t_v), u=qcore.ry(t_u) @ qcore.X,
                     broken_unitary=broken_unitary)
