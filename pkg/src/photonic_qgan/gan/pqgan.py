"""Fully quantum GAN that learns a single-qubit state.

The generator is the chip's entangled source plus the controlled pair
``diag(V, U)``; tracing out the signal photon leaves the idler in a state of
any purity. The discriminator is the idler's final su2 gate followed by detection at
both idler outputs. By default D scores ``p(0) - p(1)``, i.e. the measured
operator is ``M(theta_d) = U_D^dagger Z U_D``; with ``observable="projector"``
only the |0> detector is used and ``M = U_D^dagger |0><0| U_D``. Training solves

    min_{theta_g} max_{theta_d}  tr[M rho(theta_g)] - tr[M sigma]

with plain gradient steps and parameter-shift gradients.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import chip, qcore, tomography
from ..errors import TrainingAborted
from .gradients import parameter_shift_gradient
from .history import TrainingHistory

N_GEN = 7  # source angle, V (rz_in, ry, rz_out), U (rz_in, ry, rz_out)
N_DISC = 3
PROJECTOR = np.array([[1, 0], [0, 0]], dtype=complex)
OBSERVABLES = {"pauli": qcore.Z, "projector": PROJECTOR}


@dataclass
class PqGanConfig:
    lr_g: float = 0.02
    lr_d: float = 0.1
    epochs: int = 200
    d_steps_per_g_step: int = 3
    rounds: int = 5
    init_std: float = 0.2
    shots: int | None = None
    observable: str = "pauli"

    def __post_init__(self):
        if self.observable not in OBSERVABLES:
            raise ValueError(f"observable must be one of {sorted(OBSERVABLES)}")
        if self.epochs < 0 or self.d_steps_per_g_step < 1 or self.rounds < 1:
            raise ValueError("epochs must be >= 0, steps and rounds >= 1")
        if self.lr_g < 0 or self.lr_d < 0 or self.init_std < 0:
            raise ValueError("learning rates and init_std must be non-negative")

    def to_dict(self):
        return asdict(self)


def generator_configuration(theta_g, theta_d=(0.0, 0.0, 0.0), broken_unitary=None):
    theta_g = np.asarray(theta_g, dtype=float)
    return chip.configure(source_angle=theta_g[0], v=theta_g[1:4], u=theta_g[4:7],
                          idler=np.asarray(theta_d, dtype=float), broken_unitary=broken_unitary)


def pqgan_generator(theta_g, broken_unitary=None):
    """Idler density matrix produced by generator phases ``theta_g``."""
    psi = chip.prepare_state(generator_configuration(theta_g, broken_unitary=broken_unitary))
    return qcore.partial_trace(qcore.density(psi), keep=1)


def generator_angles_for(source_angle=0.0, v=qcore.I2, u=qcore.I2):
    """Generator phase vector for given logical source angle and V/U gates."""
    v_angles = qcore.zyz_decompose(v)[:3] if np.shape(v) == (2, 2) else tuple(v)
    u_angles = qcore.zyz_decompose(u)[:3] if np.shape(u) == (2, 2) else tuple(u)
    return np.array([source_angle, *v_angles, *u_angles], dtype=float)


def discriminator_operator(theta_d, observable="pauli"):
    ud = qcore.su2(*theta_d)
    return ud.conj().T @ OBSERVABLES[observable] @ ud


def _score(p0, observable, shots, rng):
    """D's score from the probability of the idler |0> outcome."""
    if shots is not None:
        p0 = qcore.sample_counts([p0, 1 - p0], shots, rng)[0] / shots if shots else 0.5
    return 2 * p0 - 1 if observable == "pauli" else p0


def real_expectation(theta_d, sigma, observable="pauli", shots=None, rng=None):
    """``tr[M(theta_d) sigma]``: D's circuit applied to the black-box state."""
    ud = qcore.su2(*theta_d)
    p0 = float((ud @ sigma @ ud.conj().T)[0, 0].real)
    return _score(min(max(p0, 0.0), 1.0), observable, shots, rng)


def fake_expectation(theta_g, theta_d, observable="pauli", shots=None, rng=None,
                     broken_unitary=None):
    """``tr[M(theta_d) rho(theta_g)]`` evaluated on the chip model."""
    psi = chip.prepare_state(generator_configuration(theta_g, theta_d, broken_unitary))
    p = qcore.born_probabilities(psi)
    return _score(min(p[0] + p[2], 1.0), observable, shots, rng)


def pqgan_loss(theta_g, theta_d, sigma, observable="pauli", shots=None, rng=None,
               broken_unitary=None):
    return (fake_expectation(theta_g, theta_d, observable, shots, rng, broken_unitary)
            - real_expectation(theta_d, sigma, observable, shots, rng))


def initial_parameters(seed, std=0.2):
    rng = qcore.make_rng(seed)
    return rng.normal(0.0, std, N_GEN), rng.normal(0.0, std, N_DISC)


def train_pqgan(config, sigma_target, seed=0, init=None, broken_unitary=None,
                train_generator=True):
    """Alternate ``d_steps_per_g_step`` ascent steps on D with one descent step on G.

    ``init`` optionally fixes ``(theta_g, theta_d)``; otherwise both are drawn
    from N(0, init_std) with ``seed``. The metric is the fidelity between the
    generated idler state (recovered by tomography) and the target.
    """
    sigma = qcore.check_density(sigma_target, atol=1e-10)
    if init is None:
        theta_g, theta_d = initial_parameters(seed, config.init_std)
    else:
        theta_g, theta_d = (np.array(t, dtype=float) for t in init)
    rng = qcore.make_rng(seed + 1_000_003) if config.shots is not None else None
    hist = TrainingHistory("pqgan", "fidelity", seed, info={"config": config.to_dict()})

    def loss(tg, td):
        return pqgan_loss(tg, td, sigma, config.observable, config.shots, rng, broken_unitary)

    def record(epoch):
        value = pqgan_loss(theta_g, theta_d, sigma, config.observable, None, None, broken_unitary)
        rho = pqgan_generator(theta_g, broken_unitary)
        est = tomography.reconstruct(tomography.measure_all(rho, config.shots, rng))
        fid = qcore.fidelity(est, sigma)
        rec = hist.append(epoch, value, -value, fid, theta_g=theta_g, theta_d=theta_d)
        if not rec.is_finite():
            raise TrainingAborted(f"non-finite loss at epoch {epoch}", hist)

    record(0)
    for epoch in range(1, config.epochs + 1):
        for _ in range(config.d_steps_per_g_step):
            grad_d = parameter_shift_gradient(lambda td: loss(theta_g, td), theta_d)
            theta_d = theta_d + config.lr_d * grad_d
        if train_generator:
            grad_g = parameter_shift_gradient(lambda tg: loss(tg, theta_d), theta_g)
            theta_g = theta_g - config.lr_g * grad_g
        if not (np.all(np.isfinite(theta_g)) and np.all(np.isfinite(theta_d))):
            hist.append(epoch, math.nan, math.nan, math.nan)
            raise TrainingAborted(f"non-finite parameters at epoch {epoch}", hist)
        record(epoch)

    fids = hist.metric
    hist.info.update(final_fidelity=float(fids[-1]), best_fidelity=float(fids.max()),
                     best_epoch=int(fids.argmax()))
    return hist


PURE_TARGET = qcore.density(np.array([1, 1], dtype=complex) / np.sqrt(2))
MIXED_TARGET = np.diag([0.7, 0.3]).astype(complex)
