"""Hybrid quantum-classical WGAN-GP that loads a four-point distribution.

The generator is a three-angle circuit on the chip: ``Ry(t1)`` on the control
qubit, then ``Ry(t2)`` on the target if the control is |0> and ``Ry(t3)`` if it
is |1>. Its Born probabilities are the generated data. The critic is a
4-5-3-1 dense network fed the probability vector directly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import chip, qcore
from ..errors import InvalidArgument, TrainingAborted
from ..nn import DenseNetwork, RMSProp, gradient_penalty
from .gradients import kld, parameter_shift_jacobian
from .history import TrainingHistory

CRITIC_LAYERS = (4, 5, 3, 1)


@dataclass
class HqcGanConfig:
    lr_g: float = 0.08
    lr_c: float = 0.1
    lam: float = 0.5
    epochs: int = 500
    c_steps: int = 3
    rounds: int = 5
    rmsprop_beta: float = 0.9
    init_std: float = 0.2
    critic_layers: tuple = CRITIC_LAYERS
    shots: int | None = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("gradient penalty coefficient must be non-negative")
        if self.epochs < 0 or self.c_steps < 1 or self.rounds < 1:
            raise ValueError("epochs must be >= 0, c_steps and rounds >= 1")
        self.critic_layers = tuple(int(n) for n in self.critic_layers)
        if self.critic_layers[0] != 4 or self.critic_layers[-1] != 1:
            raise ValueError("critic must map 4 inputs to 1 output")

    def to_dict(self):
        d = asdict(self)
        d["critic_layers"] = list(self.critic_layers)
        return d


def _u_branch(theta):
    # The U arm receives the idler in |1>; Ry(theta) X sends it to Ry(theta)|0>.
    # As su2 angles plus phase: Ry(t) X = Ry(t + pi) Z = i su2(pi, t + pi, 0).
    return (np.pi, theta + np.pi, 0.0, np.pi / 2)


def generator_configuration(theta_g, broken_unitary=None):
    t1, t2, t3 = (float(t) for t in theta_g)
    return chip.configure(t1, v=(0.0, t2, 0.0), u=_u_branch(t3), broken_unitary=broken_unitary)


def distribution_generator(theta_g, broken_unitary=None):
    """Born probabilities ``[p00, p01, p10, p11]`` of the three-angle circuit."""
    theta_g = np.asarray(theta_g, dtype=float)
    if theta_g.shape != (3,):
        raise InvalidArgument("the distribution generator takes exactly three angles")
    psi = chip.prepare_state(generator_configuration(theta_g, broken_unitary))
    return qcore.born_probabilities(psi)


def generator_angles_for(p):
    """Closed-form angles reproducing the distribution ``p``."""
    return np.array(chip.angles_for_probabilities(p))


def sampled(p, shots, rng):
    if shots is None:
        return p
    return qcore.sample_counts(p, shots, rng) / shots


def critic_step(critic, opt, x_real, x_fake, lam, zeta):
    """One RMSProp descent step on ``D(fake) - D(real) + lam * GP``; returns the loss."""
    d_fake = critic(x_fake)
    d_real = critic(x_real)
    grad = critic.backward(x_fake)[0] - critic.backward(x_real)[0]
    penalty = 0.0
    if lam:
        penalty, gp_grad = gradient_penalty(critic, x_real, x_fake, zeta)
        grad = grad + lam * gp_grad
    critic.set_params(opt.step(critic.get_params(), grad))
    return d_fake - d_real + lam * penalty


def generator_gradient(critic, theta_g, generator, batch_weights=None):
    """Gradient of ``-D(G(theta))`` by chain rule: critic input gradient times
    the parameter-shift Jacobian of the generated probabilities."""
    p = generator(theta_g)
    jac = parameter_shift_jacobian(generator, theta_g)
    return -(critic.input_gradient(p) @ jac)


def train_distribution(config, target, seed=0, init=None, critic=None, broken_unitary=None):
    """WGAN-GP loop: ``c_steps`` critic updates, then one generator update per epoch.

    The critic minimises ``D(G) - D(x) + lam * (||grad D(x_hat)|| - 1)**2`` with
    ``x_hat = x + zeta (G - x)``, ``zeta ~ U(0, 1)``; the generator minimises
    ``-D(G)``. Both use RMSProp. The metric is ``KL(target || generated)``.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (4,) or np.any(target < 0) or abs(target.sum() - 1) > 1e-9:
        raise InvalidArgument("target must be a 4-point probability vector")
    rng = qcore.make_rng(seed)
    theta = rng.normal(0.0, config.init_std, 3) if init is None else np.array(init, dtype=float)
    if critic is None:
        critic = DenseNetwork(config.critic_layers, seed=int(rng.integers(2**31)))
    opt_c = RMSProp(config.lr_c, config.rmsprop_beta)
    opt_g = RMSProp(config.lr_g, config.rmsprop_beta)
    hist = TrainingHistory("distribution", "kld", seed, info={"config": config.to_dict()})

    def generate(t):
        return distribution_generator(t, broken_unitary)

    def record(epoch, loss_g, loss_c):
        rec = hist.append(epoch, loss_g, loss_c, kld(target, generate(theta)), theta_g=theta)
        if not rec.is_finite():
            raise TrainingAborted(f"non-finite loss at epoch {epoch}", hist)

    p = generate(theta)
    zeta = rng.uniform()
    loss_c0 = critic(p) - critic(target) + config.lam * gradient_penalty(critic, target, p, zeta)[0]
    record(0, -critic(p), loss_c0)
    for epoch in range(1, config.epochs + 1):
        p_fake = sampled(generate(theta), config.shots, rng)
        for _ in range(config.c_steps):
            loss_c = critic_step(critic, opt_c, target, p_fake, config.lam, rng.uniform())
        grad = generator_gradient(critic, theta, generate)
        loss_g = -critic(generate(theta))
        theta = opt_g.step(theta, grad)
        if not np.all(np.isfinite(theta)) or not np.all(np.isfinite(critic.get_params())):
            hist.append(epoch, math.nan, math.nan, math.nan)
            raise TrainingAborted(f"non-finite parameters at epoch {epoch}", hist)
        record(epoch, loss_g, loss_c)

    hist.info.update(final_kld=float(hist.metric[-1]), final_distribution=generate(theta).tolist(),
                     critic=critic.to_dict())
    return hist
