"""Hybrid classical-quantum WGAN-GP for PCA-compressed images.

The generator feeds uniform noise ``z`` in [0, 1]^2 through a 2x2 dense layer
with Leaky ReLU output, encodes the two outputs as extra Ry angles (on the
control qubit and on the target before the controlled pair) and then applies
the three-angle training circuit. Because ``Ry(a) Ry(b) = Ry(a + b)`` the
encoding layer folds into the training angles:

    p(z) = distribution_generator(theta_q + [g0, g1, g1]),  g = NN(z)

Quantum angles are trained with parameter-shift gradients, the NN weights with
central finite differences and the critic with backpropagation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import qcore
from ..errors import InvalidArgument, TrainingAborted
from ..nn import DenseNetwork, RMSProp, gradient_penalty
from .distribution import CRITIC_LAYERS, distribution_generator
from .gradients import finite_difference_grad, kld, parameter_shift_jacobian
from .history import TrainingHistory

NOISE_DIM = 2
ENCODING = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])  # NN output -> angle offsets


@dataclass
class ImageGanConfig:
    lr_nn: float = 0.02
    lr_q: float = 0.08
    lr_c: float = 0.02
    batch_size: int = 5
    epochs: int = 200
    rounds: int = 5
    fd_epsilon: float = 0.02
    c_steps: int = 3
    lam: float = 0.5
    rmsprop_beta: float = 0.9
    init_std: float = 0.2
    eval_samples: int = 100

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0 or self.c_steps < 1 or self.rounds < 1 or self.eval_samples < 1:
            raise ValueError("epochs must be >= 0; c_steps, rounds and eval_samples >= 1")
        if not self.fd_epsilon > 0 or self.lam < 0:
            raise ValueError("fd_epsilon must be positive and lam non-negative")

    def to_dict(self):
        return asdict(self)


def hybrid_angles(net, theta_q, z):
    return np.asarray(theta_q, dtype=float) + ENCODING @ net.forward(z)


def hybrid_generator(net, theta_q, z, broken_unitary=None):
    """Generated probability vector for one noise sample ``z``."""
    return distribution_generator(hybrid_angles(net, theta_q, z), broken_unitary)


def generator_network(seed=None):
    return DenseNetwork([NOISE_DIM, NOISE_DIM], output_activation=True, seed=seed)


def zero_network():
    return DenseNetwork([NOISE_DIM, NOISE_DIM], [np.zeros((2, 2))], [np.zeros(2)],
                        output_activation=True)


def _check_dataset(dataset):
    data = np.asarray(dataset, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] != 4:
        raise InvalidArgument("dataset must be a nonempty list of 4-point probability vectors")
    if np.any(data < -1e-12) or np.any(np.abs(data.sum(axis=1) - 1) > 1e-9):
        raise InvalidArgument("every dataset entry must be a valid probability vector")
    return data


def train_images(config, dataset, seed=0, init=None, broken_unitary=None):
    """WGAN-GP over batches of ``batch_size`` real vectors and noise draws.

    ``init`` may fix ``(net, theta_q)``. The metric is ``KL(mean real || mean
    generated)``, the generated mean taken over a noise bank of
    ``eval_samples`` draws fixed at the start of the run. ``loss_d`` is the
    critic loss averaged over the epoch's critic steps. Returns the history;
    ``history.info["samples"]`` holds the generated vectors for the noise bank.
    """
    data = _check_dataset(dataset)
    target = data.mean(axis=0)
    rng = qcore.make_rng(seed)
    if init is None:
        theta_q = rng.normal(0.0, config.init_std, 3)
        net = generator_network(int(rng.integers(2**31)))
    else:
        net, theta_q = init[0].copy(), np.array(init[1], dtype=float)
    critic = DenseNetwork(CRITIC_LAYERS, seed=int(rng.integers(2**31)))
    bank = rng.uniform(0.0, 1.0, (config.eval_samples, NOISE_DIM))
    opt_c = RMSProp(config.lr_c, config.rmsprop_beta)
    opt_q = RMSProp(config.lr_q, config.rmsprop_beta)
    opt_nn = RMSProp(config.lr_nn, config.rmsprop_beta)
    n = config.batch_size
    hist = TrainingHistory("images", "kld", seed if isinstance(seed, int) else None,
                           info={"config": config.to_dict()})

    def generate(net_, tq, zs):
        return np.array([hybrid_generator(net_, tq, z, broken_unitary) for z in zs])

    def critic_loss(x_real, x_fake, zetas):
        gp = [gradient_penalty(critic, r, f, t)[0] for r, f, t in zip(x_real, x_fake, zetas)]
        return float(np.mean([critic(f) - critic(r) for r, f in zip(x_real, x_fake)])
                     + config.lam * np.mean(gp))

    def record(epoch, loss_g, loss_c):
        gen_mean = generate(net, theta_q, bank).mean(axis=0)
        rec = hist.append(epoch, loss_g, loss_c, kld(target, gen_mean),
                          theta_q=theta_q, theta_nn=net.get_params())
        if not rec.is_finite():
            raise TrainingAborted(f"non-finite loss at epoch {epoch}", hist)

    x0 = data[rng.integers(0, len(data), n)]
    f0 = generate(net, theta_q, rng.uniform(0, 1, (n, NOISE_DIM)))
    record(0, -np.mean([critic(f) for f in f0]), critic_loss(x0, f0, rng.uniform(0, 1, n)))
    for epoch in range(1, config.epochs + 1):
        losses = []
        for _ in range(config.c_steps):
            x_real = data[rng.integers(0, len(data), n)]
            x_fake = generate(net, theta_q, rng.uniform(0, 1, (n, NOISE_DIM)))
            zetas = rng.uniform(0, 1, n)
            grad = np.zeros(critic.n_params)
            for r, f, t in zip(x_real, x_fake, zetas):
                grad += critic.backward(f)[0] - critic.backward(r)[0]
                if config.lam:
                    grad += config.lam * gradient_penalty(critic, r, f, t)[1]
            losses.append(critic_loss(x_real, x_fake, zetas))
            critic.set_params(opt_c.step(critic.get_params(), grad / n))

        zs = rng.uniform(0, 1, (n, NOISE_DIM))
        grad_q = np.zeros(3)
        for z in zs:
            angles = hybrid_angles(net, theta_q, z)
            p = distribution_generator(angles, broken_unitary)
            jac = parameter_shift_jacobian(lambda t: distribution_generator(t, broken_unitary), angles)
            grad_q -= critic.input_gradient(p) @ jac
        grad_q /= n

        def nn_loss(params):
            trial = net.copy()
            trial.set_params(params)
            return -np.mean([critic(p) for p in generate(trial, theta_q, zs)])

        grad_nn = finite_difference_grad(nn_loss, net.get_params(), config.fd_epsilon)
        loss_g = nn_loss(net.get_params())
        theta_q = opt_q.step(theta_q, grad_q)
        net.set_params(opt_nn.step(net.get_params(), grad_nn))
        if not (np.all(np.isfinite(theta_q)) and np.all(np.isfinite(net.get_params()))
                and np.all(np.isfinite(critic.get_params()))):
            hist.append(epoch, math.nan, math.nan, math.nan)
            raise TrainingAborted(f"non-finite parameters at epoch {epoch}", hist)
        record(epoch, loss_g, float(np.mean(losses)))

    samples = generate(net, theta_q, bank)
    hist.info.update(final_kld=float(hist.metric[-1]), target_mean=target.tolist(),
                     generated_mean=samples.mean(axis=0).tolist(), samples=samples.tolist(),
                     generator_nn=net.to_dict(), critic=critic.to_dict())
    return hist
