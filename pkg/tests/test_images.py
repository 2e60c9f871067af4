import numpy as np
import pytest

from photonic_qgan.errors import InvalidArgument
from photonic_qgan.gan import images
from photonic_qgan.gan.distribution import distribution_generator, generator_angles_for
from photonic_qgan.gan.gradients import finite_difference_grad, parameter_shift_gradient
from photonic_qgan.nn import DenseNetwork
from photonic_qgan import qcore


def identity_net():
    return DenseNetwork.identity(2, output_activation=True)


def test_hybrid_examples():
    for z in ([0.1, 0.9], [0.5, 0.5]):
        assert np.allclose(images.hybrid_generator(images.zero_network(), np.zeros(3), z), [1, 0, 0, 0])
    p = images.hybrid_generator(identity_net(), np.zeros(3), [np.pi / 2, 0])
    assert np.allclose(p, [0.5, 0, 0.5, 0], atol=1e-12)


def test_encoding_is_additive_on_both_branches(rng):
    net = identity_net()
    theta = rng.normal(size=3)
    z = rng.uniform(0, 1, 2)
    expected = distribution_generator(theta + [z[0], z[1], z[1]])
    assert np.allclose(images.hybrid_generator(net, theta, z), expected)


def test_hybrid_deterministic(rng):
    net = images.generator_network(3)
    theta, z = rng.normal(size=3), rng.uniform(size=2)
    assert np.array_equal(images.hybrid_generator(net, theta, z), images.hybrid_generator(net, theta, z))


def _loss_factory(seed):
    rng = qcore.make_rng(seed)
    critic = DenseNetwork([4, 5, 3, 1], seed=seed)
    net = images.generator_network(seed + 1)
    theta = rng.normal(size=3)
    zs = rng.uniform(0, 1, (5, 2))
    # redraw noise until every pre-activation sits away from the Leaky ReLU kink
    while np.abs(zs @ net.weights[0].T + net.biases[0]).min() < 0.05:
        zs = rng.uniform(0, 1, (5, 2))

    def nn_loss(params):
        trial = net.copy()
        trial.set_params(params)
        return -np.mean([critic(images.hybrid_generator(trial, theta, z)) for z in zs])

    def q_loss(t):
        return -np.mean([critic(images.hybrid_generator(net, t, z)) for z in zs])

    return net, theta, zs, nn_loss, q_loss


@pytest.mark.parametrize("seed", range(6))
def test_fd_step_size_consistency(seed):
    net, _, zs, nn_loss, _ = _loss_factory(seed)
    coarse = finite_difference_grad(nn_loss, net.get_params(), 0.02)
    fine = finite_difference_grad(nn_loss, net.get_params(), 1e-4)
    assert np.abs(coarse - fine).max() <= 0.05 * np.abs(fine).max()


@pytest.mark.parametrize("seed", range(3))
def test_quantum_gradient_shift_vs_fd(seed):
    # the critic is nonlinear, so compare the chain-rule gradient used by the trainer
    net, theta, zs, _, q_loss = _loss_factory(seed)
    critic = DenseNetwork([4, 5, 3, 1], seed=seed)
    from photonic_qgan.gan.gradients import parameter_shift_jacobian
    grad = np.zeros(3)
    for z in zs:
        angles = images.hybrid_angles(net, theta, z)
        grad -= critic.input_gradient(distribution_generator(angles)) @ parameter_shift_jacobian(
            distribution_generator, angles)
    grad /= len(zs)
    h = 1e-6
    fd = np.array([(q_loss(theta + h * e) - q_loss(theta - h * e)) / (2 * h) for e in np.eye(3)])
    assert np.allclose(grad, fd, atol=1e-6)
    # each Born probability is first-degree in every angle, so shifts are exact
    p_fn = lambda t: distribution_generator(t)[2]  # noqa: E731
    ps = parameter_shift_gradient(p_fn, theta)
    fd = np.array([(p_fn(theta + h * e) - p_fn(theta - h * e)) / (2 * h) for e in np.eye(3)])
    assert np.abs(ps - fd).max() < 1e-6


def test_converged_start_on_repeated_vector():
    target = np.array([0.1, 0.2, 0.3, 0.4])
    theta = generator_angles_for(target)
    cfg = images.ImageGanConfig(epochs=0)
    h = images.train_images(cfg, [target] * 20, seed=0, init=(images.zero_network(), theta))
    assert h.metric[0] < 1e-6


def test_short_run_bank_and_determinism():
    data = qcore.make_rng(1).dirichlet(np.ones(4) * 5, 30)
    cfg = images.ImageGanConfig(epochs=3, eval_samples=20)
    a = images.train_images(cfg, data, seed=5)
    b = images.train_images(cfg, data, seed=5)
    assert a.csv_text() == b.csv_text()
    bank = np.array(a.info["samples"])
    assert bank.shape == (20, 4)
    assert np.all(bank >= 0) and np.allclose(bank.sum(axis=1), 1, atol=1e-12)
    assert len(a) == 4


@pytest.mark.parametrize("bad", [[], [[0.5, 0.5, 0.5, 0.5]], [[0.5, 0.5]], [[1.2, -0.2, 0, 0]]])
def test_invalid_dataset(bad):
    with pytest.raises(InvalidArgument):
        images.train_images(images.ImageGanConfig(epochs=1), bad, seed=0)


def test_config_validation():
    with pytest.raises(ValueError):
        images.ImageGanConfig(batch_size=0)
    with pytest.raises(ValueError):
        images.ImageGanConfig(fd_epsilon=0)
