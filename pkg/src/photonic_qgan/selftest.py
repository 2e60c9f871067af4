"""Quick invariant checks run by ``photonic-qgan selftest``.

Each check returns ``(ok, detail)``. The suite takes a few seconds and covers
the chip model, the gradient estimators, the networks and the data pipeline;
the full property suite lives in the test directory.
"""

from __future__ import annotations

import numpy as np

from . import chip, nn, qcore, tomography
from .data import pca, targets
from .gan import distribution, gradients, pqgan

CHECKS = []


def check(fn):
    CHECKS.append(fn)
    return fn


@check
def coincidence_law():
    phi = np.linspace(-2 * np.pi, 2 * np.pi, 2001)
    law = np.sin(phi / 2) ** 4
    err = max(abs(chip.derive_coincidence_from_state(p) - v) for p, v in zip(phi, law))
    return err < 1e-12, f"max |C(phi) - sin^4(phi/2)| = {err:.2e}"


@check
def arbitrary_distributions():
    rng = qcore.make_rng(1)
    err = 0.0
    for _ in range(200):
        p = rng.dirichlet(np.ones(4))
        psi = chip.prepare_state(chip.configuration_for_probabilities(p))
        err = max(err, np.abs(qcore.born_probabilities(psi) - p).max())
    return err < 1e-9, f"max probability error over 200 targets = {err:.2e}"


@check
def broken_shifter_compensation():
    err = 0.0
    for seed in range(100):
        u = qcore.haar_unitary(seed)
        t8, t9, t10 = chip.compensate_broken_shifter(u)
        total = u @ qcore.su2(t8, t9, t10)
        err = max(err, abs(abs(np.trace(total)) - 2))
    return err < 1e-9, f"max deviation of U_brok * compensation from identity = {err:.2e}"


@check
def parameter_shift_matches_fd():
    rng = qcore.make_rng(2)
    theta = rng.normal(0, 1, 3)
    fn = distribution.distribution_generator
    ps = gradients.parameter_shift_jacobian(fn, theta)
    h = 1e-5
    fd = np.column_stack([(fn(theta + h * e) - fn(theta - h * e)) / (2 * h) for e in np.eye(3)])
    err = np.abs(ps - fd).max()
    return err < 1e-6, f"max |parameter shift - FD| = {err:.2e}"


@check
def pqgan_loss_vanishes_at_target():
    theta_g, theta_d = pqgan.initial_parameters(3, 1.0)
    rho = pqgan.pqgan_generator(theta_g)
    val = pqgan.pqgan_loss(theta_g, theta_d, rho)
    return abs(val) < 1e-12, f"loss at rho = sigma: {val:.2e}"


@check
def backprop_matches_fd():
    net = nn.DenseNetwork(distribution.CRITIC_LAYERS, seed=4)
    x = qcore.make_rng(5).dirichlet(np.ones(4))
    grad = net.backward(x)[0]
    p0 = net.get_params()

    def f(p):
        net.set_params(p)
        return net(x)

    fd = gradients.finite_difference_grad(f, p0, 1e-6)
    net.set_params(p0)
    err = np.abs(grad - fd).max() / max(np.abs(fd).max(), 1e-12)
    return err < 1e-6, f"relative backprop error = {err:.2e}"


@check
def tomography_roundtrip():
    rho = qcore.random_density(6)
    fid = tomography.tomography_roundtrip(rho)
    return fid > 1 - 1e-12, f"exact tomography fidelity = {fid:.15f}"


@check
def probability_feature_roundtrip():
    x = qcore.make_rng(7).uniform(0, 1, (1000, 3))
    err = np.abs(pca.prob_to_norm(pca.norm_to_prob(x)) - x).max()
    return err < 1e-10, f"max round-trip error = {err:.2e}"


@check
def targets_are_distributions():
    ok = all(abs(targets.build_target(name, s).sum() - 1) < 1e-12
             for name in targets.PRESET_TARGETS for s in range(5))
    return ok, "preset targets sum to 1"


def run_all():
    results = []
    for fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # report, don't stop the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((fn.__name__, bool(ok), detail))
    return results
