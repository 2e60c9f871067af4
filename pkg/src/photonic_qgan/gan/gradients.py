"""Gradient estimators and the KL divergence used as a convergence metric."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidArgument

SHIFT = np.pi / 2
KLD_FLOOR = 1e-9


def parameter_shift_grad(loss_fn, theta, index):
    """``[f(theta_i + pi/2) - f(theta_i - pi/2)] / 2``.

    Exact when ``loss_fn`` is a first-degree trigonometric polynomial in
    ``theta[index]``, which holds for expectation values of circuits built from
    Ry and Rz rotations.
    """
    theta = np.asarray(theta, dtype=float)
    plus, minus = theta.copy(), theta.copy()
    plus[index] += SHIFT
    minus[index] -= SHIFT
    return (loss_fn(plus) - loss_fn(minus)) / 2


def parameter_shift_jacobian(fn, theta):
    """Jacobian of a vector-valued ``fn`` (e.g. Born probabilities), one column per angle."""
    theta = np.asarray(theta, dtype=float)
    cols = [parameter_shift_grad(fn, theta, i) for i in range(theta.size)]
    return np.column_stack([np.atleast_1d(c) for c in cols])


def parameter_shift_gradient(loss_fn, theta):
    theta = np.asarray(theta, dtype=float)
    return np.array([parameter_shift_grad(loss_fn, theta, i) for i in range(theta.size)])


def finite_difference_grad(loss_fn, params, epsilon=0.02):
    """Central differences ``[L(p + eps e_i) - L(p - eps e_i)] / (2 eps)`` for every ``i``."""
    if not epsilon > 0:
        raise InvalidArgument("finite-difference epsilon must be positive")
    params = np.asarray(params, dtype=float)
    grads = np.empty_like(params)
    for i in range(params.size):
        step = np.zeros_like(params)
        step.flat[i] = epsilon
        grads.flat[i] = (loss_fn(params + step) - loss_fn(params - step)) / (2 * epsilon)
    return grads


def smooth(q, floor=KLD_FLOOR):
    q = np.clip(np.asarray(q, dtype=float), floor, None)
    return q / q.sum()


def kld(p, q):
    """``sum p_i ln(p_i / q_i)`` with ``0 ln 0 = 0`` and ``q`` floored at 1e-9."""
    p = np.asarray(p, dtype=float)
    q = smooth(q)
    mask = p > 0
    return float(max(np.sum(p[mask] * np.log(p[mask] / q[mask])), 0.0))
