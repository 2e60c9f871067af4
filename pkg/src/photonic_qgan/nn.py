"""Small fully connected networks with explicit backpropagation.

Used for the WGAN-GP critic (layers 4-5-3-1) and for the classical head of the
hybrid image generator (a single 2x2 layer). Hidden layers use Leaky ReLU; the
last layer is affine unless ``output_activation`` is set. The Leaky ReLU
derivative at exactly zero is taken to be the negative-side slope.
"""

from __future__ import annotations

import json

import numpy as np

from . import qcore
from .errors import InvalidArgument

DEFAULT_SLOPE = 0.01


def leaky_relu(x, slope):
    return np.where(x > 0, x, slope * x)


def leaky_relu_grad(x, slope):
    return np.where(x > 0, 1.0, slope)


class DenseNetwork:
    """Weights ``W[k]`` have shape ``(layer_sizes[k+1], layer_sizes[k])``."""

    def __init__(self, layer_sizes, weights=None, biases=None, slope=DEFAULT_SLOPE,
                 output_activation=False, seed=None):
        self.layer_sizes = [int(n) for n in layer_sizes]
        if len(self.layer_sizes) < 2 or min(self.layer_sizes) < 1:
            raise InvalidArgument(f"bad layer sizes {layer_sizes}")
        self.slope = float(slope)
        self.output_activation = bool(output_activation)
        self.seed = seed
        if weights is None:
            weights, biases = self._init(seed)
        elif biases is None:
            biases = [np.zeros(n) for n in self.layer_sizes[1:]]
        self.weights = [np.array(w, dtype=float) for w in weights]
        self.biases = [np.array(b, dtype=float).reshape(-1) for b in biases]
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            shape = (self.layer_sizes[k + 1], self.layer_sizes[k])
            if w.shape != shape or b.shape != (shape[0],):
                raise InvalidArgument(f"layer {k}: expected weight shape {shape}, got {w.shape}")

    def _init(self, seed):
        # uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases
        rng = qcore.make_rng(seed)
        weights, biases = [], []
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            bound = 1 / np.sqrt(n_in)
            weights.append(rng.uniform(-bound, bound, (n_out, n_in)))
            biases.append(rng.uniform(-bound, bound, n_out))
        return weights, biases

    @classmethod
    def identity(cls, n, **kw):
        return cls([n, n], [np.eye(n)], [np.zeros(n)], **kw)

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def n_params(self):
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def _activated(self, k):
        return k < self.n_layers - 1 or self.output_activation

    def copy(self):
        return DenseNetwork(self.layer_sizes, [w.copy() for w in self.weights],
                            [b.copy() for b in self.biases], self.slope,
                            self.output_activation, self.seed)

    # flat parameter view: W0 (row-major), b0, W1, b1, ...
    def get_params(self):
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])

    def set_params(self, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise InvalidArgument(f"expected {self.n_params} parameters, got {flat.shape}")
        i = 0
        for w, b in zip(self.weights, self.biases):
            w[...] = flat[i:i + w.size].reshape(w.shape)
            i += w.size
            b[...] = flat[i:i + b.size]
            i += b.size

    def _check_input(self, x):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape != (self.layer_sizes[0],):
            raise InvalidArgument(f"input must have length {self.layer_sizes[0]}, got {x.size}")
        return x

    def _forward_trace(self, x):
        pre, act = [], [x]
        h = x
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = w @ h + b
            pre.append(z)
            h = leaky_relu(z, self.slope) if self._activated(k) else z
            act.append(h)
        return pre, act

    def forward(self, x):
        return self._forward_trace(self._check_input(x))[1][-1]

    def __call__(self, x):
        out = self.forward(x)
        return float(out[0]) if out.size == 1 else out

    def _slopes(self, pre):
        return [leaky_relu_grad(z, self.slope) if self._activated(k) else np.ones_like(z)
                for k, z in enumerate(pre)]

    def backward(self, x, grad_output=None):
        """Gradients of ``grad_output . forward(x)`` (default: scalar output).

        Returns ``(flat parameter gradient, input gradient)``.
        """
        x = self._check_input(x)
        pre, act = self._forward_trace(x)
        slopes = self._slopes(pre)
        delta = np.ones(self.layer_sizes[-1]) if grad_output is None else np.asarray(grad_output, float)
        grads = [None] * self.n_layers
        for k in reversed(range(self.n_layers)):
            delta = delta * slopes[k]
            grads[k] = (np.outer(delta, act[k]), delta.copy())
            delta = self.weights[k].T @ delta
        flat = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
        return flat, delta

    def input_gradient(self, x):
        return self.backward(x)[1]

    # -- checkpointing ------------------------------------------------------

    def to_dict(self):
        return {
            "layer_sizes": self.layer_sizes,
            "slope": self.slope,
            "output_activation": self.output_activation,
            "weights": [w.ravel().tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        sizes = d["layer_sizes"]
        weights = [np.reshape(w, (n_out, n_in))
                   for w, n_in, n_out in zip(d["weights"], sizes[:-1], sizes[1:])]
        return cls(sizes, weights, d["biases"], d.get("slope", DEFAULT_SLOPE),
                   d.get("output_activation", False), d.get("seed"))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


class RMSProp:
    """``s <- beta*s + (1-beta)*g**2``; ``p <- p - lr*g/(sqrt(s) + eps)``."""

    def __init__(self, lr, beta=0.9, eps=1e-8):
        if not 0 < beta < 1:
            raise InvalidArgument("RMSProp beta must be in (0, 1)")
        self.lr = lr
        self.beta = beta
        self.eps = eps
        self.mean_square = None

    def step(self, params, grads):
        params = np.asarray(params, dtype=float)
        grads = np.asarray(grads, dtype=float)
        if self.mean_square is None:
            self.mean_square = np.zeros_like(params)
        if grads.shape != params.shape:
            raise InvalidArgument("parameter and gradient shapes differ")
        self.mean_square = self.beta * self.mean_square + (1 - self.beta) * grads**2
        return params - self.lr * grads / (np.sqrt(self.mean_square) + self.eps)


def rmsprop_step(params, grads, state, lr):
    """Functional form of :meth:`RMSProp.step`; ``state.lr`` is overridden by ``lr``."""
    state.lr = lr
    return state.step(params, grads)


def interpolate(x_real, x_fake, zeta):
    x_real = np.asarray(x_real, dtype=float)
    return x_real + zeta * (np.asarray(x_fake, dtype=float) - x_real)


def gradient_penalty(critic, x_real, x_fake, zeta):
    """``(||grad_x D(x_hat)|| - 1)**2`` at the interpolate and its parameter gradient.

    With the Leaky ReLU masks fixed, the input gradient is
    ``g = W1^T D1 W2^T ... D_L w_L`` (``D_k`` diagonal slope masks), which is
    multilinear in the weights and independent of the biases. The parameter
    gradient follows from ``dP/dW_k = outer(A_k, B_k u)`` with ``u = dP/dg``,
    ``A_k`` the backward product above layer ``k`` and ``B_k`` the forward
    Jacobian below it. Bias gradients vanish away from activation kinks.
    """
    x_hat = critic._check_input(interpolate(x_real, x_fake, zeta))
    pre, _ = critic._forward_trace(x_hat)
    slopes = critic._slopes(pre)
    L = critic.n_layers

    # below[k]: Jacobian of the layer-k input w.r.t. x_hat, shape (n_k, n_in)
    below = [np.eye(critic.layer_sizes[0])]
    for k in range(L - 1):
        below.append(slopes[k][:, None] * (critic.weights[k] @ below[k]))
    # above[k]: row vector d out / d z_k (pre-activation of layer k), shape (n_{k+1},)
    above = [None] * L
    a = np.ones(critic.layer_sizes[-1]) * slopes[L - 1]
    above[L - 1] = a
    for k in reversed(range(L - 1)):
        a = (critic.weights[k + 1].T @ a) * slopes[k]
        above[k] = a

    g = critic.weights[0].T @ above[0]
    norm = np.linalg.norm(g)
    penalty = (norm - 1) ** 2
    if norm == 0:
        u = np.zeros_like(g)
    else:
        u = 2 * (norm - 1) * g / norm

    grads = []
    for k in range(L):
        gw = np.outer(above[k], below[k] @ u)
        grads.append(np.concatenate([gw.ravel(), np.zeros(critic.layer_sizes[k + 1])]))
    return float(penalty), np.concatenate(grads)
