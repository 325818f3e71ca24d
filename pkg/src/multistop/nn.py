"""Small fully-connected networks with hand-written backward passes."""

from __future__ import annotations

import numpy as np


def _layer_shapes(sizes):
    shapes = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        shapes.append((fan_in, fan_out))
        shapes.append((fan_out,))
    return shapes


def _views(flat, shapes):
    out, pos = [], 0
    for shape in shapes:
        n = int(np.prod(shape))
        out.append(flat[pos:pos + n].reshape(shape))
        pos += n
    return out


class MLP:
    """ReLU hidden layers, linear output; batch-first ``(B, in) -> (B, out)``.

    All parameters live in the contiguous vector ``data``; ``params`` is the
    list of views ``[W0, b0, W1, b1, ...]`` with ``W`` of shape
    ``(fan_in, fan_out)``. ``grad_data``/``grads`` mirror that layout.
    """

    def __init__(self, sizes, rng=None, zero_output=False):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ValueError("an MLP needs at least positive input and output sizes")
        self._shapes = _layer_shapes(self.sizes)
        n = sum(int(np.prod(s)) for s in self._shapes)
        self.data = np.zeros(n)
        self.params = _views(self.data, self._shapes)
        self.grad_data = np.zeros(n)
        self.grads = _views(self.grad_data, self._shapes)
        if rng is None:
            return
        for fan_in, fan_out, i in zip(self.sizes[:-1], self.sizes[1:], range(0, 2 * self.n_layers, 2)):
            bound = 1.0 / np.sqrt(fan_in)
            self.params[i][...] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
            self.params[i + 1][...] = rng.uniform(-bound, bound, size=fan_out)
        if zero_output:
            self.params[-2][...] = 0.0
            self.params[-1][...] = 0.0

    @property
    def n_layers(self):
        return len(self.sizes) - 1

    @property
    def n_params(self):
        return self.data.size

    def copy(self) -> "MLP":
        out = MLP(self.sizes)
        out.data[...] = self.data
        return out

    def forward(self, x):
        """Return ``(output, cache)``; the cache feeds :meth:`backward`."""
        acts = [x]
        h = x
        last = self.n_layers - 1
        for i in range(self.n_layers):
            z = h @ self.params[2 * i] + self.params[2 * i + 1]
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return h, acts

    def predict(self, x):
        h = x
        last = self.n_layers - 1
        for i in range(self.n_layers):
            h = h @ self.params[2 * i] + self.params[2 * i + 1]
            if i != last:
                np.maximum(h, 0.0, out=h)
        return h

    def backward(self, acts, dout, need_input_grad=False):
        """Gradients of ``sum(dout * output)`` w.r.t. params (and the input).

        Parameter gradients are written into ``grad_data`` and returned as a
        fresh copy of that vector, so later calls do not clobber them.
        """
        delta = dout
        for i in range(self.n_layers - 1, -1, -1):
            np.matmul(acts[i].T, delta, out=self.grads[2 * i])
            delta.sum(axis=0, out=self.grads[2 * i + 1])
            if i > 0 or need_input_grad:
                delta = delta @ self.params[2 * i].T
                if i > 0:
                    delta = delta * (acts[i] > 0.0)
        return self.grad_data.copy(), (delta if need_input_grad else None)

    def unflatten(self, flat) -> list:
        """Split a vector in ``data`` layout into per-layer arrays."""
        return _views(np.asarray(flat, dtype=float), self._shapes)

    def flat(self) -> np.ndarray:
        return self.data.copy()

    def set_flat(self, values):
        values = np.asarray(values, dtype=float)
        if values.shape != self.data.shape:
            raise ValueError(f"expected {self.data.size} values, got {values.size}")
        self.data[...] = values

    @classmethod
    def from_flat(cls, sizes, values) -> "MLP":
        out = cls(sizes)
        out.set_flat(values)
        return out


class Adam:
    """Adam on a single parameter vector, updated in place."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = np.zeros_like(params)
        self.v = np.zeros_like(params)
        self._buf = np.empty_like(params)

    def step(self, grad):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        scale = self.lr * np.sqrt(1.0 - b2**self.t) / (1.0 - b1**self.t)
        self.m *= b1
        self.m += (1.0 - b1) * grad
        self.v *= b2
        np.multiply(grad, grad, out=self._buf)
        self.v += (1.0 - b2) * self._buf
        np.sqrt(self.v, out=self._buf)
        self._buf += self.eps
        np.divide(self.m, self._buf, out=self._buf)
        self._buf *= scale
        self.params -= self._buf
