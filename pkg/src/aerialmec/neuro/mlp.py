"""One-hidden-layer perceptron with hand-written backpropagation."""

from __future__ import annotations

import numpy as np


def orthogonal(rng: np.random.Generator, fan_in: int, fan_out: int, gain: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((max(fan_in, fan_out), min(fan_in, fan_out)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    w = q if fan_in >= fan_out else q.T
    return np.ascontiguousarray(gain * w[:fan_in, :fan_out])


class Mlp:
    """``in -> hidden (tanh) -> out`` with a linear output layer.

    Parameters live in ``self.params`` (a name -> array dict) so optimisers,
    checkpoints and gradient checks treat every network the same way.
    """

    def __init__(self, sizes: tuple[int, int, int], rng: np.random.Generator | None = None,
                 out_gain: float = 1.0, prefix: str = ""):
        n_in, n_hidden, n_out = sizes
        self.sizes = sizes
        self.prefix = prefix
        rng = rng if rng is not None else np.random.default_rng(0)
        p = prefix
        self.params = {
            f"{p}W1": orthogonal(rng, n_in, n_hidden, gain=np.sqrt(2.0)),
            f"{p}b1": np.zeros(n_hidden),
            f"{p}W2": orthogonal(rng, n_hidden, n_out, gain=out_gain),
            f"{p}b2": np.zeros(n_out),
        }

    def forward(self, x: np.ndarray):
        p = self.prefix
        h = np.tanh(x @ self.params[f"{p}W1"] + self.params[f"{p}b1"])
        y = h @ self.params[f"{p}W2"] + self.params[f"{p}b2"]
        return y, (x, h)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, dy: np.ndarray):
        """Return ``(dx, grads)`` for upstream gradient ``dy`` (same shape as y)."""
        p = self.prefix
        x, h = cache
        x2 = x.reshape(-1, x.shape[-1])
        h2 = h.reshape(-1, h.shape[-1])
        dy2 = dy.reshape(-1, dy.shape[-1])
        dh = (dy2 @ self.params[f"{p}W2"].T) * (1.0 - h2 ** 2)
        grads = {
            f"{p}W2": h2.T @ dy2,
            f"{p}b2": dy2.sum(axis=0),
            f"{p}W1": x2.T @ dh,
            f"{p}b1": dh.sum(axis=0),
        }
        dx = (dh @ self.params[f"{p}W1"].T).reshape(x.shape)
        return dx, grads
