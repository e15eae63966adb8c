"""Multi-head attention over agent feature vectors, excluding self-attention."""

from __future__ import annotations

import numpy as np


class MultiHeadAttention:
    """Each agent queries every *other* agent; heads are concatenated.

    Input ``E`` is (B, I, d_in); output is (B, I, heads * d_head).
    """

    def __init__(self, d_in: int, heads: int, d_head: int, rng: np.random.Generator | None = None,
                 prefix: str = "attn."):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.heads, self.d_head, self.prefix = heads, d_head, prefix
        scale = 1.0 / np.sqrt(d_in)
        self.params = {
            f"{prefix}Wq": rng.standard_normal((heads, d_in, d_head)) * scale,
            f"{prefix}Wk": rng.standard_normal((heads, d_in, d_head)) * scale,
            f"{prefix}Wv": rng.standard_normal((heads, d_in, d_head)) * scale,
        }

    @property
    def d_out(self) -> int:
        return self.heads * self.d_head

    def weights(self, E: np.ndarray) -> np.ndarray:
        """Attention weights shaped (B, heads, I, I); the diagonal is zero."""
        return self.forward(E)[1][4]

    def forward(self, E: np.ndarray):
        p = self.prefix
        B, I, _ = E.shape
        if I < 2:
            raise ValueError("attention needs at least two agents")
        Q, K, V = (self._project(E, self.params[f"{p}W{n}"]) for n in "qkv")
        S = Q @ K.transpose(0, 1, 3, 2) / np.sqrt(self.d_head)
        S = np.where(np.eye(I, dtype=bool), -np.inf, S)
        S = S - S.max(axis=-1, keepdims=True)
        A = np.exp(S)
        A /= A.sum(axis=-1, keepdims=True)
        O = A @ V  # (B, h, I, d_head)
        X = O.transpose(0, 2, 1, 3).reshape(B, I, self.d_out)
        return X, (E, Q, K, V, A)

    def _flat(self, W: np.ndarray) -> np.ndarray:
        # (heads, d_in, d_head) -> (d_in, heads * d_head)
        return W.transpose(1, 0, 2).reshape(W.shape[1], -1)

    def _project(self, E: np.ndarray, W: np.ndarray) -> np.ndarray:
        B, I, _ = E.shape
        return (E @ self._flat(W)).reshape(B, I, self.heads, self.d_head).transpose(0, 2, 1, 3)

    def backward(self, cache, dX: np.ndarray):
        p = self.prefix
        E, Q, K, V, A = cache
        B, I, _ = E.shape
        dO = dX.reshape(B, I, self.heads, self.d_head).transpose(0, 2, 1, 3)
        dA = dO @ V.transpose(0, 1, 3, 2)
        dV = A.transpose(0, 1, 3, 2) @ dO
        dS = A * (dA - np.sum(dA * A, axis=-1, keepdims=True)) / np.sqrt(self.d_head)
        dQ = dS @ K
        dK = dS.transpose(0, 1, 3, 2) @ Q
        E2 = E.reshape(B * I, -1)
        d_in = E2.shape[1]
        grads, dE = {}, np.zeros_like(E2)
        for n, dP in (("q", dQ), ("k", dK), ("v", dV)):
            dP2 = dP.transpose(0, 2, 1, 3).reshape(B * I, self.d_out)
            W = self.params[f"{p}W{n}"]
            grads[f"{p}W{n}"] = (E2.T @ dP2).reshape(d_in, self.heads, self.d_head).transpose(1, 0, 2)
            dE += dP2 @ self._flat(W).T
        return dE.reshape(E.shape), grads
