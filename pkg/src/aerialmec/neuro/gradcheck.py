"""Central finite-difference verification of hand-written gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class GradCheckReport:
    rel_error: dict[str, float]
    max_abs_error: dict[str, float]
    tol: float

    @property
    def max_rel_error(self) -> float:
        return max(self.rel_error.values()) if self.rel_error else 0.0

    @property
    def ok(self) -> bool:
        return self.max_rel_error < self.tol


def numeric_grad(f: Callable[[], float], x: np.ndarray, h: float = 1e-5,
                 max_entries: int | None = None, rng: np.random.Generator | None = None):
    """Central differences of ``f`` w.r.t. array ``x`` (perturbed in place).

    Step is ``h * max(1, |x_i|)``. With ``max_entries`` a random subset is
    probed; returns ``(indices, values)``.
    """
    flat = x.reshape(-1)
    if not np.shares_memory(flat, x):
        raise ValueError("numeric_grad needs a contiguous array to perturb in place")
    idx = np.arange(flat.size)
    if max_entries is not None and flat.size > max_entries:
        rng = rng if rng is not None else np.random.default_rng(0)
        idx = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
    out = np.empty(idx.size)
    for n, i in enumerate(idx):
        old = flat[i]
        step = h * max(1.0, abs(old))
        flat[i] = old + step
        fp = f()
        flat[i] = old - step
        fm = f()
        flat[i] = old
        out[n] = (fp - fm) / (2.0 * step)
    return idx, out


def grad_check(f: Callable[[], float], params: dict[str, np.ndarray], analytic: dict[str, np.ndarray],
               tol: float = 1e-4, h: float = 1e-5, max_entries: int | None = None,
               seed: int = 0) -> GradCheckReport:
    """Compare ``analytic`` gradients with central differences of ``f``.

    Relative error per parameter tensor is ``|a - n|_2 / max(|a|_2, |n|_2)``
    over the probed entries.
    """
    rng = np.random.default_rng(seed)
    rel, absolute = {}, {}
    for name, x in params.items():
        idx, num = numeric_grad(f, x, h=h, max_entries=max_entries, rng=rng)
        ana = np.asarray(analytic[name], dtype=float).reshape(-1)[idx]
        diff = np.linalg.norm(ana - num)
        denom = max(np.linalg.norm(ana), np.linalg.norm(num), 1e-12)
        rel[name] = float(diff / denom)
        absolute[name] = float(np.max(np.abs(ana - num))) if idx.size else 0.0
    return GradCheckReport(rel, absolute, tol)
