"""Adaptive-moment optimizer, Glorot initialization, seeded RNG streams."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .errors import ContractViolation


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for ``seed``; extra ints select substreams.

    Distinct stream keys (e.g. per training phase) give independent streams,
    so phases produce identical draws whether run together or separately.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=stream)))


def glorot_init(rows: int, cols: int, seed) -> Tensor:
    """Uniform draw in +/- sqrt(6 / (rows + cols)); same seed, same tensor.

    ``seed`` is an int or an existing Generator (for chained initialization).
    """
    if rows < 1 or cols < 1:
        raise ContractViolation(f"glorot_init needs positive dims, got {rows}x{cols}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(int(seed))
    bound = np.sqrt(6.0 / (rows + cols))
    return Tensor(rng.uniform(-bound, bound, size=(rows, cols)), requires_grad=True)


class Adam:
    """Bias-corrected adaptive-moment updates over a fixed parameter list."""

    def __init__(self, params, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.first_moment = [np.zeros_like(p.data) for p in self.params]
        self.second_moment = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        """Apply one update from the gradients currently on the parameters."""
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1 ** t
        c2 = 1.0 - self.beta2 ** t
        for p, m, v in zip(self.params, self.first_moment, self.second_moment):
            g = p.grad
            if g is None:
                continue
            if g.shape != p.data.shape:
                raise ContractViolation(
                    f"gradient shape {g.shape} does not match parameter {p.data.shape}"
                )
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None


def adam_step(params, grads, state: Adam):
    """Functional form: assign ``grads`` onto ``params`` and advance ``state``."""
    if len(params) != len(grads):
        raise ContractViolation("params and grads must align one-to-one")
    for p, g in zip(params, grads):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.data.shape:
            raise ContractViolation(
                f"gradient shape {g.shape} does not match parameter {p.data.shape}"
            )
        p.grad = g
    state.step()
    state.zero_grad()
    return params, state
