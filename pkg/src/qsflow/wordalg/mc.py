"""Monte Carlo check of the randomised torus action.

Each path draws Brownian increments for ``w^1, w^2`` on ``[0, t]`` and
records ``exp(i (m |c1| w^1_t + n |c2| w^2_t))``. Paths are generated in
fixed-size chunks, each with its own ``SeedSequence`` child, so the result
depends on ``(seed, paths)`` only and not on how chunks are spread over
workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

CHUNK = 8192


@dataclass(frozen=True)
class MCResult:
    estimate: complex
    stderr: float
    reference: complex
    paths: int

    @property
    def z_score(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.estimate == self.reference else float("inf")
        return abs(self.estimate - self.reference) / self.stderr


def _chunk(ss: np.random.SeedSequence, size: int, m, n, a1, a2, t, steps):
    rng = np.random.default_rng(ss)
    if t == 0:
        w = np.zeros((size, 2))
    else:
        inc = rng.normal(scale=np.sqrt(t / steps), size=(size, steps, 2))
        w = inc.sum(axis=1)
    return np.exp(1j * (m * a1 * w[:, 0] + n * a2 * w[:, 1]))


def mc_randomized_action(m: int, n: int, c1: complex, c2: complex, t: float, paths: int,
                         seed: int = 0, steps: int = 8, workers: int | None = None) -> MCResult:
    """Estimate ``E[exp(i (m |c1| w^1_t + n |c2| w^2_t))]``.

    The reference is ``exp(-1/2 (m^2 |c1|^2 + n^2 |c2|^2) t)``. ``stderr`` is the
    standard error of the complex mean (sample variance of real and imaginary
    parts added).
    """
    if paths < 100:
        raise ValueError("need at least 100 paths")
    if t < 0:
        raise ValueError("t must be non-negative")
    a1, a2 = abs(complex(c1)), abs(complex(c2))
    sizes = [CHUNK] * (paths // CHUNK) + ([paths % CHUNK] if paths % CHUNK else [])
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    if workers is None:
        workers = int(os.environ.get("QSFLOW_THREADS", "1"))
    args = [(ss, size, m, n, a1, a2, t, steps) for ss, size in zip(children, sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda a: _chunk(*a), args))
    else:
        parts = [_chunk(*a) for a in args]
    vals = np.concatenate(parts)
    est = complex(vals.mean())
    var = float(np.var(vals.real, ddof=1) + np.var(vals.imag, ddof=1))
    ref = complex(np.exp(-0.5 * (m * m * a1 * a1 + n * n * a2 * a2) * t))
    return MCResult(est, float(np.sqrt(var / paths)), ref, paths)
