"""Data-stream construction: step interpolation and Bayesian bootstrap arms.

Bootstrap index draws use explicit uniforms against the Dirichlet CDF, so a
truncated stream is exactly the length-n prefix of the continuation stream
built from the same seed — the property paired arm comparisons rely on.
"""

import math
from dataclasses import dataclass

import numpy as np

ARMS = ("truncated", "continuation", "raw")


@dataclass
class StreamSpec:
    """data: (n, d) observations; arm semantics:
    raw passes data through unchanged, truncated emits n bootstrap draws,
    continuation emits total_steps >= n draws from the same weights."""

    data: np.ndarray
    total_steps: int
    arm: str = "raw"
    seed: int | tuple = 0  # anything numpy's default_rng accepts

    def __post_init__(self):
        self.data = np.atleast_2d(np.asarray(self.data, dtype=float))
        n = self.data.shape[0]
        if n == 0:
            raise ValueError("data is empty")
        if self.arm not in ARMS:
            raise ValueError(f"arm must be one of {ARMS}, got {self.arm!r}")
        if self.arm in ("truncated", "raw") and self.total_steps != n:
            raise ValueError(f"{self.arm} arm requires total_steps == len(data)")
        if self.arm == "continuation" and self.total_steps < n:
            raise ValueError("continuation arm requires total_steps >= len(data)")


def continuation_length(n):
    """Total steps of a continuation arm over n observations."""
    return math.ceil(1.5 * n)


def step_interpolate(data, t):
    """Piecewise-constant interpolation x_t = x_n for n-1 <= t < n
    (1-based observation labels), i.e. data[floor(t)] with 0 <= t < len."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    if not 0 <= t < data.shape[0]:
        raise ValueError(f"t={t!r} outside [0, {data.shape[0]})")
    return data[int(math.floor(t))]


def bayesian_bootstrap_stream(data, total_steps, rng):
    """One Dirichlet(1,...,1) weight draw over the data indices, then
    total_steps i.i.d. index draws from those weights."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n = data.shape[0]
    if n == 0:
        raise ValueError("data is empty")
    pi = rng.dirichlet(np.ones(n))
    u = rng.random(total_steps)
    idx = np.minimum(np.searchsorted(np.cumsum(pi), u, side="right"), n - 1)
    return data[idx]


def make_stream(spec):
    if spec.arm == "raw":
        return spec.data
    rng = np.random.default_rng(spec.seed)
    return bayesian_bootstrap_stream(spec.data, spec.total_steps, rng)
