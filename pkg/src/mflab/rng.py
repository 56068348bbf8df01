"""Counter-based random fields for reproducible parallel simulation.

Every random draw in the simulation engine is a pure function of
``(seed, stream, step, index)``: we key a Philox-4x64 bit generator with
``(seed, stream)`` and place each time step in its own 2**128-wide counter
window, so the i-th variate of a step sits at a fixed counter position.
Evaluation order, vectorization strategy, and worker count therefore
cannot change the noise — which is also what makes the pathwise coupling
of two systems driven by "the same Brownian motion" exact in code: both
systems read the identical increment field.

Gaussians are produced by inverse-CDF transform of one 64-bit word per
variate (rather than a rejection sampler, whose consumption per variate
would vary and break the fixed counter layout).
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

# Stream ids keep independent purposes on disjoint Philox keys.
STREAM_SIM_NOISE = 1
STREAM_INIT_PHASE = 2
STREAM_INIT_DISORDER = 3
STREAM_LINEAR_SDE = 4
STREAM_GRAPH = 5

_U64 = np.uint64
_COUNTER_STRIDE = 1 << 128  # one window per step; windows never overlap

_MAX_SEED = 1 << 64


def _raw_words(seed: int, stream: int, step: int, n: int) -> np.ndarray:
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    if step < 0:
        raise ValueError("step index must be nonnegative")
    key = np.array([seed, stream], dtype=_U64)
    bg = Philox(key=key, counter=step * _COUNTER_STRIDE)
    return bg.random_raw(n)


def uniform_field(seed: int, stream: int, step: int, n: int) -> np.ndarray:
    """n uniforms in [0, 1); element i depends only on (seed, stream, step, i)."""
    raw = _raw_words(seed, stream, step, n)
    return (raw >> _U64(11)).astype(np.float64) * 2.0**-53


def normal_field(seed: int, stream: int, step: int, n: int) -> np.ndarray:
    """n standard normals; element i depends only on (seed, stream, step, i)."""
    raw = _raw_words(seed, stream, step, n)
    # offset by half an ulp so the uniform is strictly inside (0, 1)
    u = ((raw >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def categorical_field(
    seed: int, stream: int, step: int, n: int, weights: np.ndarray
) -> np.ndarray:
    """n iid category indices with the given probability weights."""
    edges = np.cumsum(np.asarray(weights, dtype=np.float64))
    edges[-1] = 1.0  # absorb rounding of the weight sum
    u = uniform_field(seed, stream, step, n)
    return np.searchsorted(edges, u, side="right").astype(np.int64)
