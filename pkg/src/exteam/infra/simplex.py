"""Probability-simplex helpers: projection, grids, validation."""

import itertools
import math
from fractions import Fraction

import numpy as np

from exteam.exceptions import ConfigError


def project_simplex(c: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum(x) = 1}.

    min ||x - c||_2^2 s.t. dot(1, x) = 1 and x >= 0 (sort-based, non-iterative).
    """
    c = np.asarray(c, dtype=float)
    n = len(c)
    a = -np.sort(-c)
    lambdas = (np.cumsum(a) - 1) / np.arange(1, n + 1)
    for k in range(n - 1, -1, -1):
        if a[k] > lambdas[k]:
            return np.maximum(c - lambdas[k], 0)
    # unreachable for finite input: k=0 always satisfies a[0] > a[0] - 1
    return np.full(n, 1.0 / n)


def project_rows(c: np.ndarray) -> np.ndarray:
    """Project every row along the last axis onto the simplex."""
    c = np.asarray(c, dtype=float)
    flat = c.reshape(-1, c.shape[-1])
    out = np.empty_like(flat)
    for i in range(flat.shape[0]):
        out[i] = project_simplex(flat[i])
    return out.reshape(c.shape)


def simplex_grid(dim: int, pitch: float) -> list[tuple[float, ...]]:
    """All points of the dim-simplex whose coordinates are multiples of pitch.

    pitch must be 1/k for an integer k. The last coordinate absorbs the
    remainder; points come in lexicographic order of the free coordinates.
    """
    k = steps_for_pitch(pitch)
    points = []
    for combo in itertools.product(range(k + 1), repeat=dim - 1):
        s = sum(combo)
        if s <= k:
            points.append(tuple(c / k for c in combo) + ((k - s) / k,))
    return points


def steps_for_pitch(pitch: float) -> int:
    """pitch=1/64 → 64. Rejects pitches that are not reciprocals of integers."""
    frac = Fraction(pitch).limit_denominator(10**6)
    if pitch <= 0 or pitch > 1 or frac.numerator != 1:
        raise ConfigError(f"pitch must be 1/k for a positive integer k, got {pitch}")
    return frac.denominator


def is_probability_vector(p: np.ndarray, tol: float = 1e-12) -> bool:
    p = np.asarray(p, dtype=float)
    return bool(np.all(np.isfinite(p)) and np.all(p >= -tol) and abs(p.sum() - 1.0) <= tol)


def total_variation(p, q) -> float:
    """½ Σ|p − q|. dict는 합집합 support (없는 키 = 0), 배열은 같은 shape."""
    if isinstance(p, dict) and isinstance(q, dict):
        keys = p.keys() | q.keys()
        return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    return 0.5 * math.fsum(np.abs(p - q).ravel())
