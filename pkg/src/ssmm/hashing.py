"""Pairwise-independent hashing and seed plumbing.

Everything random in the package draws from :func:`rng_for`, so a single
run seed plus a tuple of integer labels fixes every stream.
"""

from __future__ import annotations

import numpy as np

PRIME = (1 << 31) - 1


def rng_for(seed: int, *labels: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFF, *[int(x) for x in labels]])


def draw_params(rng: np.random.Generator, count: int, p: int = PRIME) -> np.ndarray:
    """``count`` pairs ``(a, b)`` with ``a`` in [1, p) and ``b`` in [0, p)."""
    a = rng.integers(1, p, size=count, dtype=np.int64)
    b = rng.integers(0, p, size=count, dtype=np.int64)
    return np.stack([a, b], axis=1)


def hash_values(params: np.ndarray, x, p: int = PRIME) -> np.ndarray:
    """``(a*x + b) mod p`` for every parameter row and every key.

    Returns shape ``(len(params), len(x))``.  Keys must be below 2^31 so the
    product stays inside int64.
    """
    x = np.asarray(x, dtype=np.int64)
    a = params[:, 0:1]
    b = params[:, 1:2]
    return (a * x[None, :] + b) % p


def hash_mod(params: np.ndarray, x, r: int, p: int = PRIME) -> np.ndarray:
    return hash_values(params, x, p) % r


def draw_poly(rng: np.random.Generator, count: int, k: int = 4, p: int = PRIME) -> np.ndarray:
    """Coefficients of ``count`` random polynomials of degree ``k - 1`` over Z_p."""
    return rng.integers(0, p, size=(count, k), dtype=np.int64)


def poly_hash(coeffs: np.ndarray, x, p: int = PRIME) -> np.ndarray:
    """k-wise independent hash, Horner evaluation; shape ``(len(coeffs), len(x))``.

    The linear family is pairwise independent but on runs of consecutive
    keys it spreads selections too evenly, which biases threshold tests on
    "was anything selected"; degree three removes that.
    """
    x = np.asarray(x, dtype=np.int64)[None, :]
    h = np.broadcast_to(coeffs[:, :1], (len(coeffs), x.shape[1])).copy()
    for c in range(1, coeffs.shape[1]):
        h = (h * x + coeffs[:, c:c + 1]) % p
    return h
