"""Structured random features for Gaussian RBF kernel approximation.

One `McKernelBlock` holds a sampled structured operator

    zhat = (1 / (sigma * sqrt(n))) * C H G P H B

where B, G, C are diagonal (sign flips, Gaussian draws, chi-scaled norms),
P is a random permutation, and H is the n x n Walsh-Hadamard matrix applied
via the O(n log n) in-place butterfly.  The operator's rows behave like rows
of a Gaussian matrix with covariance I/sigma^2, so paired cos/sin features of
zhat(x) give an estimate of exp(-||x - x'||^2 / (2 sigma^2)).  Stacking
independently sampled blocks grows the feature count and shrinks the
approximation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .rng import CounterRng, derive_seed


def next_power_of_two(d: int) -> int:
    n = 1
    while n < d:
        n *= 2
    return n


def fwht(v: np.ndarray) -> np.ndarray:
    """Apply the unnormalized Walsh-Hadamard matrix in O(n log n).

    H_2 = [[1, 1], [1, -1]] and H_{2n} = H_2 kron H_n; the input length must
    be a power of two.  The input is not modified.
    """
    n = v.shape[0]
    if n < 1 or (n & (n - 1)) != 0:
        raise ShapeError(f"fwht length must be a power of two, got {n}")
    a = np.array(v, dtype=np.float64)
    h = 1
    while h < n:
        a = a.reshape(n // (2 * h), 2, h)
        top = a[:, 0, :] + a[:, 1, :]
        bottom = a[:, 0, :] - a[:, 1, :]
        a[:, 0, :] = top
        a[:, 1, :] = bottom
        a = a.reshape(n)
        h *= 2
    return a


@dataclass
class McKernelBlock:
    """One sampled instance of the structured operator's factors."""

    n: int
    sigma: float
    b_signs: np.ndarray
    perm: np.ndarray
    g_diag: np.ndarray
    c_diag: np.ndarray
    seed: int

    def __post_init__(self):
        if self.n < 1 or (self.n & (self.n - 1)) != 0:
            raise ParameterError(f"n must be a power of two, got {self.n}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        self.b_signs = np.asarray(self.b_signs, dtype=np.float64)
        self.perm = np.asarray(self.perm, dtype=np.int64)
        self.g_diag = np.asarray(self.g_diag, dtype=np.float64)
        self.c_diag = np.asarray(self.c_diag, dtype=np.float64)
        for name, arr in (("b_signs", self.b_signs), ("perm", self.perm),
                          ("g_diag", self.g_diag), ("c_diag", self.c_diag)):
            if arr.shape != (self.n,):
                raise ShapeError(f"{name} must have length n = {self.n}, got {arr.shape}")
        if not np.all(np.abs(self.b_signs) == 1.0):
            raise ParameterError("b_signs entries must be +1 or -1")
        if not np.array_equal(np.sort(self.perm), np.arange(self.n)):
            raise ParameterError("perm must be a permutation of 0..n-1")


def sample_block(seed: int, d: int, sigma: float) -> McKernelBlock:
    """Draw one block for input dimension d (padded to the next power of two).

    Draw order on (seed, stream 0): n sign flips, the permutation, n Gaussian
    scalings, then n*n normals whose row norms give the chi(n)-distributed
    scale factors; the scale factors are divided by the norm of the Gaussian
    scaling vector.
    """
    if d < 1:
        raise ParameterError(f"input dimension must be >= 1, got {d}")
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    n = next_power_of_two(d)
    rng = CounterRng(seed, stream=0)
    b_signs = rng.rademacher(n)
    perm = rng.permutation(n)
    g_diag = rng.normal(n)
    s = np.linalg.norm(rng.normal(n * n).reshape(n, n), axis=1)
    c_diag = s / np.linalg.norm(g_diag)
    return McKernelBlock(n=n, sigma=sigma, b_signs=b_signs, perm=perm,
                         g_diag=g_diag, c_diag=c_diag, seed=seed)


def apply_zhat(block: McKernelBlock, x: np.ndarray) -> np.ndarray:
    """Apply the structured operator to x (zero-padded to length n)."""
    if x.shape[0] > block.n:
        raise ShapeError(
            f"input length {x.shape[0]} exceeds block dimension {block.n}"
        )
    padded = np.zeros(block.n)
    padded[: x.shape[0]] = x
    v = fwht(block.b_signs * padded)
    v = block.g_diag * v[block.perm]
    v = fwht(v)
    return block.c_diag * v / (block.sigma * math.sqrt(block.n))


@dataclass
class FeatureMap:
    """Independently sampled blocks sharing n and sigma; 2*n features per block."""

    blocks: tuple[McKernelBlock, ...]
    input_dim: int

    def __post_init__(self):
        if not self.blocks:
            raise ParameterError("feature map needs at least one block")
        n0, sigma0 = self.blocks[0].n, self.blocks[0].sigma
        if any(b.n != n0 or b.sigma != sigma0 for b in self.blocks):
            raise ParameterError("all blocks must share n and sigma")
        if self.input_dim > n0:
            raise ShapeError(
                f"input dimension {self.input_dim} exceeds block dimension {n0}"
            )

    @property
    def n(self) -> int:
        return self.blocks[0].n

    @property
    def sigma(self) -> float:
        return self.blocks[0].sigma

    @property
    def total_features(self) -> int:
        return 2 * self.n * len(self.blocks)


def sample_feature_map(seed: int, d: int, sigma: float, block_count: int) -> FeatureMap:
    """Draw `block_count` i.i.d. blocks; block i uses the child seed derive_seed(seed, i)."""
    if block_count < 1:
        raise ParameterError(f"block_count must be >= 1, got {block_count}")
    blocks = tuple(
        sample_block(derive_seed(seed, i), d, sigma) for i in range(block_count)
    )
    return FeatureMap(blocks=blocks, input_dim=d)


def feature_map_apply(fm: FeatureMap, x: np.ndarray) -> np.ndarray:
    """Paired cos/sin features, unit self-inner-product by construction."""
    if x.shape[0] != fm.input_dim:
        raise ShapeError(
            f"feature map input must have length {fm.input_dim}, got {x.shape[0]}"
        )
    scale = 1.0 / math.sqrt(fm.n * len(fm.blocks))
    parts = []
    for block in fm.blocks:
        z = apply_zhat(block, x)
        parts.append(np.cos(z))
        parts.append(np.sin(z))
    return scale * np.concatenate(parts)


def kernel_exact(x: np.ndarray, y: np.ndarray, sigma: float) -> float:
    """Gaussian RBF kernel exp(-||x - y||^2 / (2 sigma^2))."""
    if x.shape != y.shape:
        raise ShapeError(f"kernel inputs differ in length ({x.shape[0]} vs {y.shape[0]})")
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / (2.0 * sigma * sigma)))


def rbf_expansion_eval(centers, amplitudes, x: np.ndarray, sigma: float,
                       fm: FeatureMap | None = None) -> float:
    """Weighted sum of kernel evaluations against a set of centers.

    With fm=None the kernel is evaluated exactly; otherwise each term uses the
    feature-space inner product <phi(x), phi(center)>.
    """
    centers = [np.asarray(c, dtype=np.float64) for c in centers]
    amplitudes = np.asarray(amplitudes, dtype=np.float64)
    if len(centers) != amplitudes.shape[0]:
        raise ParameterError(
            f"{len(centers)} centers but {amplitudes.shape[0]} amplitudes"
        )
    for c in centers:
        if c.shape != x.shape:
            raise ShapeError(
                f"center length {c.shape[0]} does not match input length {x.shape[0]}"
            )
    if fm is None:
        return float(sum(a * kernel_exact(x, c, sigma) for a, c in zip(amplitudes, centers)))
    phi_x = feature_map_apply(fm, x)
    return float(sum(a * float(phi_x @ feature_map_apply(fm, c))
                     for a, c in zip(amplitudes, centers)))
