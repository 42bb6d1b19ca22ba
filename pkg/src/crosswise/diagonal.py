"""Diagonal-weight layer math: the crosswise map and its dense embedding.

A crosswise map sends an input of length N to M outputs using only k*N
learned coefficients, k = ceil(M/N): the coefficients are the stacked
diagonals of k diagonal N x N blocks, and the block stack is truncated to
exactly M rows.  `decurto_product` is the underlying componentwise operand;
`expand_to_dense` materializes the equivalent M x N dense matrix so the
structured path can be checked against an explicit matvec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .rng import CounterRng

ACTIVATIONS = ("relu", "identity")
INIT_SCHEMES = ("uniform_scaled", "ones")


def block_count(in_dim: int, out_dim: int) -> int:
    """Number of stacked diagonal blocks: the smallest k with k*N >= M."""
    return -(-out_dim // in_dim)


@dataclass
class CrosswiseWeights:
    """Learned diagonal coefficients (length k*N) plus an M-vector bias."""

    in_dim: int
    out_dim: int
    k: int
    c: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ParameterError(
                f"dims must be positive, got {self.in_dim}x{self.out_dim}"
            )
        if self.k != block_count(self.in_dim, self.out_dim):
            raise ParameterError(
                f"k must be ceil(M/N) = {block_count(self.in_dim, self.out_dim)}, got {self.k}"
            )
        self.c = np.asarray(self.c, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.c.shape != (self.k * self.in_dim,):
            raise ShapeError(
                f"coefficients must have length k*N = {self.k * self.in_dim}, "
                f"got {self.c.shape}"
            )
        if self.b.shape != (self.out_dim,):
            raise ShapeError(
                f"bias must have length M = {self.out_dim}, got {self.b.shape}"
            )

    @property
    def weight_count(self) -> int:
        return self.k * self.in_dim


def _check_activation(activation: str):
    if activation not in ACTIVATIONS:
        raise ParameterError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")


def decurto_product(c: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Componentwise vector product; c holds the diagonal of a weight matrix."""
    if c.shape != x.shape:
        raise ShapeError(
            f"decurto_product: lengths differ ({c.shape[0]} vs {x.shape[0]})"
        )
    return c * x


def _pre_activation(w: CrosswiseWeights, x: np.ndarray) -> np.ndarray:
    if x.shape != (w.in_dim,):
        raise ShapeError(
            f"crosswise input must have length {w.in_dim}, got {x.shape[0]}"
        )
    z = w.c * np.tile(x, w.k)
    return z[: w.out_dim] + w.b


def crosswise_forward(w: CrosswiseWeights, x: np.ndarray, activation: str = "relu") -> np.ndarray:
    """Blockwise diagonal map, truncated to M outputs, plus bias and activation."""
    _check_activation(activation)
    pre = _pre_activation(w, x)
    if activation == "relu":
        return np.maximum(pre, 0.0)
    return pre


def expand_to_dense(w: CrosswiseWeights) -> np.ndarray:
    """The M x N dense matrix whose matvec equals the pre-activation map minus bias."""
    dense = np.zeros((w.out_dim, w.in_dim))
    rows = np.arange(w.out_dim)
    dense[rows, rows % w.in_dim] = w.c[: w.out_dim]
    return dense


def crosswise_backward(
    w: CrosswiseWeights, x: np.ndarray, upstream: np.ndarray, activation: str = "relu"
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (grad_c, grad_b, grad_x) of the forward map.

    The ReLU derivative at a pre-activation of exactly 0 is taken as 0.
    """
    _check_activation(activation)
    if upstream.shape != (w.out_dim,):
        raise ShapeError(
            f"upstream must have length {w.out_dim}, got {upstream.shape[0]}"
        )
    pre = _pre_activation(w, x)
    if activation == "relu":
        g = np.where(pre > 0.0, upstream, 0.0)
    else:
        g = np.asarray(upstream, dtype=np.float64)
    g_ext = np.zeros(w.k * w.in_dim)
    g_ext[: w.out_dim] = g
    grad_c = g_ext * np.tile(x, w.k)
    grad_x = (w.c * g_ext).reshape(w.k, w.in_dim).sum(axis=0)
    return grad_c, g.copy(), grad_x


def init_crosswise(seed: int, in_dim: int, out_dim: int, scheme: str = "uniform_scaled") -> CrosswiseWeights:
    """Seeded weights: uniform [-1, 1]/sqrt(N) coefficients (or all ones), zero bias."""
    if in_dim < 1 or out_dim < 1:
        raise ParameterError(f"dims must be positive, got {in_dim}x{out_dim}")
    if scheme not in INIT_SCHEMES:
        raise ParameterError(f"scheme must be one of {INIT_SCHEMES}, got {scheme!r}")
    k = block_count(in_dim, out_dim)
    if scheme == "ones":
        c = np.ones(k * in_dim)
    else:
        rng = CounterRng(seed, stream=0)
        c = rng.uniform(k * in_dim, -1.0, 1.0) / math.sqrt(in_dim)
    return CrosswiseWeights(in_dim, out_dim, k, c, np.zeros(out_dim))
