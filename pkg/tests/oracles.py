"""Independent brute-force references the test suite verifies the library against.

Everything here is deliberately naive — textbook formulas, explicit loops,
O(n^2) transforms — and shares no code with the library's fast paths.
"""

import numpy as np


def naive_matvec(m, x):
    m = np.asarray(m, dtype=float)
    x = np.asarray(x, dtype=float)
    rows, cols = m.shape
    out = np.zeros(rows)
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += m[i, j] * x[j]
        out[i] = acc
    return out


def naive_matmul(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for k in range(b.shape[1]):
            acc = 0.0
            for j in range(a.shape[1]):
                acc += a[i, j] * b[j, k]
            out[i, k] = acc
    return out


def kron_definition(a, b):
    """Block matrix of all pairwise entry products, straight from the definition."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p, q = a.shape
    r, s = b.shape
    out = np.zeros((p * r, q * s))
    for i in range(p):
        for j in range(q):
            out[i * r : (i + 1) * r, j * s : (j + 1) * s] = a[i, j] * b
    return out


def khatri_rao_definition(a, b):
    """Columnwise Kronecker product, one column at a time."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    assert a.shape[1] == b.shape[1]
    cols = []
    for k in range(a.shape[1]):
        cols.append(kron_definition(a[:, k : k + 1], b[:, k : k + 1]))
    return np.hstack(cols)


def hadamard_matrix(n):
    """Sylvester-ordered Walsh-Hadamard matrix via H[i,j] = (-1)^popcount(i AND j)."""
    h = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            h[i, j] = -1.0 if bin(i & j).count("1") % 2 else 1.0
    return h


def naive_fwht(v):
    v = np.asarray(v, dtype=float)
    return naive_matvec(hadamard_matrix(v.shape[0]), v)


def dense_embedding(c, n, m):
    """M x N stack of diagonal blocks, truncated to M rows: row r holds c[r] at column r mod N."""
    out = np.zeros((m, n))
    for r in range(m):
        out[r, r % n] = c[r]
    return out


def zhat_dense(block):
    """Explicit n x n assembly of the structured operator from its factors."""
    n = block.n
    h = hadamard_matrix(n)
    p = np.zeros((n, n))
    for i in range(n):
        p[i, block.perm[i]] = 1.0
    return (
        np.diag(block.c_diag) @ h @ np.diag(block.g_diag) @ p @ h @ np.diag(block.b_signs)
    ) / (block.sigma * np.sqrt(n))


def central_difference(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.shape[0]):
        bumped = x.copy()
        bumped[i] = x[i] + h
        up = f(bumped)
        bumped[i] = x[i] - h
        down = f(bumped)
        grad[i] = (up - down) / (2.0 * h)
    return grad


def relative_error(analytic, numeric):
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


def perceptron_separable(features, labels, max_iters=5000):
    """Margin-perceptron proof of linear separability (True only on convergence)."""
    X = np.hstack([features, np.ones((features.shape[0], 1))])
    y = np.where(np.asarray(labels) == 1, 1.0, -1.0)
    w = np.zeros(X.shape[1])
    for _ in range(max_iters):
        margins = (X @ w) * y
        if (margins > 0).all():
            return True
        worst = int(np.argmin(margins))
        w += y[worst] * X[worst]
    return False


def dense_gaussian_features(seed, rows, dim, sigma):
    """Plain (unstructured) Gaussian random-feature map, cos/sin paired.

    Draws W from numpy's own generator so the oracle shares no randomness
    machinery with the library.  Returns phi with 2*rows output features.
    """
    w = np.random.default_rng(seed).standard_normal((rows, dim)) / sigma

    def phi(v):
        z = w @ np.asarray(v, dtype=float)
        return np.concatenate([np.cos(z), np.sin(z)]) / np.sqrt(rows)

    return phi
