"""Seeded random constructions used by the verification suites.

Every suite derives its generator as seed XOR sha256(check name), so runs
are reproducible check by check and independent across checks.
"""

import hashlib

import numpy as np

from .ncpoly import MatrixTuple


def derive_seed(seed: int, name: str) -> int:
    h = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "big")
    return (int(seed) ^ h) & 0xFFFFFFFFFFFFFFFF


def rng_for(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, name))


def ginibre(rng, rows, cols=None):
    cols = rows if cols is None else cols
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def random_unitary(rng, n):
    q, r = np.linalg.qr(ginibre(rng, n))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_contraction(rng, rows, cols=None, norm=None):
    """Random matrix scaled to the requested operator norm (default < 1)."""
    m = ginibre(rng, rows, cols)
    s = np.linalg.norm(m, 2)
    if norm is None:
        norm = 0.95 * rng.uniform(0.1, 1.0)
    return m * (norm / s) if s > 0 else m


def random_tuple(grid, level, rng, norm=None) -> MatrixTuple:
    """Random tuple; if norm is given, the flattened block matrix is scaled to it."""
    gp, g = grid
    x = MatrixTuple(grid, [[ginibre(rng, level) for _ in range(g)] for _ in range(gp)])
    if norm is not None:
        cur = x.norm()
        if cur > 0:
            x = x.scale(norm / cur)
    return x


def random_column_contraction(grid, level, rng, norm=0.9) -> MatrixTuple:
    """Strict column contraction on a (g x 1) grid: ||sum X_j* X_j||^(1/2) = norm."""
    if grid[1] != 1:
        raise ValueError("column contractions live on a (g x 1) grid")
    return random_tuple(grid, level, rng, norm=norm)


def random_isometric_columns(rng, rows, cols):
    """rows x cols matrix with orthonormal columns (rows >= cols)."""
    q, r = np.linalg.qr(ginibre(rng, rows, cols))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_partial_isometry_point(rng, rows, cols, iso_rank):
    """Contraction with exactly iso_rank singular values 1, the rest < 1."""
    k = min(rows, cols)
    if iso_rank > k:
        raise ValueError("isometric rank exceeds min dimension")
    u = random_unitary(rng, rows)
    v = random_unitary(rng, cols)
    s = np.zeros((rows, cols))
    vals = np.concatenate([np.ones(iso_rank), rng.uniform(0.2, 0.8, k - iso_rank)])
    np.fill_diagonal(s, vals)
    return u @ s @ v.conj().T
