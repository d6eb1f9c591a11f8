"""Small numerical-linear-algebra helpers shared across the package.

Conventions used everywhere: operator norm = largest singular value,
rank decisions by SVD with a threshold relative to the largest singular
value, Hermitian computations symmetrize first and refuse inputs whose
asymmetry exceeds a hygiene bound (asymmetry is recorded, not hidden).
"""

import numpy as np

RANK_RTOL = 1e-10
ASYM_TOL = 1e-10


class AsymmetryError(ValueError):
    """Raised when a matrix that must be Hermitian is not, beyond tolerance."""


def opnorm(m) -> float:
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def hermitize(m, tol: float = ASYM_TOL):
    """Return (hermitian part, asymmetry norm); raise if asymmetry > tol*scale."""
    m = np.asarray(m, dtype=complex)
    h = (m + m.conj().T) / 2
    asym = opnorm(m - h)
    scale = max(opnorm(h), 1.0)
    if asym > tol * scale:
        raise AsymmetryError(f"matrix is not Hermitian: asymmetry {asym:.3e}")
    return h, asym


def eigh_min(m) -> float:
    """Smallest eigenvalue of the Hermitian part of m."""
    h, _ = hermitize(m)
    if h.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(h)[0])


def svdvals(m):
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return np.zeros(0)
    return np.linalg.svd(m, compute_uv=False)


def rank(m, rtol: float = RANK_RTOL) -> int:
    s = svdvals(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def nullspace(m, rtol: float = RANK_RTOL):
    """Orthonormal basis (columns) of the kernel of m."""
    m = np.asarray(m, dtype=complex)
    if m.size == 0:
        return np.eye(m.shape[1], dtype=complex)
    u, s, vh = np.linalg.svd(m)
    cutoff = rtol * (s[0] if s.size else 0.0)
    r = int(np.sum(s > cutoff)) if s.size else 0
    return vh[r:].conj().T


def psd_sqrt(m, clamp: float = 1e-12):
    """Hermitian PSD square root; eigenvalues in [-clamp*scale, 0) are set to 0.

    Needed because defect operators I - vv* can come out slightly indefinite
    near the boundary; genuinely negative spectra still raise.
    """
    h, _ = hermitize(m)
    w, q = np.linalg.eigh(h)
    scale = max(abs(w[0]), abs(w[-1]), 1.0)
    if w[0] < -clamp * scale - 1e-300:
        if w[0] < -1e-8 * scale:
            raise ValueError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return (q * np.sqrt(w)) @ q.conj().T


def orthonormalize(cols, rtol: float = RANK_RTOL):
    """Gram-Schmidt with one reorthogonalization pass; drops dependent columns."""
    cols = np.asarray(cols, dtype=complex)
    out = []
    for j in range(cols.shape[1]):
        v = cols[:, j].copy()
        for _ in range(2):
            for u in out:
                v = v - u * (u.conj() @ v)
        n = np.linalg.norm(v)
        if n > rtol * max(1.0, np.linalg.norm(cols[:, j])):
            out.append(v / n)
    if not out:
        return np.zeros((cols.shape[0], 0), dtype=complex)
    return np.column_stack(out)


def unitary_completion(isom):
    """Extend a matrix with orthonormal columns to a square unitary.

    The given columns are kept verbatim as the leading columns.
    """
    isom = np.asarray(isom, dtype=complex)
    n, k = isom.shape
    if k > n:
        raise ValueError("cannot complete: more columns than rows")
    err = opnorm(isom.conj().T @ isom - np.eye(k))
    if err > 1e-8:
        raise ValueError(f"columns are not orthonormal: defect {err:.3e}")
    rest = np.eye(n, dtype=complex)
    for j in range(k):
        rest = rest - np.outer(isom[:, j], isom[:, j].conj()) @ rest
    extra = orthonormalize(rest)[:, : n - k]
    u = np.hstack([isom, extra])
    # polish the tail block once more against the fixed leading columns
    if n - k:
        tail = u[:, k:]
        for _ in range(2):
            tail = tail - isom @ (isom.conj().T @ tail)
            tail = orthonormalize(tail)
        u = np.hstack([isom, tail])
    return u


def direct_sum(a, b):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=complex)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0] :, a.shape[1] :] = b
    return out


def polar_unitary(m):
    """Partial-isometry factor of the polar decomposition.

    Maximizes Re tr(X* m) over contractions X of the same shape.
    """
    u, _, vh = np.linalg.svd(np.asarray(m, dtype=complex), full_matrices=False)
    return u @ vh
