"""Linear-fractional automorphisms of the d' x d matrix ball.

For a strict contraction v the map

    F_v(u) = v - (I - vv*)^(1/2) u (I - v*u)^(-1) (I - v*v)^(1/2)

sends the ball into itself with boundary to boundary, is an involution,
swaps 0 and v, and preserves the dimension of the isometric subspace.
Pointwise application lifts v and its defect roots by (x) I_n; the series
composition expands (I - v*u)^(-1) with the constant part inverted in
closed form and a Neumann series on the centered remainder, which is exact
degree by degree.
"""

import warnings

import numpy as np

from ._linalg import opnorm, psd_sqrt, svdvals
from .ncpoly import TruncatedSeries

COND_WARN = 1e8


class MoebiusParams:
    """Center v with ||v|| < 1 and its cached Hermitian defect roots."""

    __slots__ = ("v", "shape", "root_left", "root_right")

    def __init__(self, v):
        v = np.atleast_2d(np.asarray(v, dtype=complex))
        nv = opnorm(v)
        if nv >= 1.0:
            raise ValueError(f"||v|| = {nv:.6f} must be < 1")
        dp, d = v.shape
        self.v = v
        self.shape = (dp, d)
        self.root_left = psd_sqrt(np.eye(dp) - v @ v.conj().T)
        self.root_right = psd_sqrt(np.eye(d) - v.conj().T @ v)


def moebius_apply(params: MoebiusParams, u, warn_condition: bool = True):
    """F_v(U) for a block contraction U at level n (shape d'n x dn)."""
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    dp, d = params.shape
    if u.shape[0] % dp or u.shape[1] % d or u.shape[0] // dp != u.shape[1] // d:
        raise ValueError(f"U of shape {u.shape} is not a level lift of {params.shape}")
    n = u.shape[0] // dp
    eye_n = np.eye(n)
    v = np.kron(params.v, eye_n)
    rl = np.kron(params.root_left, eye_n)
    rr = np.kron(params.root_right, eye_n)
    a = np.eye(d * n) - v.conj().T @ u
    s = svdvals(a)
    if s[-1] <= 1e-14 * max(s[0], 1.0):
        raise np.linalg.LinAlgError("I - v*U is singular")
    if warn_condition and s[0] / s[-1] > COND_WARN:
        warnings.warn(f"I - v*U condition number {s[0] / s[-1]:.2e}", RuntimeWarning)
    return v - rl @ u @ np.linalg.solve(a, rr)


def verify_involution(params: MoebiusParams, u, tol: float = 1e-9) -> dict:
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    residual = opnorm(moebius_apply(params, moebius_apply(params, u)) - u)
    return {"residual": float(residual), "pass": bool(residual <= tol)}


def isometric_rank(u, tol: float = 1e-8) -> int:
    """Number of singular values equal to 1 within tol."""
    s = svdvals(u)
    return int(np.sum(np.abs(s - 1.0) <= tol))


def verify_rank_preservation(params: MoebiusParams, u, tol: float = 1e-8) -> dict:
    k_in = isometric_rank(u, tol)
    k_out = isometric_rank(moebius_apply(params, u), tol)
    return {"rank_in": k_in, "rank_out": k_out, "pass": k_in == k_out}


def moebius_compose_series(
    params: MoebiusParams, u: TruncatedSeries, degree=None
) -> TruncatedSeries:
    """Truncated series of F_v applied to the series u.

    The inverse (I - v*u)^(-1) is computed as sum_k (C w)^k C with
    C = (I - v*u(0))^(-1) and w the positive-degree part of v*u; term k has
    lowest degree k, so k <= degree terms give the exact truncation.
    """
    dp, d = params.shape
    if u.shape != params.shape:
        raise ValueError(f"series shape {u.shape} does not match v shape {params.shape}")
    if degree is None:
        degree = u.degree
    w = u.left_mul(params.v.conj().T).truncate(degree)
    w0 = w.constant_term()
    if opnorm(w0) >= 1.0:
        raise ValueError(f"Neumann expansion invalid: ||v* u(0)|| = {opnorm(w0):.6f} >= 1")
    c = np.linalg.inv(np.eye(d) - w0)
    w_plus = w - TruncatedSeries.constant(w.grid, w0, degree)
    m = w_plus.left_mul(c)
    geo = TruncatedSeries.constant(u.grid, np.eye(d), degree)
    power = TruncatedSeries.constant(u.grid, np.eye(d), degree)
    for _ in range(degree):
        power = power.mul(m, degree)
        geo = geo + power
    inv_series = geo.right_mul(c)
    tail = u.mul(inv_series, degree).left_mul(params.root_left).right_mul(params.root_right)
    return TruncatedSeries.constant(u.grid, params.v, degree) - tail


def verification_suite(samples: int, seed: int, shape=(2, 2), max_level: int = 4) -> dict:
    """Seeded sweep of the four structural properties of F_v.

    Checks ball preservation, boundary preservation, the involution residual
    and isometric-rank preservation on `samples` random (v, U) pairs.
    """
    from .sampling import random_contraction, random_partial_isometry_point, rng_for

    rng = rng_for(seed, "moebius.suite")
    dp, d = shape
    max_excess = 0.0
    max_boundary = 0.0
    max_involution = 0.0
    ranks_ok = True
    for i in range(samples):
        n = int(rng.integers(1, max_level + 1))
        v = random_contraction(rng, dp, d, norm=float(rng.uniform(0.05, 0.9)))
        params = MoebiusParams(v)
        mode = i % 3
        if mode == 0:
            u = random_contraction(rng, dp * n, d * n, norm=float(rng.uniform(0.0, 1.0)))
        elif mode == 1:
            u = random_contraction(rng, dp * n, d * n, norm=1.0)
        else:
            k = int(rng.integers(0, min(dp, d) * n + 1))
            u = random_partial_isometry_point(rng, dp * n, d * n, k)
        fu = moebius_apply(params, u)
        max_excess = max(max_excess, opnorm(fu) - 1.0)
        if abs(opnorm(u) - 1.0) <= 1e-12:
            max_boundary = max(max_boundary, abs(opnorm(fu) - 1.0))
        max_involution = max(max_involution, verify_involution(params, u)["residual"])
        ranks_ok = ranks_ok and verify_rank_preservation(params, u)["pass"]
    return {
        "samples": samples,
        "ball_excess": max_excess,
        "boundary_residual": max_boundary,
        "involution_residual": max_involution,
        "rank_preserved": bool(ranks_ok),
        "pass": bool(
            max_excess <= 1e-10
            and max_boundary <= 1e-8
            and max_involution <= 1e-9
            and ranks_ok
        ),
    }
