"""Matrix balls, pencil balls, and monic-LMI positivity domains.

Membership is decided from the operator norm of the flattened block matrix
(for the plain ball) or of the pencil value; the LMI check verifies that
positivity of I + L + L* on the nilpotent embedding [[0, X], [0, 0]] agrees
with pencil-ball membership, including at the boundary.
"""

from dataclasses import dataclass

import numpy as np

from ._linalg import eigh_min, opnorm
from .ncpoly import GridError, Letter, MatrixTuple, NCPolynomial, Word, _freeze

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class BallVerdict:
    status: str  # "interior" | "boundary" | "outside"
    norm: float
    tolerance: float

    @classmethod
    def from_norm(cls, norm: float, tol: float = DEFAULT_TOL) -> "BallVerdict":
        if abs(norm - 1.0) <= tol:
            status = "boundary"
        elif norm < 1.0:
            status = "interior"
        else:
            status = "outside"
        return cls(status, float(norm), float(tol))


class LinearPencil:
    """Truly linear pencil L(x) = sum A_{jl} x_{jl} with d' x d coefficients."""

    __slots__ = ("grid", "shape", "coeffs")

    def __init__(self, grid, coeffs):
        gp, g = grid
        if len(coeffs) != gp or any(len(row) != g for row in coeffs):
            raise GridError(f"coefficients do not form a {gp} x {g} array")
        shape = None
        rows = []
        for row in coeffs:
            out = []
            for a in row:
                a = np.atleast_2d(np.asarray(a, dtype=complex))
                if shape is None:
                    shape = a.shape
                elif a.shape != shape:
                    raise ValueError("pencil coefficients must share one shape")
                out.append(_freeze(a))
            rows.append(tuple(out))
        self.grid = (gp, g)
        self.shape = shape
        self.coeffs = tuple(rows)

    @classmethod
    def zero(cls, grid, shape):
        z = np.zeros(shape)
        gp, g = grid
        return cls(grid, [[z] * g for _ in range(gp)])

    @classmethod
    def elementary(cls, grid):
        """L = sum E_{jl} x_{jl}; its pencil ball is the plain matrix ball."""
        gp, g = grid
        rows = []
        for j in range(gp):
            row = []
            for l in range(g):
                e = np.zeros((gp, g))
                e[j, l] = 1.0
                row.append(e)
            rows.append(row)
        return cls(grid, rows)

    @classmethod
    def from_columns(cls, mats):
        """g-variable column pencil L(x) = A_1 x_1 + ... + A_g x_g (grid g x 1)."""
        return cls((len(mats), 1), [[m] for m in mats])

    def coeff(self, row, col=1):
        return self.coeffs[row - 1][col - 1]

    def column_list(self):
        if self.grid[1] != 1:
            raise GridError("not a column (g x 1) pencil")
        return [np.array(self.coeffs[j][0]) for j in range(self.grid[0])]

    def as_poly(self) -> NCPolynomial:
        gp, g = self.grid
        terms = {
            Word((Letter(j, l),)): self.coeffs[j - 1][l - 1]
            for j in range(1, gp + 1)
            for l in range(1, g + 1)
        }
        return NCPolynomial(self.grid, self.shape, terms)

    def is_square(self) -> bool:
        return self.shape[0] == self.shape[1]

    def __repr__(self):
        return f"LinearPencil(grid={self.grid}, shape={self.shape})"


def pencil_eval(l: LinearPencil, x: MatrixTuple):
    """L(X) = sum A_{jl} (x) X_{jl}, same Kronecker convention as eval_poly."""
    if l.grid != x.grid:
        raise GridError(f"grid mismatch {l.grid} vs {x.grid}")
    gp, g = l.grid
    dp, d = l.shape
    n = x.level
    out = np.zeros((dp * n, d * n), dtype=complex)
    for j in range(gp):
        for lcol in range(g):
            out += np.kron(l.coeffs[j][lcol], x.entries[j][lcol])
    return out


def classify_ball(x: MatrixTuple, tol: float = DEFAULT_TOL) -> BallVerdict:
    """Position of X relative to the matrix ball via the flattened block norm."""
    return BallVerdict.from_norm(x.norm(), tol)


def pencil_ball_membership(l: LinearPencil, x: MatrixTuple, tol: float = DEFAULT_TOL) -> BallVerdict:
    return BallVerdict.from_norm(opnorm(pencil_eval(l, x)), tol)


class MonicPencil:
    """The monic symmetric pencil I + L + L* of a square truly linear L."""

    __slots__ = ("base",)

    def __init__(self, base: LinearPencil):
        if not base.is_square():
            raise ValueError("monic pencil needs a square base pencil")
        self.base = base

    def eval(self, x: MatrixTuple):
        lx = pencil_eval(self.base, x)
        return np.eye(lx.shape[0]) + lx + lx.conj().T


def embed_nilpotent(x: MatrixTuple) -> MatrixTuple:
    """The order-two embedding sending each entry X_{jl} to [[0, X_{jl}], [0, 0]]."""
    gp, g = x.grid
    n = x.level
    rows = []
    for j in range(gp):
        row = []
        for l in range(g):
            m = np.zeros((2 * n, 2 * n), dtype=complex)
            m[:n, n:] = x.entries[j][l]
            row.append(m)
        rows.append(row)
    return MatrixTuple(x.grid, rows)


def lmi_embed_check(l: LinearPencil, x: MatrixTuple, tol: float = DEFAULT_TOL) -> dict:
    """Check the LMI/pencil-ball equivalence on [[0, X], [0, 0]].

    Reports the minimum eigenvalue of (I + L + L*) at the embedded tuple and
    the pencil norm ||L(X)|| side by side; the spectra are tied by
    eig([[I, C], [C*, I]]) = {1 +- sigma_i(C)}, so membership and boundary
    verdicts must agree.
    """
    if not l.is_square():
        raise ValueError("LMI embedding needs a square pencil")
    monic = MonicPencil(l)
    emb = embed_nilpotent(x)
    value = monic.eval(emb)
    min_eig = eigh_min(value)
    norm = opnorm(pencil_eval(l, x))
    ball = BallVerdict.from_norm(norm, tol)
    lmi_member = min_eig >= -tol
    lmi_boundary = abs(min_eig) <= tol
    return {
        "pencil_norm": norm,
        "lmi_min_eig": min_eig,
        "ball_status": ball.status,
        "lmi_member": bool(lmi_member),
        "lmi_boundary": bool(lmi_boundary),
        "agree": bool(
            (ball.status != "outside") == lmi_member
            and (ball.status == "boundary") == lmi_boundary
        ),
        "tolerance": float(tol),
    }
