"""Truncated Fock spaces, shift operators, and the compressed model tuple.

F_g(n) is the span of words of length at most n in g letters, with the
graded-lex word basis.  The truncated shift S_j prepends x_j and sends
length-n words to 0 (compression convention).  The model tuple
X_n = [S_j* (x) S_l] then satisfies, exactly in integer arithmetic,

    X_n* X_n = I_g  (x) P_n (x) Q_n,
    X_n  X_n* = I_g' (x) Q_n (x) P_n,

with P_n the projection killing the empty word and Q_n the projection
killing the length-n words.  X_n is nilpotent of order n + 1, which makes
series evaluation on it exact and powers the polynomial/series uniqueness
tests: a nonzero p with p(0) = 0 of degree <= N must break positivity of
I - X_n* X_n - p(X_n)* p(X_n) at some n <= N.
"""

import itertools

import numpy as np
from scipy import sparse

from ._linalg import opnorm, psd_sqrt
from .ncpoly import (
    GridError,
    MatrixTuple,
    NCPolynomial,
    TruncatedSeries,
    eval_nilpotent,
    eval_poly,
)


class TruncatedFock:
    """Word basis of F_g(n) in graded-lex order."""

    __slots__ = ("g", "n", "words", "index")

    def __init__(self, g: int, n: int):
        if g < 1 or n < 0:
            raise ValueError("need g >= 1 and n >= 0")
        words = []
        for k in range(n + 1):
            words.extend(itertools.product(range(1, g + 1), repeat=k))
        self.g = g
        self.n = n
        self.words = words
        self.index = {w: i for i, w in enumerate(words)}

    @property
    def dim(self) -> int:
        return len(self.words)

    def empty_complement(self):
        """P_n: diagonal 0/1 projection onto the complement of the empty word."""
        d = np.ones(self.dim, dtype=np.int64)
        d[self.index[()]] = 0
        return sparse.diags(d, dtype=np.int64, format="csr")

    def top_complement(self):
        """Q_n: projection onto the complement of the span of length-n words."""
        d = np.array([1 if len(w) < self.n else 0 for w in self.words], dtype=np.int64)
        return sparse.diags(d, dtype=np.int64, format="csr")


def build_fock(g: int, n: int) -> TruncatedFock:
    return TruncatedFock(g, n)


class ShiftOps:
    """The g truncated shifts as sparse 0/1 matrices."""

    __slots__ = ("fock", "mats")

    def __init__(self, fock: TruncatedFock):
        mats = []
        for j in range(1, fock.g + 1):
            rows, cols = [], []
            for w, i in fock.index.items():
                if len(w) < fock.n:
                    rows.append(fock.index[(j,) + w])
                    cols.append(i)
            data = np.ones(len(rows), dtype=np.int64)
            mats.append(
                sparse.csr_matrix(
                    (data, (rows, cols)), shape=(fock.dim, fock.dim), dtype=np.int64
                )
            )
        self.fock = fock
        self.mats = mats

    def __getitem__(self, j: int):
        return self.mats[j - 1]


def build_shifts(fock: TruncatedFock) -> ShiftOps:
    return ShiftOps(fock)


class BigX:
    """The compressed model tuple [S_j* (x) S_l] on F_g'(n) (x) F_g(n)."""

    __slots__ = ("gp", "g", "n", "left", "right", "sparse_entries")

    def __init__(self, gp: int, g: int, n: int):
        self.gp, self.g, self.n = gp, g, n
        self.left = build_fock(gp, n)
        self.right = build_fock(g, n)
        sl = build_shifts(self.left)
        sr = build_shifts(self.right)
        self.sparse_entries = [
            [sparse.kron(sl[j].T, sr[l], format="csr") for l in range(1, g + 1)]
            for j in range(1, gp + 1)
        ]

    @property
    def level(self) -> int:
        return self.left.dim * self.right.dim

    def flat(self):
        return sparse.bmat(self.sparse_entries, format="csr")

    def as_tuple(self) -> MatrixTuple:
        return MatrixTuple(
            (self.gp, self.g),
            [[m.toarray().astype(complex) for m in row] for row in self.sparse_entries],
        )


def build_bigx(gp: int, g: int, n: int) -> BigX:
    if n < 1:
        raise ValueError("the model tuple needs n >= 1")
    return BigX(gp, g, n)


def check_bigx_identities(bigx: BigX) -> dict:
    """Verify both compression identities exactly (integer arithmetic)."""
    x = bigx.flat()
    pn_l = bigx.left.empty_complement()
    qn_l = bigx.left.top_complement()
    pn_r = bigx.right.empty_complement()
    qn_r = bigx.right.top_complement()
    eye = lambda k: sparse.identity(k, dtype=np.int64, format="csr")
    want_xtx = sparse.kron(eye(bigx.g), sparse.kron(pn_l, qn_r), format="csr")
    want_xxt = sparse.kron(eye(bigx.gp), sparse.kron(qn_l, pn_r), format="csr")
    xtx_ok = (x.T @ x - want_xtx).nnz == 0
    xxt_ok = (x @ x.T - want_xxt).nnz == 0
    # nilpotency of order n+1: every length-(n+1) right-shift product vanishes,
    # hence every word in the tuple entries does
    nil_ok = True
    sr = build_shifts(bigx.right)
    for word in itertools.product(range(1, bigx.g + 1), repeat=bigx.n + 1):
        prod = sr[word[0]]
        for l in word[1:]:
            prod = prod @ sr[l]
            if prod.nnz == 0:
                break
        if prod.nnz != 0:
            nil_ok = False
            break
    report = {
        "xtx_identity": bool(xtx_ok),
        "xxt_identity": bool(xxt_ok),
        "nilpotent_order": bigx.n + 1,
        "nilpotency": bool(nil_ok),
        "pass": bool(xtx_ok and xxt_ok and nil_ok),
    }
    if not report["pass"]:
        raise AssertionError(f"model identities violated: {report}")
    return report


def unique_s_polynomial_test(p: NCPolynomial, upto: int, tol: float = 1e-9) -> dict:
    """Positivity sweep of Lemma-style tests at the model tuples.

    For each n <= upto checks, where the shapes allow,
      order 1:  I - X_n* X_n - p(X_n)* p(X_n) >= 0   (needs d = g)
      order 2:  I - X_n X_n* - p(X_n) p(X_n)* >= 0   (needs d' = g')
    A nonzero p with p(0) = 0 of degree <= upto must violate one of them at
    some n <= upto; the witness carries (n, order, eigenvalue, eigenvector).
    """
    gp, g = p.grid
    dp, d = p.shape
    if not p.homogeneous_part(0).is_zero():
        raise ValueError("p(0) must be 0")
    orders = []
    if d == g:
        orders.append(1)
    if dp == gp:
        orders.append(2)
    if not orders:
        raise ValueError(
            f"shape {p.shape} fits neither test order for grid {p.grid}"
        )
    witness = None
    for n in range(1, upto + 1):
        bigx = build_bigx(gp, g, n)
        xt = bigx.flat().toarray().astype(complex)
        px = eval_poly(p, bigx.as_tuple())
        for order in orders:
            if order == 1:
                m = np.eye(xt.shape[1]) - xt.conj().T @ xt - px.conj().T @ px
            else:
                m = np.eye(xt.shape[0]) - xt @ xt.conj().T - px @ px.conj().T
            scale = 1.0 + opnorm(px) ** 2
            vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
            if vals[0] < -tol * scale:
                witness = {
                    "n": n,
                    "order": order,
                    "eigenvalue": float(vals[0]),
                    "eigenvector": vecs[:, 0],
                }
                return {"zero": False, "witness": witness, "checked_upto": n}
    return {"zero": True, "witness": None, "checked_upto": upto}


def unique_s_series_test(h: TruncatedSeries, upto: int, tol: float = 1e-12) -> dict:
    """Evaluate h at the model tuples (exact: they are nilpotent).

    A nonzero truncated series of degree <= upto with h(0) = 0 must give a
    nonzero value at some n <= upto.
    """
    gp, g = h.grid
    max_norm = 0.0
    per_level = []
    for n in range(1, upto + 1):
        x = build_bigx(gp, g, n).as_tuple()
        val = eval_nilpotent(h, x, n + 1)
        nv = opnorm(val)
        per_level.append(nv)
        max_norm = max(max_norm, nv)
    return {"zero": bool(max_norm <= tol), "max_norm": max_norm, "norms": per_level}


def truncated_dilation(x: MatrixTuple, cutoff: int) -> tuple:
    """Finite Fock dilation of a strict column contraction.

    Builds V h = sum_{|w| <= cutoff} (Delta w_rev(X) h) (x) w into
    C^n (x) F_g'(cutoff) with Delta = (I - sum X_j* X_j)^(1/2).  The
    intertwining V X_j = (I (x) S_j*) V holds exactly on components of
    length < cutoff; the isometry defect equals the norm of the length-
    (cutoff+1) word Gram sum and vanishes geometrically in the cutoff.
    """
    gp, g = x.grid
    if g != 1:
        raise GridError("dilation expects a column tuple (grid g x 1)")
    n = x.level
    gram = sum(
        np.asarray(x.entries[j][0]).conj().T @ np.asarray(x.entries[j][0]) for j in range(gp)
    )
    defect = np.eye(n) - gram
    min_eig = float(np.linalg.eigvalsh((defect + defect.conj().T) / 2)[0])
    if min_eig <= 1e-12:
        raise ValueError(f"not a strict column contraction: min defect eig {min_eig:.3e}")
    delta = psd_sqrt(defect)
    fock = build_fock(gp, cutoff)
    shifts = build_shifts(fock)
    v = np.zeros((n * fock.dim, n), dtype=complex)
    coeffs = {(): delta}
    for w in fock.words:
        if w == ():
            continue
        tail = w[1:]
        coeffs[w] = coeffs[tail] @ np.asarray(x.entries[w[0] - 1][0])
    for w, i in fock.index.items():
        for k in range(n):
            v[k * fock.dim + i, :] = coeffs[w][k, :]
    vtv_defect = opnorm(v.conj().T @ v - np.eye(n))
    inter_full = 0.0
    inter_retained = 0.0
    top_rows = np.array([i for w, i in fock.index.items() if len(w) == cutoff])
    for j in range(1, gp + 1):
        op = sparse.kron(sparse.identity(n, format="csr"), shifts[j].T, format="csr")
        r = v @ np.asarray(x.entries[j - 1][0]) - op @ v
        inter_full = max(inter_full, opnorm(r))
        mask = np.ones(n * fock.dim, dtype=bool)
        for k in range(n):
            mask[k * fock.dim + top_rows] = False
        inter_retained = max(inter_retained, opnorm(r[mask, :]))
    report = {
        "cutoff": cutoff,
        "isometry_defect": float(vtv_defect),
        "intertwining_full": float(inter_full),
        "intertwining_retained": float(inter_retained),
    }
    return v, report
