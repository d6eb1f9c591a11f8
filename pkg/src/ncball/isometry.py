"""Complete contractivity and complete isometry analysis of linear maps.

A linear psi: C^{g'xg} -> C^{d'xd} is stored through its matrix-unit images
A_{jl} = psi(E_{jl}) and amplified by psi(X) = sum X_{jl} (x) A_{jl}.  The
certification pipeline follows the constructive route: evaluate psi at the
distinguished test point sum e_j e_l^T (x) e_j e_l^T, read unit f-vectors
off a maximizing singular vector, verify the coupling relations

    <A_{a,s} f_u, A_{b,t} f_v> = 1 iff (a,s,t) = (b,u,v), else 0,

assemble isometries F = [f_1 ... f_g], H = [h_1 ... h_g'], complete them to
unitaries and check that V* psi(.) U is x (+) phi block diagonal.  The
returned certificate carries everything needed for independent replay.
"""

from dataclasses import dataclass, field

import numpy as np

from ._linalg import opnorm, orthonormalize, polar_unitary, unitary_completion
from .ncpoly import GridError, Letter, MatrixTuple, NCPolynomial, Word
from .sampling import ginibre, random_contraction, rng_for


class LinearMatrixMap:
    """Linear map on matrix coefficients, amplified entrywise to all levels."""

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
                    raise ValueError("coefficients must share one shape")
                a = a.copy()
                a.flags.writeable = False
                out.append(a)
            rows.append(tuple(out))
        self.grid = (gp, g)
        self.shape = shape
        self.coeffs = tuple(rows)

    @classmethod
    def identity_embedding(cls, grid):
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

    def coeff(self, row, col=1):
        return self.coeffs[row - 1][col - 1]

    def apply(self, x):
        """psi(X) = sum X_{jl} (x) A_{jl} for a MatrixTuple or block matrix."""
        if isinstance(x, MatrixTuple):
            entries = x.entries
            n = x.level
            if x.grid != self.grid:
                raise GridError(f"grid mismatch {x.grid} vs {self.grid}")
        else:
            x = np.atleast_2d(np.asarray(x, dtype=complex))
            gp, g = self.grid
            if x.shape[0] % gp or x.shape[1] % g or x.shape[0] // gp != x.shape[1] // g:
                raise ValueError(f"block matrix of shape {x.shape} does not split {self.grid}")
            n = x.shape[0] // gp
            entries = [
                [x[j * n : (j + 1) * n, l * n : (l + 1) * n] for l in range(g)]
                for j in range(gp)
            ]
        gp, g = self.grid
        dp, d = self.shape
        out = np.zeros((n * dp, n * d), dtype=complex)
        for j in range(gp):
            for l in range(g):
                out += np.kron(np.asarray(entries[j][l]), self.coeffs[j][l])
        return out

    def as_poly(self) -> NCPolynomial:
        gp, g = self.grid
        terms = {
            Word((Letter(j, l),)): self.coeffs[j - 1][l - 1]
            for j in range(1, gp + 1)
            for l in range(1, g + 1)
        }
        return NCPolynomial(self.grid, self.shape, terms)

    def flat_coeff_matrix(self):
        """The block matrix [A_{jl}] of shape g'd' x gd."""
        return np.block([[np.array(a) for a in row] for row in self.coeffs])

    def block_transpose(self):
        """Formal block transpose [A_{lj}]: a gd' x g'd block matrix."""
        gp, g = self.grid
        return np.block(
            [[np.array(self.coeffs[j][l]) for j in range(gp)] for l in range(g)]
        )

    def is_empty(self) -> bool:
        return self.shape[0] == 0 or self.shape[1] == 0

    def __repr__(self):
        return f"LinearMatrixMap(grid={self.grid}, shape={self.shape})"


def block_transpose_test(psi: LinearMatrixMap, tol: float = 1e-10) -> dict:
    """Necessary condition for complete contractivity: [A_{lj}] is a contraction.

    The converse fails: the delta map C^{2x2} -> C has block transpose I_2
    yet sends E_11 + E_22 to 2.
    """
    norm = opnorm(psi.block_transpose())
    return {"norm": float(norm), "pass": bool(norm <= 1.0 + tol)}


def _ascent_step(psi: LinearMatrixMap, x):
    """One alternating-maximization step for ||psi(X)|| over ||X|| <= 1.

    Returns (next point, value at the current point).  The linear functional
    X -> Re b* psi(X) a is maximized over the operator-norm ball by the
    polar partial isometry of its gradient matrix.
    """
    gp, g = psi.grid
    dp, d = psi.shape
    n = x.shape[0] // gp
    u, s, vh = np.linalg.svd(psi.apply(x))
    b = u[:, 0].reshape(n, dp)
    a = vh[0].conj().reshape(n, d)
    grad = np.zeros((gp * n, g * n), dtype=complex)
    for j in range(gp):
        for l in range(g):
            grad[j * n : (j + 1) * n, l * n : (l + 1) * n] = (
                b.conj() @ psi.coeffs[j][l] @ a.T
            )
    return polar_unitary(grad.conj()), float(s[0])


def sample_complete_contractivity(
    psi: LinearMatrixMap, samples: int = 60, seed: int = 0, ascent_steps: int = 25
) -> dict:
    """Sampled lower bound on the cb-norm with local ascent refinement.

    This is a sampling check, not a certificate: it reports
    max ||psi(X)|| / ||X|| over seeded contractions at levels up to
    min(g, d) + 1, each refined by alternating maximization.
    """
    gp, g = psi.grid
    dp, d = psi.shape
    rng = rng_for(seed, "isometry.cc")
    best = 0.0
    best_point = None
    best_level = 0
    levels = range(1, min(g, d) + 2)
    for n in levels:
        starts = [random_contraction(rng, gp * n, g * n, norm=1.0) for _ in range(max(1, samples // len(levels)))]
        starts.append(polar_unitary(np.ones((gp * n, g * n)) + 0j))
        for x in starts:
            ratio = opnorm(psi.apply(x))
            for _ in range(ascent_steps):
                x_new, val = _ascent_step(psi, x)
                if val <= ratio + 1e-14:
                    x = x_new
                    ratio = max(ratio, val)
                    break
                x = x_new
                ratio = val
            ratio = max(ratio, opnorm(psi.apply(x)))
            if ratio > best:
                best, best_point, best_level = ratio, x, n
    return {
        "max_ratio": float(best),
        "level": best_level,
        "witness": best_point,
        "plausibly_cc": bool(best <= 1.0 + 1e-7),
    }


@dataclass
class CompleteIsometryCertificate:
    u: np.ndarray  # d x d unitary, leading g columns = f-vectors
    v: np.ndarray  # d' x d' unitary, leading g' columns = h-vectors
    phi: LinearMatrixMap  # (d'-g') x (d-g) completely contractive corner
    f_vectors: np.ndarray  # d x g
    h_vectors: np.ndarray  # d' x g'
    residual: float

    def reconstruction(self, grid) -> LinearMatrixMap:
        gp, g = grid
        dp, d = self.v.shape[0], self.u.shape[0]
        rows = []
        for j in range(gp):
            row = []
            for l in range(g):
                inner = np.zeros((dp, d), dtype=complex)
                inner[j, l] = 1.0
                if not self.phi.is_empty():
                    inner[gp:, g:] = self.phi.coeff(j + 1, l + 1)
                row.append(self.v @ inner @ self.u.conj().T)
            rows.append(row)
        return LinearMatrixMap(grid, rows)


@dataclass
class CertificationRejection:
    stage: str
    residual: float
    detail: str = ""

    @property
    def rejected(self) -> bool:
        return True


def _phase_normalize(vec):
    k = int(np.argmax(np.abs(vec)))
    ph = vec[k] / abs(vec[k]) if abs(vec[k]) > 0 else 1.0
    return vec / ph


def _try_f_vectors(psi: LinearMatrixMap, f_full, tol: float):
    """Blocks of a maximizing vector -> unit f-vectors, eq-of-couplings check."""
    gp, g = psi.grid
    dp, d = psi.shape
    fs = []
    for u in range(g):
        blk = f_full[u * d : (u + 1) * d]
        nb = np.linalg.norm(blk)
        if abs(nb**2 - 1.0 / g) > max(np.sqrt(tol), 100 * tol):
            return None, np.inf
        fs.append(_phase_normalize(blk / nb))
    worst = 0.0
    images = {}
    for alpha in range(1, gp + 1):
        for s in range(1, g + 1):
            for u in range(1, g + 1):
                vec = psi.coeff(alpha, s) @ fs[u - 1]
                if s != u:
                    worst = max(worst, np.linalg.norm(vec))
                else:
                    images[(alpha, u)] = vec
    for (alpha, u), x in images.items():
        for (beta, v), y in images.items():
            want = 1.0 if alpha == beta else 0.0
            worst = max(worst, abs(np.vdot(y, x) - want))
    if worst > max(np.sqrt(tol), 100 * tol):
        return None, worst
    return fs, worst


def certify_complete_isometry(
    psi: LinearMatrixMap, tol: float = 1e-8, trials: int = 32, seed: int = 0
):
    """Certificate psi(Y) = V [Y (+) phi(Y)] U*, or a staged rejection.

    Stages: "shape" (d < g or d' < g'), "norm" (the distinguished test point
    does not reach norm sqrt(g g')), "coupling" (no maximizing vector yields
    f-vectors satisfying the coupling relations; degenerate top singular
    subspaces are searched over `trials` unit combinations), "offdiag"
    (transformed coefficients are not block diagonal).
    """
    gp, g = psi.grid
    dp, d = psi.shape
    if d < g or dp < gp:
        return CertificationRejection("shape", 0.0, f"needs d >= g and d' >= g', got {psi.shape} vs {psi.grid}")
    test_point = np.zeros((gp * dp, g * d), dtype=complex)
    for j in range(gp):
        for l in range(g):
            e = np.zeros((gp, g))
            e[j, l] = 1.0
            test_point += np.kron(e, psi.coeffs[j][l])
    uu, ss, vv = np.linalg.svd(test_point)
    target = g * gp
    if ss[0] ** 2 < target - max(np.sqrt(tol), 100 * tol) * max(1.0, target):
        return CertificationRejection(
            "norm", float(target - ss[0] ** 2), f"max singular value^2 = {ss[0]**2:.12f} < g g' = {target}"
        )
    mult = int(np.sum(ss >= ss[0] * (1 - 10 * tol)))
    rng = rng_for(seed, "isometry.certify")
    candidates = [vv[k].conj() for k in range(mult)]
    for _ in range(max(0, trials - mult)):
        if mult == 1:
            break
        c = rng.standard_normal(mult) + 1j * rng.standard_normal(mult)
        c /= np.linalg.norm(c)
        candidates.append(sum(ci * vv[k].conj() for k, ci in enumerate(c)))
    fs = None
    worst = np.inf
    for cand in candidates:
        fs_try, res = _try_f_vectors(psi, cand, tol)
        worst = min(worst, res)
        if fs_try is not None:
            fs = fs_try
            break
    if fs is None:
        stage = "coupling" if mult == 1 else "coupling-degenerate"
        return CertificationRejection(stage, float(worst), f"top multiplicity {mult}, best coupling residual {worst:.3e}")
    f_mat = np.column_stack(fs)
    hs = []
    for alpha in range(1, gp + 1):
        h = np.mean([psi.coeff(alpha, u) @ fs[u - 1] for u in range(1, g + 1)], axis=0)
        hs.append(h / np.linalg.norm(h))
    h_mat = np.column_stack(hs)
    ortho_f = opnorm(f_mat.conj().T @ f_mat - np.eye(g))
    ortho_h = opnorm(h_mat.conj().T @ h_mat - np.eye(gp))
    if max(ortho_f, ortho_h) > 1e-9:
        return CertificationRejection("coupling", float(max(ortho_f, ortho_h)), "f/h vectors not orthonormal")
    u_full = unitary_completion(orthonormalize(f_mat))
    v_full = unitary_completion(orthonormalize(h_mat))
    off = 0.0
    corner = [[None] * g for _ in range(gp)]
    recon = 0.0
    for j in range(gp):
        for l in range(g):
            t = v_full.conj().T @ psi.coeffs[j][l] @ u_full
            e = np.zeros((gp, g))
            e[j, l] = 1.0
            recon = max(recon, opnorm(t[:gp, :g] - e))
            off = max(off, opnorm(t[:gp, g:]), opnorm(t[gp:, :g]))
            corner[j][l] = t[gp:, g:]
    if max(off, recon) > tol:
        return CertificationRejection(
            "offdiag", float(max(off, recon)), f"off-diagonal block norm {off:.3e}, x-block residual {recon:.3e}"
        )
    phi = LinearMatrixMap(psi.grid, corner)
    cert = CompleteIsometryCertificate(
        u=u_full, v=v_full, phi=phi, f_vectors=f_mat, h_vectors=h_mat, residual=0.0
    )
    cert.residual = verify_certificate(psi, cert, samples=0)["residual"]
    if cert.residual > tol:
        return CertificationRejection("offdiag", float(cert.residual), "reconstruction residual above tolerance")
    return cert


def verify_certificate(psi: LinearMatrixMap, cert: CompleteIsometryCertificate, samples: int = 40, seed: int = 0) -> dict:
    """Coefficient-wise replay of the certificate plus a sampled check of phi."""
    recon = cert.reconstruction(psi.grid)
    residual = 0.0
    gp, g = psi.grid
    for j in range(gp):
        for l in range(g):
            residual += opnorm(psi.coeffs[j][l] - recon.coeffs[j][l])
    out = {"residual": float(residual), "pass": bool(residual <= 1e-8)}
    if samples and not cert.phi.is_empty():
        cc = sample_complete_contractivity(cert.phi, samples=samples, seed=seed)
        out["phi_max_ratio"] = cc["max_ratio"]
        out["pass"] = bool(out["pass"] and cc["max_ratio"] <= 1.0 + 1e-7)
    return out


def build_block_diagonal_map(grid, u0, v0, phi_coeffs=None) -> LinearMatrixMap:
    """psi(Y) = V0 [Y (+) phi(Y)] U0* from unitaries and corner coefficients."""
    gp, g = grid
    dp, d = v0.shape[0], u0.shape[0]
    rows = []
    for j in range(gp):
        row = []
        for l in range(g):
            inner = np.zeros((dp, d), dtype=complex)
            inner[j, l] = 1.0
            if phi_coeffs is not None:
                inner[gp:, g:] = phi_coeffs[j][l]
            row.append(v0 @ inner @ u0.conj().T)
        rows.append(row)
    return LinearMatrixMap(grid, rows)


def random_complete_isometry(rng, grid, shape):
    """Seeded psi = V0 [Y (+) C Y D] U0* with contractions C, D (cc corner)."""
    gp, g = grid
    dp, d = shape
    if d < g or dp < gp:
        raise ValueError("need d >= g and d' >= g'")
    from .sampling import random_unitary

    u0 = random_unitary(rng, d)
    v0 = random_unitary(rng, dp)
    phi = None
    if dp > gp and d > g:
        c = random_contraction(rng, dp - gp, gp, norm=float(rng.uniform(0.2, 1.0)))
        dd = random_contraction(rng, g, d - g, norm=float(rng.uniform(0.2, 1.0)))
        phi = [[c @ _unit(gp, g, j, l) @ dd for l in range(g)] for j in range(gp)]
    return build_block_diagonal_map(grid, u0, v0, phi), u0, v0


def _unit(rows, cols, j, l):
    e = np.zeros((rows, cols))
    e[j, l] = 1.0
    return e


def delta_map() -> LinearMatrixMap:
    """The C^{2x2} -> C map A_{jl} = delta_j^l: block transpose I_2, not cc."""
    return LinearMatrixMap((2, 2), [[np.array([[1.0]]), np.array([[0.0]])], [np.array([[0.0]]), np.array([[1.0]])]])
