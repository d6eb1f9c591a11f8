import numpy as np
import pytest
from scipy import sparse

from ncball.fock import (
    BigX,
    build_bigx,
    build_fock,
    build_shifts,
    check_bigx_identities,
    truncated_dilation,
    unique_s_polynomial_test,
    unique_s_series_test,
)
from ncball.ncpoly import (
    Letter,
    MatrixTuple,
    NCPolynomial,
    TruncatedSeries,
    Word,
    eval_poly,
    nilpotency_witness,
)
from ncball.sampling import ginibre, random_column_contraction


def word(grid_letters):
    return Word(tuple(Letter(j, l) for j, l in grid_letters))


class TestFockSpace:
    def test_dimension_formula(self):
        # oracle: 1 + 2 + 4 + 8
        assert build_fock(2, 3).dim == 15
        assert build_fock(3, 2).dim == 13

    def test_degenerate_n0(self):
        f = build_fock(2, 0)
        assert f.dim == 1
        s = build_shifts(f)
        assert s[1].nnz == 0 and s[2].nnz == 0

    def test_shift_inner_products(self):
        # <S_j u, S_l v> = delta_jl <u, v> exactly below the cut
        f = build_fock(2, 3)
        s = build_shifts(f)
        q = f.top_complement()
        for j in (1, 2):
            for l in (1, 2):
                got = s[j].T @ s[l]
                want = q if j == l else sparse.csr_matrix(q.shape, dtype=np.int64)
                assert (got - want).nnz == 0


class TestModelIdentities:
    def test_smallest_case_explicit(self):
        bigx = build_bigx(1, 1, 1)
        assert bigx.level == 4
        r = check_bigx_identities(bigx)
        assert r["pass"]

    @pytest.mark.parametrize("gp,g", [(1, 2), (2, 1), (2, 2), (3, 2)])
    def test_rank_at_n1(self, gp, g):
        bigx = build_bigx(gp, g, 1)
        xtx = (bigx.flat().T @ bigx.flat()).toarray()
        pn = bigx.left.empty_complement().toarray()
        qn = bigx.right.top_complement().toarray()
        want = np.kron(np.eye(g, dtype=np.int64), np.kron(pn, qn))
        assert np.array_equal(xtx, want)
        assert np.linalg.matrix_rank(xtx) == np.linalg.matrix_rank(want)

    @pytest.mark.parametrize("gp,g,n", [(2, 1, 2), (2, 2, 2), (1, 3, 2)])
    def test_exact_identities(self, gp, g, n):
        assert check_bigx_identities(build_bigx(gp, g, n))["pass"]

    def test_nilpotency_on_dense_tuple(self):
        bigx = build_bigx(2, 2, 2)
        x = bigx.as_tuple()
        assert nilpotency_witness(x, 3) is None
        assert nilpotency_witness(x, 2) is not None  # order is exactly n+1


class TestUniquePolynomialTest:
    def test_zero_polynomial_passes(self):
        p = NCPolynomial.zero((1, 1))
        r = unique_s_polynomial_test(p, 2)
        assert r["zero"] and r["witness"] is None

    def test_single_letter_fails_at_n1(self):
        p = NCPolynomial.letter((1, 1), 1)
        r = unique_s_polynomial_test(p, 1)
        assert not r["zero"]
        assert r["witness"]["n"] == 1
        # oracle: I - 2 X1* X1 on the 4-dim model has eigenvalue -1
        assert r["witness"]["eigenvalue"] == pytest.approx(-1.0, abs=1e-12)

    def test_small_coefficient_still_fails(self):
        xm = NCPolynomial.letter((1, 1), 1)
        p = (xm * xm).scale(2e-3)
        r = unique_s_polynomial_test(p, 2)
        assert not r["zero"]
        assert r["witness"]["n"] == 2
        assert r["witness"]["eigenvalue"] <= -1e-6

    def test_rejects_constant_term(self):
        p = NCPolynomial.constant((1, 1), [[1.0]]) + NCPolynomial.letter((1, 1), 1)
        with pytest.raises(ValueError, match="p\\(0\\)"):
            unique_s_polynomial_test(p, 1)

    def test_seeded_nonzero_polynomials_all_witnessed(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            gp = int(rng.integers(1, 3))
            g = int(rng.integers(1, 3))
            dp = int(rng.integers(1, 3))
            deg = int(rng.integers(1, 4))
            terms = {}
            for _ in range(int(rng.integers(1, 4))):
                k = int(rng.integers(1, deg + 1))
                w = word(
                    [(int(rng.integers(1, gp + 1)), int(rng.integers(1, g + 1))) for _ in range(k)]
                )
                terms[w] = ginibre(rng, dp, g)
            p = NCPolynomial((gp, g), (dp, g), terms)
            if p.is_zero():
                continue
            r = unique_s_polynomial_test(p, p.degree())
            assert not r["zero"]
            assert r["witness"]["eigenvalue"] <= -1e-6


class TestUniqueSeriesTest:
    def test_zero_series(self):
        h = TruncatedSeries.zero((2, 1), (1, 1), 2)
        assert unique_s_series_test(h, 2)["zero"]

    def test_square_letter_norm_one(self):
        xm = NCPolynomial.letter((1, 1), 1)
        h = TruncatedSeries.from_poly(xm * xm)
        r = unique_s_series_test(h, 2)
        assert not r["zero"]
        # oracle: explicit product of the shift tensors at n = 2
        bigx = build_bigx(1, 1, 2)
        m = bigx.sparse_entries[0][0].toarray()
        assert r["norms"][1] == pytest.approx(np.linalg.norm(m @ m, 2))
        assert r["norms"][1] == pytest.approx(1.0, abs=1e-12)

    def test_random_degree3_detected(self):
        rng = np.random.default_rng(5)
        terms = {
            word([(1, 1), (2, 1), (1, 1)]): np.array([[0.3]]),
            word([(2, 1)]): np.array([[-0.7]]),
        }
        h = TruncatedSeries.from_poly(NCPolynomial((2, 1), (1, 1), terms), degree=3)
        assert not unique_s_series_test(h, 3)["zero"]


class TestTruncatedDilation:
    def test_zero_tuple_exact_isometry(self):
        x = MatrixTuple.zero((2, 1), 3)
        v, r = truncated_dilation(x, 4)
        assert r["isometry_defect"] <= 1e-14
        assert r["intertwining_full"] <= 1e-14
        assert np.allclose(v[: 3 * build_fock(2, 4).dim : build_fock(2, 4).dim], np.eye(3))

    def test_scalar_geometric_defect(self):
        x = MatrixTuple((1, 1), [[np.array([[0.5]])]])
        _, r = truncated_dilation(x, 20)
        # oracle: finite geometric sum 1 - sum_{k<=20} 0.75 * 0.25^k = 0.25^21
        want = 1.0 - sum(0.75 * 0.25**k for k in range(21))
        assert want == pytest.approx(0.25**21, rel=1e-12)
        assert r["isometry_defect"] == pytest.approx(want, rel=1e-6)

    def test_intertwining_exact_on_retained_levels(self):
        rng = np.random.default_rng(6)
        x = random_column_contraction((2, 1), 3, rng, norm=0.8)
        _, r = truncated_dilation(x, 6)
        assert r["intertwining_retained"] <= 1e-12
        assert r["intertwining_full"] > r["intertwining_retained"]

    def test_defect_monotone_in_cutoff(self):
        rng = np.random.default_rng(7)
        x = random_column_contraction((2, 1), 2, rng, norm=0.75)
        defects = [truncated_dilation(x, m)[1]["isometry_defect"] for m in (4, 6, 8, 10, 12)]
        assert all(a >= b for a, b in zip(defects, defects[1:]))
        assert defects[-1] <= 1e-6

    def test_rejects_non_strict(self):
        x = MatrixTuple((1, 1), [[np.array([[1.0]])]])
        with pytest.raises(ValueError, match="strict"):
            truncated_dilation(x, 3)
