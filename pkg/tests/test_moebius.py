import numpy as np
import pytest

from ncball.moebius import (
    MoebiusParams,
    isometric_rank,
    moebius_apply,
    moebius_compose_series,
    verification_suite,
    verify_involution,
    verify_rank_preservation,
)
from ncball.ncpoly import (
    Letter,
    MatrixTuple,
    NCPolynomial,
    TruncatedSeries,
    Word,
    eval_nilpotent,
    series_eval,
)
from ncball.sampling import ginibre, random_contraction, random_unitary


class TestPointwise:
    def test_swaps_zero_and_v(self):
        rng = np.random.default_rng(0)
        v = random_contraction(rng, 2, 3, norm=0.6)
        params = MoebiusParams(v)
        assert np.allclose(moebius_apply(params, np.zeros((2, 3))), v, atol=1e-12)
        assert np.linalg.norm(moebius_apply(params, v)) <= 1e-12

    def test_v_zero_is_negation(self):
        rng = np.random.default_rng(1)
        params = MoebiusParams(np.zeros((2, 2)))
        u = random_contraction(rng, 4, 4, norm=0.8)
        assert np.allclose(moebius_apply(params, u), -u, atol=1e-14)

    def test_scalar_value(self):
        # oracle: scalar form (v - u) / (1 - u conj(v))
        params = MoebiusParams([[0.5]])
        got = moebius_apply(params, [[0.25]])[0, 0]
        assert got == pytest.approx((0.5 - 0.25) / (1 - 0.25 * 0.5), abs=1e-15)
        assert got == pytest.approx(2.0 / 7.0, abs=1e-15)

    def test_rejects_large_v(self):
        with pytest.raises(ValueError, match="< 1"):
            MoebiusParams(np.eye(2))


class TestInvolution:
    def test_zero_and_v_roundtrip(self):
        rng = np.random.default_rng(2)
        v = random_contraction(rng, 2, 2, norm=0.7)
        params = MoebiusParams(v)
        assert verify_involution(params, np.zeros((2, 2)))["pass"]
        assert verify_involution(params, v)["pass"]

    def test_random_contraction(self):
        rng = np.random.default_rng(3)
        v = random_contraction(rng, 2, 2, norm=0.7)
        params = MoebiusParams(v)
        u = random_contraction(rng, 6, 6, norm=1.0)
        r = verify_involution(params, u)
        assert r["residual"] <= 1e-10


class TestRank:
    def test_unitary_full_rank_preserved(self):
        rng = np.random.default_rng(4)
        params = MoebiusParams(random_contraction(rng, 2, 2, norm=0.5))
        u = np.kron(np.eye(2), random_unitary(rng, 3))  # block-diagonal unitary
        assert isometric_rank(u) == 6
        assert verify_rank_preservation(params, u)["pass"]

    def test_partial_isometry_rank_one(self):
        rng = np.random.default_rng(5)
        params = MoebiusParams(random_contraction(rng, 2, 2, norm=0.4))
        u = np.diag([1.0, 0.5, 0.3, 0.2]).astype(complex)
        assert isometric_rank(u) == 1
        r = verify_rank_preservation(params, u)
        assert r["pass"] and r["rank_out"] == 1

    def test_strict_contraction_rank_zero(self):
        rng = np.random.default_rng(6)
        params = MoebiusParams(random_contraction(rng, 2, 2, norm=0.6))
        u = random_contraction(rng, 4, 4, norm=0.9)
        r = verify_rank_preservation(params, u)
        assert r["pass"] and r["rank_in"] == 0


class TestSeries:
    def test_v_zero_negates_series(self):
        rng = np.random.default_rng(7)
        params = MoebiusParams(np.zeros((2, 2)))
        xm = NCPolynomial.letter((1, 1), 1)
        u = TruncatedSeries.from_poly(
            xm.left_mul(0.3 * ginibre(rng, 2, 2)), degree=3
        )
        got = moebius_compose_series(params, u)
        assert got == -u

    def test_scalar_taylor_coefficients(self):
        # oracle: (1/2 - x)(1 - x/2)^(-1) = 1/2 - (3/4) x - (3/8) x^2 - ...
        params = MoebiusParams([[0.5]])
        u = TruncatedSeries.identity((1, 1), degree=3)
        got = moebius_compose_series(params, u, degree=3)
        w = lambda k: Word(tuple(Letter(1, 1) for _ in range(k)))
        assert got.coeff(w(0))[0, 0] == pytest.approx(0.5)
        assert got.coeff(w(1))[0, 0] == pytest.approx(-0.75)
        assert got.coeff(w(2))[0, 0] == pytest.approx(-0.375)
        assert got.coeff(w(3))[0, 0] == pytest.approx(-0.1875)

    def test_centering_kills_constant(self):
        rng = np.random.default_rng(8)
        v = random_contraction(rng, 2, 2, norm=0.6)
        params = MoebiusParams(v)
        xm = NCPolynomial.letter((2, 1), 1) + NCPolynomial.letter((2, 1), 2)
        u = TruncatedSeries.constant((2, 1), v, 3) + TruncatedSeries.from_poly(
            xm.left_mul(0.2 * ginibre(rng, 2, 2)), degree=3
        )
        got = moebius_compose_series(params, u)
        assert np.linalg.norm(got.constant_term()) <= 1e-12

    def test_rejects_boundary_constant(self):
        params = MoebiusParams([[0.9]])
        u = TruncatedSeries.constant((1, 1), [[1.2]], 2)
        with pytest.raises(ValueError, match="Neumann"):
            moebius_compose_series(params, u)

    def test_series_matches_pointwise_on_nilpotents(self):
        rng = np.random.default_rng(9)
        v = random_contraction(rng, 2, 2, norm=0.5)
        params = MoebiusParams(v)
        grid = (1, 1)
        xm = NCPolynomial.letter(grid, 1)
        u = TruncatedSeries.constant(grid, v, 4) + TruncatedSeries.from_poly(
            xm.left_mul(0.3 * ginibre(rng, 2, 2))
            + (xm * xm).left_mul(0.1 * ginibre(rng, 2, 2)),
            degree=4,
        )
        comp = moebius_compose_series(params, u, degree=4)
        x = MatrixTuple(grid, [[np.eye(4, k=1)]])  # nilpotent of order 4
        lhs = eval_nilpotent(comp, x, 4)
        rhs = moebius_apply(params, series_eval(u, x))
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * max(1.0, np.linalg.norm(rhs))


def test_verification_suite_seeded():
    r = verification_suite(samples=60, seed=11)
    assert r["pass"], r
    assert r["ball_excess"] <= 1e-10
    assert r["involution_residual"] <= 1e-9
