import numpy as np
import pytest

from ncball.balls import (
    BallVerdict,
    LinearPencil,
    MonicPencil,
    classify_ball,
    embed_nilpotent,
    lmi_embed_check,
    pencil_ball_membership,
    pencil_eval,
)
from ncball.ncpoly import MatrixTuple, eval_poly
from ncball.sampling import ginibre, random_tuple, random_unitary

A11 = np.array([[1.0, 2.0], [3.0, 4.0]])
A21 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def section_141_pencil():
    return LinearPencil((2, 1), [[A11], [A21]])


class TestClassify:
    def test_zero_interior(self):
        v = classify_ball(MatrixTuple.zero((2, 2), 3))
        assert v.status == "interior" and v.norm == 0.0

    def test_unitary_boundary(self):
        rng = np.random.default_rng(0)
        u = random_unitary(rng, 4)
        v = classify_ball(MatrixTuple((1, 1), [[u]]))
        assert v.status == "boundary" and v.norm == pytest.approx(1.0, abs=1e-12)

    def test_scaled_ginibre_interior(self):
        rng = np.random.default_rng(1)
        x = random_tuple((2, 3), 4, rng, norm=0.9)
        v = classify_ball(x)
        # oracle: largest singular value of the flattened block matrix
        assert v.norm == pytest.approx(np.linalg.svd(x.flatten(), compute_uv=False)[0])
        assert v.status == "interior"

    def test_scale_consistency(self):
        rng = np.random.default_rng(2)
        x = random_tuple((2, 2), 3, rng, norm=1.0)
        norms = [classify_ball(x.scale(c)).norm for c in (0.2, 0.5, 0.8, 0.99)]
        assert all(classify_ball(x.scale(c)).status == "interior" for c in (0.2, 0.5, 0.8))
        assert norms == sorted(norms)


class TestPencilEval:
    def test_displayed_2x2_pencil(self):
        l = section_141_pencil()
        x11, x21 = 0.37, -1.21
        x = MatrixTuple((2, 1), [[np.array([[x11]])], [np.array([[x21]])]])
        got = pencil_eval(l, x)
        want = np.array(
            [[x11, 2 * x11 + x21], [3 * x11 - x21, 4 * x11]], dtype=complex
        )
        assert np.allclose(got, want, atol=1e-14)

    def test_elementary_pencil_flattens(self):
        rng = np.random.default_rng(3)
        x = random_tuple((2, 3), 2, rng)
        l = LinearPencil.elementary((2, 3))
        assert np.allclose(pencil_eval(l, x), x.flatten())

    def test_matches_degree_one_poly(self):
        rng = np.random.default_rng(4)
        l = LinearPencil((2, 2), [[ginibre(rng, 2, 3) for _ in range(2)] for _ in range(2)])
        x = random_tuple((2, 2), 3, rng)
        assert np.allclose(pencil_eval(l, x), eval_poly(l.as_poly(), x), atol=1e-13)

    def test_linearity(self):
        rng = np.random.default_rng(5)
        l = LinearPencil((2, 1), [[ginibre(rng, 2, 2)], [ginibre(rng, 2, 2)]])
        x = random_tuple((2, 1), 3, rng)
        y = random_tuple((2, 1), 3, rng)
        a, b = 0.7 - 0.2j, -1.1 + 0.4j
        comb = MatrixTuple(
            (2, 1),
            [[a * np.array(x.entries[j][0]) + b * np.array(y.entries[j][0])] for j in range(2)],
        )
        lhs = pencil_eval(l, comb)
        rhs = a * pencil_eval(l, x) + b * pencil_eval(l, y)
        assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(1.0, np.linalg.norm(rhs))


class TestMembership:
    def test_elementary_mirrors_classify(self):
        rng = np.random.default_rng(6)
        l = LinearPencil.elementary((2, 2))
        for norm in (0.3, 1.0, 1.7):
            x = random_tuple((2, 2), 2, rng, norm=norm)
            assert pencil_ball_membership(l, x).status == classify_ball(x).status

    def test_displayed_pencil_at_unit_point(self):
        l = section_141_pencil()
        x = MatrixTuple((2, 1), [[np.array([[1.0]])], [np.array([[0.0]])]])
        v = pencil_ball_membership(l, x)
        want = np.linalg.norm(A11, 2)  # oracle: singular values of A11
        assert v.norm == pytest.approx(want, rel=1e-12)
        assert v.status == "outside"

    def test_zero_pencil_always_interior(self):
        rng = np.random.default_rng(7)
        l = LinearPencil.zero((2, 2), (3, 3))
        x = random_tuple((2, 2), 2, rng, norm=25.0)
        assert pencil_ball_membership(l, x).status == "interior"


class TestLmiEmbed:
    def test_zero_point(self):
        l = LinearPencil((2, 1), [[np.eye(2)], [A21]])
        x = MatrixTuple.zero((2, 1), 3)
        r = lmi_embed_check(l, x)
        monic = MonicPencil(l)
        assert np.array_equal(monic.eval(embed_nilpotent(x)), np.eye(12))
        assert r["lmi_min_eig"] == pytest.approx(1.0)
        assert r["pencil_norm"] == 0.0
        assert r["ball_status"] == "interior" and r["lmi_member"] and r["agree"]

    @pytest.mark.parametrize("target,expect_min", [(1.0, 0.0), (1.5, -0.5)])
    def test_spectral_identity(self, target, expect_min):
        # oracle: eigenvalues of [[I, C], [C*, I]] are 1 +- sigma_i(C)
        rng = np.random.default_rng(8)
        l = LinearPencil((2, 2), [[ginibre(rng, 3, 3) for _ in range(2)] for _ in range(2)])
        x = random_tuple((2, 2), 2, rng)
        x = x.scale(target / np.linalg.norm(pencil_eval(l, x), 2))
        r = lmi_embed_check(l, x)
        assert r["lmi_min_eig"] == pytest.approx(expect_min, abs=1e-9)
        assert r["agree"]

    def test_agreement_on_seeded_instances(self):
        rng = np.random.default_rng(9)
        agree = 0
        for _ in range(200):
            d = int(rng.integers(1, 5))
            n = int(rng.integers(1, 5))
            gp, g = int(rng.integers(1, 3)), int(rng.integers(1, 3))
            l = LinearPencil(
                (gp, g), [[ginibre(rng, d, d) for _ in range(g)] for _ in range(gp)]
            )
            x = random_tuple((gp, g), n, rng, norm=float(rng.uniform(0.2, 2.0)))
            r = lmi_embed_check(l, x)
            agree += r["agree"]
        assert agree == 200

    def test_rejects_rectangular(self):
        l = LinearPencil((1, 1), [[np.ones((2, 3))]])
        with pytest.raises(ValueError, match="square"):
            lmi_embed_check(l, MatrixTuple.zero((1, 1), 1))


def test_verdict_consistency():
    assert BallVerdict.from_norm(0.5).status == "interior"
    assert BallVerdict.from_norm(1.0 + 5e-10).status == "boundary"
    assert BallVerdict.from_norm(1.1).status == "outside"
