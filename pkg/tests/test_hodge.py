import numpy as np
import pytest

from cellflow import (
    CellComplex,
    Skeleton,
    SolverConfig,
    build_b1,
    build_b2,
    canonicalize,
    loss,
    loss_delta,
    project_gradient_out,
    project_harmonic,
    validate_flows,
)
from cellflow.cells import cell_column

from conftest import dense_project, grid_complex, random_small_complex

TIGHT = SolverConfig(atol=1e-12, btol=1e-12)


@pytest.fixture
def five_node():
    sk = Skeleton(5, [(0, 1), (0, 3), (0, 4), (1, 2), (2, 3), (3, 4)])
    cells = (canonicalize(sk, (0, 3, 4)), canonicalize(sk, (0, 1, 2, 3)))
    return CellComplex(sk, cells)


class TestValidateFlows:
    def test_shapes_and_dtype(self):
        out = validate_flows([[1, 2], [3, 4], [5, 6]], 3)
        assert out.shape == (3, 2)
        assert out.dtype == np.float64

    def test_vector_promoted_to_column(self):
        out = validate_flows(np.ones(3), 3)
        assert out.shape == (3, 1)

    def test_wrong_row_count(self):
        with pytest.raises(ValueError):
            validate_flows(np.ones((4, 2)), 3)

    def test_non_finite(self):
        bad = np.ones((3, 2))
        bad[1, 0] = np.nan
        with pytest.raises(ValueError):
            validate_flows(bad, 3)


class TestSolverConfig:
    def test_rejects_bad_tolerances(self):
        with pytest.raises(ValueError):
            SolverConfig(atol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(btol=-1e-9)
        with pytest.raises(ValueError):
            SolverConfig(maxiter_factor=0)

    def test_maxiter_grows_with_shape(self):
        cfg = SolverConfig()
        assert cfg.maxiter((10, 4)) == 10 * 14 + 100


class TestGradientProjection:
    def test_pure_gradient_annihilated(self, five_node, rng):
        b1 = build_b1(five_node.skeleton)
        phi = rng.standard_normal((5, 3))
        grad = (b1.T @ phi).astype(np.float64)
        out = project_gradient_out(b1, grad, TIGHT)
        assert np.linalg.norm(out) <= 1e-6 * np.linalg.norm(grad)

    def test_triangle_circulation_untouched(self):
        sk = Skeleton(3, [(0, 1), (0, 2), (1, 2)])
        # walk 0->1->2->0 : +e(0,1) +e(1,2) -e(0,2)
        circ = np.array([[1.0], [-1.0], [1.0]])
        out = project_gradient_out(build_b1(sk), circ, TIGHT)
        assert np.allclose(out, circ, atol=1e-9)

    def test_matches_dense_pseudoinverse(self, five_node, rng):
        b1 = build_b1(five_node.skeleton)
        f = rng.standard_normal((6, 4))
        expected = f - dense_project(b1.T.toarray(), f)
        out = project_gradient_out(b1, f, TIGHT)
        assert np.linalg.norm(out - expected) <= 1e-8 * np.linalg.norm(f)


class TestHarmonicProjection:
    def test_no_cells_is_identity(self, five_node, rng):
        empty = CellComplex(five_node.skeleton)
        f = rng.standard_normal((6, 3))
        out = project_harmonic(build_b2(empty), f, TIGHT)
        assert np.array_equal(out, f)

    def test_pure_curl_annihilated(self, five_node, rng):
        b2 = build_b2(five_node)
        eta = rng.standard_normal((2, 3))
        curl = (b2 @ eta).astype(np.float64)
        out = project_harmonic(b2, curl, TIGHT)
        assert np.linalg.norm(out) <= 1e-6 * max(np.linalg.norm(curl), 1.0)

    def test_matches_dense_pseudoinverse(self, five_node, rng):
        b1 = build_b1(five_node.skeleton)
        b2 = build_b2(five_node)
        f = rng.standard_normal((6, 4))
        f0 = f - dense_project(b1.T.toarray(), f)
        expected = f0 - dense_project(b2.toarray(), f0)
        out = project_harmonic(b2, project_gradient_out(b1, f, TIGHT), TIGHT)
        assert np.linalg.norm(out - expected) <= 1e-8 * np.linalg.norm(f)

    def test_idempotent(self, five_node, rng):
        b2 = build_b2(five_node)
        f = rng.standard_normal((6, 3))
        once = project_harmonic(b2, f, TIGHT)
        twice = project_harmonic(b2, once, TIGHT)
        assert np.linalg.norm(twice - once) <= 1e-8 * max(np.linalg.norm(once), 1.0)

    def test_output_orthogonal_to_curl_space(self, five_node, rng):
        b2 = build_b2(five_node)
        f = rng.standard_normal((6, 3))
        out = project_harmonic(b2, f, TIGHT)
        y = rng.standard_normal((2, 3))
        assert abs(float(np.sum(out * (b2 @ y)))) <= 1e-7 * np.linalg.norm(f)

    def test_pythagoras(self, five_node, rng):
        b2 = build_b2(five_node)
        f = rng.standard_normal((6, 5))
        harm = project_harmonic(b2, f, TIGHT)
        lhs = np.linalg.norm(f) ** 2
        rhs = np.linalg.norm(f - harm) ** 2 + np.linalg.norm(harm) ** 2
        assert abs(lhs - rhs) <= 1e-6 * lhs


class TestLoss:
    def test_empty_cell_set_is_flow_norm(self, five_node, rng):
        empty = CellComplex(five_node.skeleton)
        f = rng.standard_normal((6, 3))
        assert loss(empty, f, TIGHT) == pytest.approx(np.linalg.norm(f))

    def test_spanned_flows_reach_zero(self, five_node, rng):
        b2 = build_b2(five_node)
        f = (b2 @ rng.standard_normal((2, 4))).astype(np.float64)
        assert loss(five_node, f, TIGHT) <= 1e-6

    def test_bounded_by_flow_norm(self, five_node, rng):
        f = rng.standard_normal((6, 3))
        b1 = build_b1(five_node.skeleton)
        f0 = project_gradient_out(b1, f, TIGHT)
        val = loss(five_node, f0, TIGHT)
        assert 0.0 <= val <= np.linalg.norm(f0) + 1e-12

    def test_grid_complex_matches_dense_oracle(self, rng):
        skeleton, cells = grid_complex()
        cx = CellComplex(skeleton, cells)
        b1 = build_b1(skeleton)
        b2 = build_b2(cx)
        f = rng.standard_normal((skeleton.edge_count, 4))
        f0 = f - dense_project(b1.T.toarray(), f)
        expected = np.linalg.norm(f0 - dense_project(b2.toarray(), f0))
        got = loss(cx, project_gradient_out(b1, f, TIGHT), TIGHT)
        assert got == pytest.approx(expected, rel=1e-8, abs=1e-10)


class TestLossDelta:
    def test_redundant_column_changes_nothing(self, five_node, rng):
        b2 = build_b2(five_node)
        b1 = build_b1(five_node.skeleton)
        f = project_gradient_out(b1, rng.standard_normal((6, 3)), TIGHT)
        residual = project_harmonic(b2, f, TIGHT)
        existing = five_node.cells[0]
        before = np.linalg.norm(residual)
        assert loss_delta(b2, residual, existing, TIGHT) == pytest.approx(
            before, abs=1e-9
        )

    def test_candidate_matching_residual_reaches_zero(self, five_node):
        sk = five_node.skeleton
        cand = five_node.cells[0]
        col = cell_column(cand, sk.edge_count).toarray().astype(np.float64)
        empty_b2 = build_b2(CellComplex(sk))
        assert loss_delta(empty_b2, 2.5 * col, cand, TIGHT) <= 1e-9

    def test_equals_full_recomputation_on_grid(self, rng):
        # five fresh candidates scored incrementally must agree with
        # rebuilding the whole complex per candidate
        skeleton, cells = grid_complex()
        cx = CellComplex(skeleton, cells[:1])
        b1 = build_b1(skeleton)
        b2 = build_b2(cx)
        f0 = project_gradient_out(b1, rng.standard_normal((skeleton.edge_count, 3)), TIGHT)
        residual = project_harmonic(b2, f0, TIGHT)

        candidates = [cells[1], cells[2]]
        # unit squares make three more candidates
        for c0 in (0, 1, 2):
            walk = (c0, c0 + 1, c0 + 6, c0 + 5)
            candidates.append(canonicalize(skeleton, walk))
        for cand in candidates:
            fast = loss_delta(b2, residual, cand, TIGHT)
            full = loss(cx.with_cell(cand), f0, TIGHT)
            assert fast == pytest.approx(full, rel=1e-8, abs=1e-10)

    def test_never_increases_loss(self, rng):
        for _ in range(10):
            cx = random_small_complex(rng)
            sk = cx.skeleton
            import networkx as nx

            g = nx.Graph(list(sk.edges))
            basis = nx.cycle_basis(g)
            if not basis:
                continue
            b1 = build_b1(sk)
            b2 = build_b2(cx)
            f0 = project_gradient_out(b1, rng.standard_normal((sk.edge_count, 3)), TIGHT)
            residual = project_harmonic(b2, f0, TIGHT)
            before = np.linalg.norm(residual)
            cand = canonicalize(sk, tuple(basis[0]))
            assert loss_delta(b2, residual, cand, TIGHT) <= before + 1e-8


class TestRandomDenseAgreement:
    def test_small_complexes_match_dense_oracle(self, rng):
        for _ in range(15):
            cx = random_small_complex(rng)
            sk = cx.skeleton
            b1 = build_b1(sk)
            b2 = build_b2(cx)
            f = rng.standard_normal((sk.edge_count, 3))
            f0_exp = f - dense_project(b1.T.toarray(), f)
            harm_exp = f0_exp - dense_project(b2.toarray(), f0_exp)
            f0 = project_gradient_out(b1, f, TIGHT)
            harm = project_harmonic(b2, f0, TIGHT)
            scale = max(np.linalg.norm(f), 1.0)
            assert np.linalg.norm(f0 - f0_exp) <= 1e-8 * scale
            assert np.linalg.norm(harm - harm_exp) <= 1e-8 * scale
