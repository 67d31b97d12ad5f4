import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockqd.errors import Breakdown, DimensionError
from blockqd.lattice import (
    TodaIIState,
    TodaIState,
    check_compatibility,
    toda1_residual,
    toda1_state_from_moments,
    toda1_step,
    toda2_state_from_moments,
    toda2_step,
)
from blockqd.moments import DiscreteMeasure, MomentTable
from blockqd.verify import conditioned_table
from helpers import lower_dense

seeds = st.integers(0, 2**32 - 1)


def _flat(blocks):
    return np.concatenate([np.ravel(b) for b in blocks])


def toda2_gap(a: TodaIIState, b: TodaIIState) -> float:
    fa = _flat(list(a.q) + [x for layer in a.e for x in layer])
    fb = _flat(list(b.q) + [x for layer in b.e for x in layer])
    return float(np.linalg.norm(fa - fb) / np.linalg.norm(fb))


def toda1_gap(a: TodaIState, b: TodaIState) -> float:
    fa = _flat([x for layer in a.omega for x in layer] + list(a.eps))
    fb = _flat([x for layer in b.omega for x in layer] + list(b.eps))
    return float(np.linalg.norm(fa - fb) / np.linalg.norm(fb))


class TestTodaII:
    def test_zero_e_is_fixed(self):
        s = TodaIIState(2, ([[2.0]], [[3.0]]), (([[0.0]],), ([[0.0]],)))
        nxt = toda2_step(s)
        assert [b[0, 0] for b in nxt.q] == [2.0, 3.0]
        assert nxt.alpha == 1

    def test_scalar_hand_step(self):
        # q1' = 3 + 2 = 5; e1' = 1 * 2 / 5 = 0.4; q2' = 1 - 0.4 = 0.6
        s = TodaIIState(1, ([[3.0]], [[1.0]]), (([[2.0]],),))
        nxt = toda2_step(s)
        assert [b[0, 0] for b in nxt.q] == pytest.approx([5.0, 0.6])
        assert nxt.e[0][0][0, 0] == pytest.approx(0.4)

    def test_scalar_step_is_lr_similarity(self):
        s = TodaIIState(1, ([[3.0]], [[1.0]]), (([[2.0]],),))
        j = s.assemble().to_dense()
        l0 = lower_dense([np.array([[2.0]])], 2, 1)
        assert np.allclose(toda2_step(s).assemble().to_dense(), np.linalg.solve(l0, j @ l0))

    def test_two_node_shift(self, two_node_table):
        s = toda2_state_from_moments(2, 0, two_node_table)
        assert toda2_gap(toda2_step(s), toda2_state_from_moments(2, 1, two_node_table)) <= 1e-14

    @pytest.mark.parametrize("theta", [1, 2, 3])
    @pytest.mark.parametrize("p", [1, 2])
    def test_three_consecutive_moment_steps(self, p, theta):
        n = 3
        t = conditioned_table(np.random.default_rng(theta * 11 + p), n, p, theta, n, range(theta + 4))
        s = toda2_state_from_moments(n, 0, t)
        for a in range(1, 4):
            s = toda2_step(s)
            assert s.alpha == a
            assert toda2_gap(s, toda2_state_from_moments(n, a, t)) <= 1e-10

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 2), st.integers(1, 3), st.integers(1, 4), st.integers(0, 2), seeds)
    def test_moment_step_property(self, p, theta, n, alpha, seed):
        t = conditioned_table(np.random.default_rng(seed), n, p, theta, n, range(alpha, alpha + theta + 2))
        s = toda2_state_from_moments(n, alpha, t)
        assert toda2_gap(toda2_step(s), toda2_state_from_moments(n, alpha + 1, t)) <= 1e-10

    def test_step_is_similarity_for_random_blocks(self):
        rng = np.random.default_rng(0)
        n, p, theta = 4, 2, 2
        q = [rng.standard_normal((p, p)) + 4 * np.eye(p) for _ in range(n)]
        e = [[rng.standard_normal((p, p)) for _ in range(n - 1)] for _ in range(theta)]
        s = TodaIIState(theta, q, e)
        j0, j1 = s.assemble().to_dense(), toda2_step(s).assemble().to_dense()
        l0 = lower_dense(e[0], n, p)
        assert np.allclose(j1, np.linalg.solve(l0, j0 @ l0), atol=1e-12 * np.linalg.norm(j0))
        assert np.trace(j1) == pytest.approx(np.trace(j0), rel=1e-13)

    def test_breakdown(self):
        s = TodaIIState(1, ([[-1.0]], [[1.0]]), (([[1.0]],),))
        with pytest.raises(Breakdown) as err:
            toda2_step(s)
        assert err.value.index == 1 and err.value.layer is None

    def test_dimension_checks(self):
        with pytest.raises(DimensionError):
            TodaIIState(2, ([[1.0]], [[1.0]]), (([[1.0]],),))
        with pytest.raises(DimensionError):
            TodaIIState(1, ([[1.0]], [[1.0]]), (([[1.0]], [[1.0]]),))
        with pytest.raises(DimensionError):
            TodaIIState(1, (np.eye(2), np.eye(3)), ((np.eye(2),),))


class TestTodaI:
    def test_zero_eps_shifts_omega_layers(self):
        w = [[[[1.0]], [[2.0]]], [[[3.0]], [[4.0]]]]
        s = TodaIState(2, w, ([[0.0]],))
        nxt = toda1_step(s)
        assert [b[0, 0] for b in nxt.omega[0]] == [3.0, 4.0]
        assert [b[0, 0] for b in nxt.omega[1]] == [1.0, 2.0]
        assert nxt.eps[0][0, 0] == 0.0

    @pytest.mark.parametrize("theta", [1, 2, 3])
    @pytest.mark.parametrize("p", [1, 2])
    def test_moment_steps(self, p, theta):
        n = 3
        t = conditioned_table(np.random.default_rng(theta * 5 + p), n, p, theta, n, range(theta + 4))
        w = toda1_state_from_moments(n, 0, t)
        for a in range(1, 3):
            nxt = toda1_step(w)
            assert toda1_gap(nxt, toda1_state_from_moments(n, a, t)) <= 1e-10
            assert toda1_residual(w, nxt) <= 1e-12 * max(1.0, max(np.linalg.norm(b) for b in w.omega[0]) ** 2)
            w = nxt

    def test_layer_count(self):
        with pytest.raises(DimensionError):
            TodaIState(2, [[[[1.0]]]], ())


class TestCompatibility:
    def test_scalar(self):
        s = TodaIIState(1, ([[3.0]], [[1.0]]), (([[2.0]],),))
        assert check_compatibility(s) <= 1e-15

    def test_zero_e(self):
        s = TodaIIState(2, (np.eye(2), 2 * np.eye(2)), ((np.zeros((2, 2)),), (np.zeros((2, 2)),)))
        assert check_compatibility(s) == 0.0

    def test_first_example(self, example1):
        s = example1.state().lattice
        scale = np.linalg.norm(s.assemble().to_dense())
        assert check_compatibility(s) <= 1e-9 * scale

    def test_moment_derived(self):
        t = MomentTable(DiscreteMeasure([-1.5, 0.5, 1.0], [1.0, 2.0, 1.0]), 2)
        s = toda2_state_from_moments(3, 0, t)
        assert check_compatibility(s) <= 1e-12
