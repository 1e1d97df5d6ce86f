from fractions import Fraction

import numpy as np
import pytest

from patchgrowth import (
    Constant,
    ModelError,
    ModelParameters,
    PatchModel,
    PiecewiseMatrixPath,
    Smooth,
    average,
    bind,
    merge_breakpoints,
)
from patchgrowth.pathmodel import is_time_independent


def step_path():
    return PiecewiseMatrixPath([0, Fraction(1, 3)], [np.diag([1.0, -1.0]), np.diag([-2.0, 0.5])])


class TestPath:
    def test_exact_breakpoints(self):
        P = step_path()
        assert P.breakpoints == (Fraction(0), Fraction(1, 3))
        assert P.lengths() == [Fraction(1, 3), Fraction(2, 3)]

    def test_right_continuity_and_left_limit(self):
        P = step_path()
        assert P(1 / 3)[0, 0] == -2.0
        assert P.left_limit(1 / 3)[0, 0] == 1.0
        assert P.left_limit(0.0)[0, 0] == -2.0  # wraps around
        assert P(1.25)[0, 0] == P(0.25)[0, 0]  # periodic

    def test_average_exact(self):
        assert np.allclose(average(step_path()), np.diag([1 / 3 - 4 / 3, -1 / 3 + 1 / 3]))

    def test_average_smooth_gauss(self):
        P = PiecewiseMatrixPath([0], [Smooth(lambda t: np.array([[np.cos(2 * np.pi * t) ** 2]]))])
        assert average(P)[0, 0] == pytest.approx(0.5, abs=1e-14)

    @pytest.mark.parametrize(
        "bps, segs",
        [
            ([0.1], [np.eye(2)]),
            ([0, 0.5, 0.5], [np.eye(2)] * 3),
            ([0, 1], [np.eye(2)] * 2),
            ([0, 0.5], [np.eye(2), np.eye(3)]),
            ([0, 0.5], [np.eye(2)]),
            ([], []),
        ],
    )
    def test_invalid(self, bps, segs):
        with pytest.raises(ModelError):
            PiecewiseMatrixPath(bps, segs)

    def test_constant_is_read_only(self):
        c = Constant(np.eye(2))
        with pytest.raises(ValueError):
            c.matrix[0, 0] = 5.0


class TestModel:
    def test_rejects_non_diagonal_growth(self):
        with pytest.raises(ModelError):
            PatchModel(PiecewiseMatrixPath([0], [[[0, 1], [0, 0]]]),
                       PiecewiseMatrixPath([0], [np.zeros((2, 2))]))

    def test_rejects_bad_migration(self):
        with pytest.raises(ModelError):
            PatchModel.piecewise_constant([0], [[0, 0]], [[[-1, -1], [1, 1]]])
        with pytest.raises(ModelError):
            PatchModel.piecewise_constant([0], [[0, 0]], [[[-1, 0], [0.5, 0]]])

    def test_rejects_smooth_migration_violating_columns(self):
        bad = Smooth(lambda t: np.array([[-1.0, 0.0], [1.0 + t, 0.0]]))
        with pytest.raises(ModelError):
            PatchModel(PiecewiseMatrixPath([0], [np.zeros((2, 2))]), PiecewiseMatrixPath([0], [bad]))

    def test_merge_breakpoints_union(self):
        g = PiecewiseMatrixPath([0, Fraction(1, 2)], [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
        L = np.array([[-1.0, 1.0], [1.0, -1.0]])
        l = PiecewiseMatrixPath([0, Fraction(1, 3)], [L, 2 * L])
        comb = merge_breakpoints(g, l)
        assert comb.breakpoints == (0, Fraction(1, 3), Fraction(1, 2))
        A = comb.at(2.0)
        assert np.allclose(A(0.4), np.diag([1.0, 0.0]) + 4 * L)
        assert np.allclose(A(0.7), np.diag([0.0, 1.0]) + 4 * L)

    def test_bind_and_means(self):
        model = PatchModel.piecewise_constant([0, Fraction(1, 2)], [[1, -1], [-3, 3]],
                                              [np.zeros((2, 2))] * 2)
        assert np.allclose(model.growth_means(), [-1, 1])
        A = bind(model, ModelParameters(1.0, 1.0))
        assert np.allclose(A(0.1), np.diag([1, -1]))

    def test_shifted(self):
        model = PatchModel.piecewise_constant([0], [[1, 2]], [[[-1, 1], [1, -1]]])
        assert np.allclose(model.shifted(-1).growth_means(), [0, 1])

    def test_time_independent(self):
        L = np.array([[-1.0, 1.0], [1.0, -1.0]])
        assert is_time_independent(PiecewiseMatrixPath([0, 0.5], [L, L.copy()]))
        assert not is_time_independent(PiecewiseMatrixPath([0, 0.5], [L, 2 * L]))

    def test_parameters(self):
        with pytest.raises(ValueError):
            ModelParameters(-1.0, 1.0)
        with pytest.raises(ValueError):
            ModelParameters(1.0, 0.0)
