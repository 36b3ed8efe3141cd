import math

import numpy as np
import pytest
from pydantic import ValidationError

from xorlab.lab import TrialSpec
from xorlab.models import AND_PATTERN, InputRange, ModelName
from xorlab.surfaces import (
    GridAxis,
    Surface,
    boundary_spread,
    class_margin,
    decision_boundary_raster,
    default_input_axes,
    find_local_minima,
    loss_landscape,
    minimum_pattern,
)


@pytest.fixture(scope="module")
def pm1_landscape():
    return loss_landscape(InputRange.PLUS_MINUS_ONE)


@pytest.fixture(scope="module")
def zero_one_landscape():
    return loss_landscape(InputRange.ZERO_ONE)


class TestGridAxis:
    def test_symmetric_axis_is_an_exact_mirror(self):
        values = GridAxis(name="w1", min=-2.0, max=2.0, steps=201).values()
        assert values.tolist() == (-values[::-1]).tolist()
        assert values[100] == 0.0
        assert values[125] == 0.5 and values[150] == 1.0

    def test_rejects_bad_axes(self):
        with pytest.raises(ValidationError):
            GridAxis(name="w1", min=1.0, max=-1.0)
        with pytest.raises(ValidationError):
            GridAxis(name="w1", min=-1.0, max=1.0, steps=1)

    def test_surface_shape_is_checked(self):
        axis = GridAxis(name="x", min=-1.0, max=1.0, steps=3)
        with pytest.raises(ValueError):
            Surface(axis, axis, np.zeros((3, 4)))


class TestLossLandscape:
    def test_pm1_has_exactly_two_zero_cells(self, pm1_landscape):
        w1, w2 = pm1_landscape.mesh()
        zero = pm1_landscape.values == 0.0
        assert zero.sum() == 2
        assert (pm1_landscape.values <= 1e-9).sum() == 2
        assert sorted(zip(w1[zero].tolist(), w2[zero].tolist())) == [(-0.5, 0.5), (0.5, -0.5)]

    def test_pm1_minima_are_the_two_solutions(self, pm1_landscape):
        minima = find_local_minima(pm1_landscape)
        assert sorted((m.x, m.y) for m in minima) == [(-0.5, 0.5), (0.5, -0.5)]
        assert all(m.is_global for m in minima)
        assert all(minimum_pattern(m, InputRange.PLUS_MINUS_ONE) == (0, 1, 1, 0) for m in minima)

    @pytest.mark.parametrize("landscape", ["pm1_landscape", "zero_one_landscape"])
    def test_symmetries_are_exact(self, landscape, request):
        # a = -1 gives |w . x|, so negating both weights changes nothing; swapping them permutes rows
        values = request.getfixturevalue(landscape).values
        assert np.array_equal(values, values[::-1, ::-1])
        assert np.array_equal(values, values.T)

    def test_zero_one_has_and_minima_off_the_solutions(self, zero_one_landscape):
        minima = find_local_minima(zero_one_landscape)
        globals_ = sorted((m.x, m.y) for m in minima if m.is_global)
        assert globals_ == [(-1.0, 1.0), (1.0, -1.0)]
        local = [m for m in minima if not m.is_global]
        quadrants = {(math.copysign(1, m.x), math.copysign(1, m.y)) for m in local}
        assert {(1.0, 1.0), (-1.0, -1.0)} <= quadrants
        for m in local:
            if m.x * m.y > 0:
                assert minimum_pattern(m, InputRange.ZERO_ONE) == AND_PATTERN
                assert m.value > 0.0

    def test_tied_plateau_reports_one_cell(self):
        axis = GridAxis(name="x", min=-1.0, max=1.0, steps=5)
        values = np.ones((5, 5))
        values[2, 1:4] = 0.0
        minima = find_local_minima(Surface(axis, axis, values))
        assert [(m.row, m.col) for m in minima] == [(2, 1)]

    def test_trajectory_overlays(self):
        specs = [
            TrialSpec(
                model=ModelName.PRELU,
                input_range=InputRange.ZERO_ONE,
                lr=0.05,
                epochs=30,
                quadrant=q,
                slope_init=-1.0,
                train_slope=False,
            )
            for q in (2, 4)
        ]
        axis_x = GridAxis(name="w1", min=-2.0, max=2.0, steps=21)
        axis_y = GridAxis(name="w2", min=-2.0, max=2.0, steps=21)
        surface = loss_landscape(InputRange.ZERO_ONE, -1.0, axis_x, axis_y, specs)
        assert [o.label for o in surface.overlays] == ["q2", "q4"]
        for overlay in surface.overlays:
            assert overlay.points.shape == (31, 2)
        w1, w2 = surface.overlays[0].points[0]
        assert w1 < 0 < w2

    def test_trajectories_need_bias_free_prelu(self):
        spec = TrialSpec(model=ModelName.GCU, input_range=InputRange.ZERO_ONE, lr=0.05, epochs=5)
        axis = GridAxis(name="w", min=-1.0, max=1.0, steps=3)
        with pytest.raises(ValueError):
            loss_landscape(InputRange.ZERO_ONE, -1.0, axis, axis, [spec])


class TestDecisionBoundary:
    def test_prelu_raster_matches_xor_at_training_points(self):
        axis_x = GridAxis(name="x1", min=-1.0, max=1.0, steps=3)
        axis_y = GridAxis(name="x2", min=-1.0, max=1.0, steps=3)
        surface = decision_boundary_raster(ModelName.PRELU, 10, 0.05, 0, InputRange.PLUS_MINUS_ONE, axis_x, axis_y)
        values = surface.values
        # rows are x2, columns x1
        assert values[0, 0] == 0.0 and values[2, 2] == 0.0
        assert values[2, 0] == 1.0 and values[0, 2] == 1.0
        assert ((values >= 0.0) & (values <= 1.0)).all()

    def test_default_axes_cover_the_inputs(self):
        x_axis, y_axis = default_input_axes(InputRange.ZERO_ONE)
        assert (x_axis.min, x_axis.max) == (-0.5, 1.5)
        x_axis, _ = default_input_axes(InputRange.PLUS_MINUS_ONE, steps=11)
        assert (x_axis.min, x_axis.max, x_axis.steps) == (-2.0, 2.0, 11)


class TestClassMargin:
    def test_vertical_boundary(self):
        x_axis, y_axis = default_input_axes(InputRange.ZERO_ONE)
        x1, _ = np.meshgrid(x_axis.values(), y_axis.values())
        surface = Surface(x_axis, y_axis, (x1 >= 0.5).astype(float))
        assert class_margin(surface, InputRange.ZERO_ONE) == pytest.approx(0.5, abs=0.01)

    def test_margin_is_in_input_spacings(self):
        x_axis, y_axis = default_input_axes(InputRange.PLUS_MINUS_ONE)
        x1, _ = np.meshgrid(x_axis.values(), y_axis.values())
        surface = Surface(x_axis, y_axis, (x1 >= 0.0).astype(float))
        assert class_margin(surface, InputRange.PLUS_MINUS_ONE) == pytest.approx(0.5, abs=0.01)

    def test_spread_counts_undecided_pixels(self):
        x_axis, y_axis = default_input_axes(InputRange.ZERO_ONE, steps=4)
        values = np.zeros((4, 4))
        values[0, :] = 1.0
        values[1, :2] = 0.5
        values[2, 0] = 0.25
        assert boundary_spread(Surface(x_axis, y_axis, values)) == 3 / 16

    def test_unanimous_raster_has_no_spread(self):
        x_axis, y_axis = default_input_axes(InputRange.ZERO_ONE)
        x1, _ = np.meshgrid(x_axis.values(), y_axis.values())
        assert boundary_spread(Surface(x_axis, y_axis, (x1 >= 0.5).astype(float))) == 0.0

    def test_no_boundary_means_infinite_margin(self):
        x_axis, y_axis = default_input_axes(InputRange.ZERO_ONE, steps=5)
        surface = Surface(x_axis, y_axis, np.ones((5, 5)))
        assert class_margin(surface, InputRange.ZERO_ONE) == math.inf
