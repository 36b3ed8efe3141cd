import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from xorlab.scalargrad import (
    Activation,
    ActivationKind,
    act_dvalue_dslope,
    act_dvalue_dx,
    act_value,
    act_value_array,
    fd_derivative,
    gcu,
    gcu_dx,
    mse,
    prelu,
    prelu_dslope,
    prelu_dx,
    relu,
    tanh_lecun,
    tanh_lecun_dx,
)

N_POINTS = 10_000

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@pytest.fixture
def points():
    rng = np.random.default_rng(42)
    x = rng.uniform(-10.0, 10.0, size=N_POINTS)
    # exact zero and both signs of tiny values
    return np.concatenate([x, [0.0, -0.0, 1e-300, -1e-300]]).tolist()


class TestPReLUIdentities:
    def test_slope_minus_one_is_abs(self, points):
        assert all(prelu(x, -1.0) == abs(x) for x in points)

    def test_slope_zero_is_relu(self, points):
        assert all(prelu(x, 0.0) == relu(x) for x in points)

    def test_slope_one_is_identity(self, points):
        assert all(prelu(x, 1.0) == x for x in points)

    def test_max_min_form(self, points):
        rng = np.random.default_rng(7)
        for x, a in zip(points, rng.uniform(-2.0, 2.0, size=len(points))):
            assert prelu(x, a) == max(0.0, x) + a * min(0.0, x)

    def test_abs_is_sum_of_mirrored_relus(self, points):
        assert all(abs(x) == relu(x) + relu(-x) for x in points)

    def test_slope_weighted_decomposition(self, points):
        rng = np.random.default_rng(11)
        slopes = rng.uniform(-1.0, 1.0, size=len(points))
        expected = np.array([prelu(x, a) for x, a in zip(points, slopes)])
        combined = np.array([a * x + (1.0 - a) * relu(x) for x, a in zip(points, slopes)])
        np.testing.assert_allclose(combined, expected, rtol=1e-15, atol=0.0)

    def test_array_form_matches_scalar(self, points):
        act = Activation.prelu(-0.3)
        values = act_value_array(act, np.array(points))
        assert values.tolist() == [prelu(x, -0.3) for x in points]


class TestDerivatives:
    def test_prelu_kink_takes_positive_branch(self):
        assert prelu_dx(0.0, -1.0) == 1.0
        assert prelu_dslope(0.0) == 0.0
        assert act_dvalue_dx(Activation.of(ActivationKind.ABS), 0.0) == 1.0

    @given(x=finite.filter(lambda v: abs(v) > 1e-3), a=st.floats(-3.0, 3.0))
    def test_prelu_matches_finite_difference(self, x, a):
        assert prelu_dx(x, a) == pytest.approx(fd_derivative(lambda z: prelu(z, a), x), rel=1e-4, abs=1e-6)
        assert prelu_dslope(x) == pytest.approx(fd_derivative(lambda s: prelu(x, s), a), rel=1e-4, abs=1e-6)

    @given(x=st.floats(-20.0, 20.0))
    def test_gcu_matches_finite_difference(self, x):
        assert gcu_dx(x) == pytest.approx(fd_derivative(gcu, x), rel=1e-4, abs=1e-6)

    @given(x=st.floats(-20.0, 20.0))
    def test_tanh_lecun_matches_finite_difference(self, x):
        assert tanh_lecun_dx(x) == pytest.approx(fd_derivative(tanh_lecun, x), rel=1e-4, abs=1e-6)

    @pytest.mark.parametrize(
        "kind", [ActivationKind.RELU, ActivationKind.LEAKY_RELU, ActivationKind.ABS, ActivationKind.IDENTITY]
    )
    @given(x=finite.filter(lambda v: abs(v) > 1e-3))
    def test_piecewise_linear_kinds_match_finite_difference(self, kind, x):
        act = Activation.of(kind)
        numeric = fd_derivative(lambda z: act_value(act, z), x)
        assert act_dvalue_dx(act, x) == pytest.approx(numeric, rel=1e-4, abs=1e-6)

    def test_gcu_is_not_monotonic(self):
        assert gcu(1.0) > gcu(2.5)

    def test_tanh_lecun_constants(self):
        assert tanh_lecun(0.0) == 0.0
        assert tanh_lecun(1.5) == pytest.approx(1.7159 * math.tanh(1.0))
        assert tanh_lecun_dx(0.0) == pytest.approx(1.7159 * 2.0 / 3.0)

    def test_slope_derivative_needs_prelu(self):
        with pytest.raises(ValueError):
            act_dvalue_dslope(Activation.of(ActivationKind.GCU), 1.0)
        assert act_dvalue_dslope(Activation.prelu(0.2), -2.0) == -2.0

    def test_fd_rejects_non_positive_step(self):
        with pytest.raises(ValueError):
            fd_derivative(gcu, 0.0, h=0.0)


class TestActivation:
    def test_prelu_needs_finite_slope(self):
        with pytest.raises(ValueError):
            Activation(ActivationKind.PRELU)
        with pytest.raises(ValueError):
            Activation.prelu(math.nan)

    def test_slope_only_on_prelu(self):
        with pytest.raises(ValueError):
            Activation(ActivationKind.RELU, 0.5)

    @pytest.mark.parametrize("kind", list(ActivationKind))
    def test_array_form_matches_scalar_for_every_kind(self, kind):
        act = Activation.prelu(0.25) if kind is ActivationKind.PRELU else Activation.of(kind)
        x = np.linspace(-3.0, 3.0, 61)
        np.testing.assert_allclose(act_value_array(act, x), [act_value(act, v) for v in x], rtol=1e-15, atol=1e-15)

    def test_leaky_relu_slope(self):
        act = Activation.of("leaky_relu")
        assert act_value(act, -2.0) == pytest.approx(-0.02)
        assert act_dvalue_dx(act, -2.0) == 0.01


class TestMSE:
    def test_value(self):
        assert mse([0.0, 1.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0]) == 0.0
        assert mse([1.0, 0.0], [0.0, 0.0]) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            mse([0.0, 1.0], [0.0])

    def test_empty_batch(self):
        with pytest.raises(ValueError):
            mse([], [])

    @given(st.lists(finite, min_size=1, max_size=8))
    def test_non_negative(self, pred):
        assert mse(pred, [0.0] * len(pred)) >= 0.0
